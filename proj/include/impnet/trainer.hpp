#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "impnet/model.hpp"
#include "impnet/optimizer.hpp"
#include "impnet/synthdata.hpp"

namespace impnet {

struct TrainOptions {
    std::uint64_t seed = 1;
    std::size_t epochs = 50;
    std::size_t batch_size = 512;
    double learning_rate = 0.01;
    double momentum = 0.9;
    double l2_decay = 0.0005;
    std::size_t threads = 1;  // worker threads; results do not depend on it
};

// Worker thread cap from IMPNET_THREADS (default 1).
std::size_t env_thread_count();

struct EpochRecord {
    std::size_t epoch = 0;       // 1-based
    double train_loss = 0.0;     // mean sample cross-entropy over the epoch
    double val_cost = 0.0;       // mean cross-entropy on the validation split
    double learning_rate = 0.0;  // rate in effect during the epoch
    bool accepted = false;
};

struct TrainResult {
    std::vector<EpochRecord> log;
    double best_val_cost = 0.0;
    std::size_t epochs_run = 0;
};

// Minibatch SGD with the per-epoch accept/reject gate. Epoch shuffles are
// derived from (seed, epoch index) so the schedule is identical whether
// previous epochs were accepted or rejected. The network is left at the
// best accepted parameters.
//
// Gradients are minibatch means accumulated over fixed 32-sample blocks
// that are reduced in block order, so the result is bit-identical for any
// thread count.
TrainResult train(Network& net, const LabeledSamples& train_set,
                  const LabeledSamples& val_set, const TrainOptions& opts);

// Mean cross-entropy over a labeled set (same block reduction).
double mean_cost(Network& net, const LabeledSamples& set, std::size_t threads);

double accuracy(Network& net, const LabeledSamples& set, std::size_t threads);

// Row-major (true class x predicted class) counts.
std::vector<std::size_t> confusion_matrix(Network& net, const LabeledSamples& set,
                                          std::size_t threads);

// Deterministic epoch log: a "# key=value" header followed by one CSV row
// per epoch. No timestamps.
std::string epoch_log_csv(const TrainOptions& opts, const std::vector<EpochRecord>& log);

}  // namespace impnet
