#include "impnet/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "impnet/io.hpp"
#include "impnet/random.hpp"

namespace impnet {

namespace {

// Accumulation block: partial sums are formed per block (sample order) and
// reduced in block order, independent of scheduling.
constexpr std::size_t kBlockSamples = 32;

struct BlockRange {
    std::size_t begin = 0;
    std::size_t end = 0;
};

std::vector<BlockRange> make_blocks(std::size_t count) {
    std::vector<BlockRange> blocks;
    for (std::size_t b = 0; b < count; b += kBlockSamples) {
        blocks.push_back({b, std::min(b + kBlockSamples, count)});
    }
    return blocks;
}

// Runs `body(block_index, worker_net)` over all blocks. Worker networks are
// value copies of `net`, so train-mode caches stay thread-local.
void for_each_block(const Network& net, std::size_t block_count, std::size_t threads,
                    const std::function<void(std::size_t, Network&)>& body) {
    threads = std::max<std::size_t>(1, threads);
    if (threads == 1 || block_count <= 1) {
        Network worker = net;
        for (std::size_t b = 0; b < block_count; ++b) body(b, worker);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mu;
    const std::size_t n_workers = std::min(threads, block_count);
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) {
        pool.emplace_back([&]() {
            Network worker = net;
            try {
                for (std::size_t b = next.fetch_add(1); b < block_count;
                     b = next.fetch_add(1)) {
                    body(b, worker);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

struct BatchGradient {
    std::vector<Tensor> sum;  // parameter-aligned gradient sums
    double loss_sum = 0.0;
};

// Gradient and loss sums over samples[perm[begin..end)].
BatchGradient batch_gradient(const Network& net, const LabeledSamples& samples,
                             const std::vector<std::size_t>& perm, std::size_t begin,
                             std::size_t end, std::size_t threads) {
    const std::size_t count = end - begin;
    const auto blocks = make_blocks(count);
    std::vector<BatchGradient> partial(blocks.size());

    for_each_block(net, blocks.size(), threads, [&](std::size_t b, Network& worker) {
        BatchGradient acc;
        for (std::size_t s = blocks[b].begin; s < blocks[b].end; ++s) {
            const std::size_t idx = perm[begin + s];
            worker.forward(samples.tensors[idx], Mode::Train);
            auto back = worker.backward(static_cast<std::size_t>(samples.labels[idx]));
            acc.loss_sum += back.loss;
            if (acc.sum.empty()) {
                acc.sum = std::move(back.grads);
            } else {
                for (std::size_t k = 0; k < acc.sum.size(); ++k) {
                    double* a = acc.sum[k].data();
                    const double* g = back.grads[k].data();
                    for (std::size_t n = 0; n < acc.sum[k].size(); ++n) a[n] += g[n];
                }
            }
        }
        partial[b] = std::move(acc);
    });

    BatchGradient total;
    for (auto& p : partial) {
        total.loss_sum += p.loss_sum;
        if (total.sum.empty()) {
            total.sum = std::move(p.sum);
        } else {
            for (std::size_t k = 0; k < total.sum.size(); ++k) {
                double* a = total.sum[k].data();
                const double* g = p.sum[k].data();
                for (std::size_t n = 0; n < total.sum[k].size(); ++n) a[n] += g[n];
            }
        }
    }
    return total;
}

std::vector<std::size_t> epoch_permutation(std::uint64_t seed, std::size_t epoch,
                                           std::size_t count) {
    std::vector<std::size_t> perm(count);
    for (std::size_t i = 0; i < count; ++i) perm[i] = i;
    SplitMix64 rng(derive_seed(seed, 0xE10C0000ULL + epoch));
    for (std::size_t i = count; i > 1; --i) {
        const std::size_t j = rng.next_u64() % i;
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

void check_labels(const Network& net, const LabeledSamples& set) {
    const std::size_t classes = net.classes();
    for (int label : set.labels) {
        if (label < 0 || static_cast<std::size_t>(label) >= classes) {
            throw ShapeError("label " + std::to_string(label) +
                             " out of range for a " + std::to_string(classes) +
                             "-class network");
        }
    }
}

}  // namespace

std::size_t env_thread_count() {
    if (const char* env = std::getenv("IMPNET_THREADS")) {
        const long v = std::atol(env);
        if (v >= 1) return static_cast<std::size_t>(v);
    }
    return 1;
}

double mean_cost(Network& net, const LabeledSamples& set, std::size_t threads) {
    if (set.tensors.empty()) throw ShapeError("mean_cost over an empty set");
    check_labels(net, set);
    const auto blocks = make_blocks(set.tensors.size());
    std::vector<double> partial(blocks.size(), 0.0);
    for_each_block(net, blocks.size(), threads, [&](std::size_t b, Network& worker) {
        double acc = 0.0;
        for (std::size_t s = blocks[b].begin; s < blocks[b].end; ++s) {
            worker.forward(set.tensors[s], Mode::Train);
            acc += worker.cached_loss(static_cast<std::size_t>(set.labels[s]));
        }
        partial[b] = acc;
    });
    double total = 0.0;
    for (double v : partial) total += v;
    return total / static_cast<double>(set.tensors.size());
}

std::vector<std::size_t> confusion_matrix(Network& net, const LabeledSamples& set,
                                          std::size_t threads) {
    check_labels(net, set);
    const std::size_t classes = net.classes();
    const auto blocks = make_blocks(set.tensors.size());
    std::vector<std::vector<std::size_t>> partial(blocks.size());
    for_each_block(net, blocks.size(), threads, [&](std::size_t b, Network& worker) {
        std::vector<std::size_t> acc(classes * classes, 0);
        for (std::size_t s = blocks[b].begin; s < blocks[b].end; ++s) {
            const auto scores = worker.forward(set.tensors[s], Mode::Eval);
            const std::size_t pred = static_cast<std::size_t>(
                std::max_element(scores.begin(), scores.end()) - scores.begin());
            acc[static_cast<std::size_t>(set.labels[s]) * classes + pred] += 1;
        }
        partial[b] = std::move(acc);
    });
    std::vector<std::size_t> total(classes * classes, 0);
    for (const auto& p : partial) {
        for (std::size_t i = 0; i < total.size(); ++i) total[i] += p[i];
    }
    return total;
}

double accuracy(Network& net, const LabeledSamples& set, std::size_t threads) {
    if (set.tensors.empty()) throw ShapeError("accuracy over an empty set");
    const auto confusion = confusion_matrix(net, set, threads);
    const std::size_t classes = net.classes();
    std::size_t hits = 0;
    for (std::size_t c = 0; c < classes; ++c) hits += confusion[c * classes + c];
    return static_cast<double>(hits) / static_cast<double>(set.tensors.size());
}

TrainResult train(Network& net, const LabeledSamples& train_set,
                  const LabeledSamples& val_set, const TrainOptions& opts) {
    if (train_set.tensors.empty()) throw ShapeError("empty training set");
    if (val_set.tensors.empty()) throw ShapeError("empty validation set");
    if (opts.batch_size == 0) throw ConfigError("batch size must be >= 1");
    check_labels(net, train_set);

    auto params = net.parameters();
    SgdState state;
    state.learning_rate = opts.learning_rate;
    state.momentum = opts.momentum;
    state.l2_decay = opts.l2_decay;
    sgd_init(state, params);
    EpochGate gate(params, state, opts.epochs);

    TrainResult result;
    const std::size_t n = train_set.tensors.size();

    while (!gate.done()) {
        const std::size_t epoch = gate.epochs_seen() + 1;
        const double lr_used = state.learning_rate;
        const auto perm = epoch_permutation(opts.seed, epoch, n);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += opts.batch_size) {
            const std::size_t end = std::min(start + opts.batch_size, n);
            BatchGradient batch =
                batch_gradient(net, train_set, perm, start, end, opts.threads);
            const double inv = 1.0 / static_cast<double>(end - start);
            for (auto& g : batch.sum) {
                for (double& v : g.values()) v *= inv;
            }
            sgd_step(params, batch.sum, state);
            loss_sum += batch.loss_sum;
        }
        const double train_loss = loss_sum / static_cast<double>(n);
        if (!std::isfinite(train_loss)) {
            throw NumericError("non-finite training loss at epoch " +
                               std::to_string(epoch));
        }
        const double val_cost = mean_cost(net, val_set, opts.threads);
        if (!std::isfinite(val_cost)) {
            throw NumericError("non-finite validation cost at epoch " +
                               std::to_string(epoch));
        }

        const GateDecision decision = gate.observe(val_cost, params, state);
        result.log.push_back({epoch, train_loss, val_cost, lr_used,
                              decision == GateDecision::Accept});
    }

    // Leave the network at the best accepted parameters.
    for (std::size_t i = 0; i < params.size(); ++i) {
        *params[i].value = gate.best_params()[i];
    }
    result.best_val_cost = gate.best_cost();
    result.epochs_run = gate.epochs_seen();
    return result;
}

std::string epoch_log_csv(const TrainOptions& opts, const std::vector<EpochRecord>& log) {
    std::ostringstream out;
    out << "# impnet train log\n";
    out << "# lr=" << format_double(opts.learning_rate) << " batch=" << opts.batch_size
        << " epochs=" << opts.epochs << " seed=" << opts.seed
        << " momentum=" << format_double(opts.momentum)
        << " l2_decay=" << format_double(opts.l2_decay) << "\n";
    out << "epoch,train_loss,val_cost,lr,decision\n";
    for (const auto& rec : log) {
        out << rec.epoch << "," << format_double(rec.train_loss) << ","
            << format_double(rec.val_cost) << "," << format_double(rec.learning_rate)
            << "," << (rec.accepted ? "accept" : "reject") << "\n";
    }
    return out.str();
}

}  // namespace impnet
