#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "impnet/tensor.hpp"

namespace impnet {

// Named mutable view of one parameter tensor. Networks hand these out in a
// fixed order (layer order; filters/weight before biases) and every
// aligned structure (gradients, velocity, snapshots) follows that order.
struct ParamRef {
    std::string name;
    Tensor* value = nullptr;
};

// SGD with classical momentum and L2 decay folded into the gradient:
//   v     <- momentum * v - lr * (grad + l2_decay * param)
//   param <- param + v
// Gradients are expected to be the minibatch mean.
struct SgdState {
    double learning_rate = 0.01;
    double momentum = 0.9;
    double l2_decay = 0.0005;
    std::vector<Tensor> velocity;  // mirrors parameter shapes
};

void sgd_init(SgdState& state, const std::vector<ParamRef>& params);

void sgd_step(const std::vector<ParamRef>& params, const std::vector<Tensor>& grads,
              SgdState& state);

enum class GateDecision { Accept, RejectAndHalve };

// Per-epoch accept/reject schedule: an epoch is kept only if the validation
// cost strictly decreased; otherwise parameters and velocity are restored
// from the last accepted snapshot and the learning rate is halved.
class EpochGate {
public:
    EpochGate(const std::vector<ParamRef>& params, const SgdState& state,
              std::size_t max_epochs = 50);

    GateDecision observe(double new_cost, const std::vector<ParamRef>& params,
                         SgdState& state);

    double best_cost() const { return best_cost_; }
    std::size_t epochs_seen() const { return epochs_; }
    bool done() const { return epochs_ >= max_epochs_; }
    std::size_t max_epochs() const { return max_epochs_; }
    const std::vector<Tensor>& best_params() const { return best_params_; }

private:
    void snapshot(const std::vector<ParamRef>& params, const SgdState& state);

    std::vector<Tensor> best_params_;
    std::vector<Tensor> best_velocity_;
    double best_cost_;
    std::size_t epochs_ = 0;
    std::size_t max_epochs_;
};

}  // namespace impnet
