#include "impnet/optimizer.hpp"

#include <cmath>
#include <limits>

namespace impnet {

void sgd_init(SgdState& state, const std::vector<ParamRef>& params) {
    state.velocity.clear();
    state.velocity.reserve(params.size());
    for (const auto& p : params) state.velocity.emplace_back(p.value->shape());
}

void sgd_step(const std::vector<ParamRef>& params, const std::vector<Tensor>& grads,
              SgdState& state) {
    if (params.size() != grads.size() || params.size() != state.velocity.size()) {
        throw ShapeError("sgd_step parameter/gradient/velocity count mismatch");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& param = *params[i].value;
        const Tensor& grad = grads[i];
        Tensor& vel = state.velocity[i];
        if (grad.shape() != param.shape() || vel.shape() != param.shape()) {
            throw ShapeError("sgd_step shape mismatch for " + params[i].name);
        }
        double* p = param.data();
        const double* g = grad.data();
        double* v = vel.data();
        for (std::size_t n = 0; n < param.size(); ++n) {
            v[n] = state.momentum * v[n] -
                   state.learning_rate * (g[n] + state.l2_decay * p[n]);
            p[n] += v[n];
            if (!std::isfinite(p[n])) {
                throw NumericError("non-finite update in " + params[i].name);
            }
        }
    }
}

EpochGate::EpochGate(const std::vector<ParamRef>& params, const SgdState& state,
                     std::size_t max_epochs)
    : best_cost_(std::numeric_limits<double>::infinity()), max_epochs_(max_epochs) {
    snapshot(params, state);
}

void EpochGate::snapshot(const std::vector<ParamRef>& params, const SgdState& state) {
    best_params_.clear();
    best_velocity_.clear();
    for (const auto& p : params) best_params_.push_back(*p.value);
    best_velocity_ = state.velocity;
}

GateDecision EpochGate::observe(double new_cost, const std::vector<ParamRef>& params,
                                SgdState& state) {
    ++epochs_;
    if (new_cost < best_cost_) {
        best_cost_ = new_cost;
        snapshot(params, state);
        return GateDecision::Accept;
    }
    // Strict decrease required: a tie rejects. Restore both parameters and
    // velocity so the search resumes exactly from the accepted state.
    for (std::size_t i = 0; i < params.size(); ++i) *params[i].value = best_params_[i];
    state.velocity = best_velocity_;
    state.learning_rate *= 0.5;
    return GateDecision::RejectAndHalve;
}

}  // namespace impnet
