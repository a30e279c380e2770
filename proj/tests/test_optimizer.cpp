#include <doctest.h>

#include <cmath>

#include "impnet/optimizer.hpp"
#include "impnet/random.hpp"

using namespace impnet;

namespace {

struct OneParam {
    Tensor value{Shape(1, 1, 1)};
    std::vector<ParamRef> refs() { return {{"p", &value}}; }
};

std::vector<Tensor> grad1(double g) {
    Tensor t(Shape(1, 1, 1));
    t.values() = {g};
    return {t};
}

}  // namespace

TEST_CASE("sgd fixed point") {
    OneParam p;
    p.value.values() = {1.0};
    SgdState state;
    state.learning_rate = 0.01;
    state.momentum = 0.0;
    state.l2_decay = 0.0;
    auto refs = p.refs();
    sgd_init(state, refs);
    sgd_step(refs, grad1(0.0), state);
    CHECK(p.value.values()[0] == 1.0);
}

TEST_CASE("plain sgd step") {
    OneParam p;
    SgdState state;
    state.learning_rate = 0.01;
    state.momentum = 0.0;
    state.l2_decay = 0.0;
    auto refs = p.refs();
    sgd_init(state, refs);
    sgd_step(refs, grad1(1.0), state);
    CHECK(p.value.values()[0] == -0.01);
    CHECK(state.velocity[0].values()[0] == -0.01);
}

TEST_CASE("momentum recursion over two steps") {
    OneParam p;
    SgdState state;
    state.learning_rate = 0.01;
    state.momentum = 0.9;
    state.l2_decay = 0.0;
    auto refs = p.refs();
    sgd_init(state, refs);
    sgd_step(refs, grad1(1.0), state);
    sgd_step(refs, grad1(1.0), state);
    // v2 = 0.9 * (-0.01) - 0.01 = -0.019
    CHECK(state.velocity[0].values()[0] == doctest::Approx(-0.019).epsilon(1e-15));
}

TEST_CASE("l2 decay augments the gradient") {
    OneParam p;
    p.value.values() = {2.0};
    SgdState state;
    state.learning_rate = 0.1;
    state.momentum = 0.0;
    state.l2_decay = 0.5;
    auto refs = p.refs();
    sgd_init(state, refs);
    sgd_step(refs, grad1(0.0), state);
    // v = -0.1 * (0 + 0.5 * 2) = -0.1
    CHECK(p.value.values()[0] == doctest::Approx(1.9).epsilon(1e-15));
}

TEST_CASE("sgd errors") {
    OneParam p;
    SgdState state;
    auto refs = p.refs();
    sgd_init(state, refs);
    Tensor bad(Shape(2, 1, 1));
    CHECK_THROWS_AS(sgd_step(refs, {bad}, state), ShapeError);
    CHECK_THROWS_AS(sgd_step(refs, {}, state), ShapeError);

    state.learning_rate = 1.0;
    CHECK_THROWS_AS(
        sgd_step(refs, grad1(std::numeric_limits<double>::infinity()), state),
        NumericError);
}

TEST_CASE("quadratic descent below the curvature threshold") {
    // loss = 0.5 * a * x^2, gradient a*x; any lr < 2/a reduces the loss.
    for (double lr : {0.01, 0.5, 1.8}) {
        OneParam p;
        p.value.values() = {3.0};
        SgdState state;
        state.learning_rate = lr;
        state.momentum = 0.0;
        state.l2_decay = 0.0;
        auto refs = p.refs();
        sgd_init(state, refs);
        const double a = 1.0;
        double prev_loss = 0.5 * a * 9.0;
        for (int step = 0; step < 5; ++step) {
            sgd_step(refs, grad1(a * p.value.values()[0]), state);
            const double x = p.value.values()[0];
            const double loss = 0.5 * a * x * x;
            CHECK(loss < prev_loss);
            prev_loss = loss;
        }
    }
}

TEST_CASE("epoch gate accept and reject") {
    GaussianSource src(3, 0.0, 1.0);
    Tensor value = gaussian_fill(Shape(2, 3, 1), src);
    std::vector<ParamRef> refs = {{"w", &value}};
    SgdState state;
    state.learning_rate = 0.01;
    sgd_init(state, refs);
    EpochGate gate(refs, state, 50);

    // Accept: cost decreases against +inf.
    value.values()[0] = 1.0;
    CHECK(gate.observe(1.0, refs, state) == GateDecision::Accept);
    CHECK(gate.best_cost() == 1.0);

    // Accept again on strict decrease.
    const Tensor at_090 = value;
    CHECK(gate.observe(0.9, refs, state) == GateDecision::Accept);

    // Reject: model and velocity restored bit-exactly, lr halved.
    value.values()[1] = 123.0;
    state.velocity[0].values()[0] = 55.0;
    CHECK(gate.observe(1.1, refs, state) == GateDecision::RejectAndHalve);
    CHECK(state.learning_rate == 0.005);
    CHECK(value == at_090);
    CHECK(state.velocity[0].values()[0] == 0.0);

    // Tie rejects too (strict decrease required).
    CHECK(gate.observe(0.9, refs, state) == GateDecision::RejectAndHalve);
    CHECK(state.learning_rate == 0.0025);

    CHECK(gate.epochs_seen() == 4);
    CHECK_FALSE(gate.done());
}

TEST_CASE("learning rate after n rejections is exactly lr * 2^-n") {
    OneParam p;
    SgdState state;
    state.learning_rate = 0.01;
    auto refs = p.refs();
    sgd_init(state, refs);
    EpochGate gate(refs, state, 50);
    gate.observe(1.0, refs, state);  // accept
    for (int n = 1; n <= 10; ++n) {
        gate.observe(2.0, refs, state);  // reject
        CHECK(state.learning_rate == 0.01 * std::exp2(-n));
    }
}

TEST_CASE("gate max epochs") {
    OneParam p;
    SgdState state;
    auto refs = p.refs();
    sgd_init(state, refs);
    EpochGate gate(refs, state, 3);
    for (int i = 0; i < 3; ++i) {
        CHECK_FALSE(gate.done());
        gate.observe(1.0 / (i + 1.0), refs, state);
    }
    CHECK(gate.done());
}
