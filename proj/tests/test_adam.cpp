#include <doctest.h>

#include <limits>

#include "gazefield/adam.hpp"
#include "gazefield/error.hpp"
#include "oracles.hpp"

using namespace gazefield;

TEST_CASE("defaults follow the training recipe") {
    AdamOptions o;
    CHECK(o.lr == 1e-4);
    CHECK(o.weight_decay == 0.0005);
    CHECK(o.beta1 == 0.9);
    CHECK(o.beta2 == 0.999);
    CHECK(o.eps == 1e-8);
}

TEST_CASE("zero gradients without decay leave parameters unchanged") {
    std::vector<Tensor> params{Tensor({3}, {0.5, -1.0, 2.0}, true)};
    params[0].ensure_grad();
    AdamState state(params, {.lr = 0.1, .weight_decay = 0.0});
    adam_step(params, state);
    CHECK(std::vector<double>(params[0].values().begin(), params[0].values().end()) ==
          std::vector<double>{0.5, -1.0, 2.0});
    CHECK(state.step() == 1);
}

TEST_CASE("the first step moves by lr because bias correction cancels") {
    std::vector<Tensor> params{Tensor::scalar(1.0, true)};
    params[0].ensure_grad();
    params[0].grad()[0] = 1.0;
    AdamState state(params, {.lr = 0.1, .weight_decay = 0.0});
    CHECK(state.step() == 0);
    adam_step(params, state);
    CHECK(params[0].item() == doctest::Approx(1.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-15));
    CHECK(state.step() == 1);
}

TEST_CASE("a three-step trajectory on a quadratic matches a scalar reference") {
    // f(p) = (p − 3)², grad 2(p − 3), with L2 decay.
    const AdamOptions opts{.lr = 0.05, .beta1 = 0.9, .beta2 = 0.999, .eps = 1e-8, .weight_decay = 0.01};
    std::vector<Tensor> params{Tensor::scalar(0.5, true)};
    params[0].ensure_grad();
    AdamState state(params, opts);
    oracle::ScalarAdam ref{opts.lr, opts.beta1, opts.beta2, opts.eps, opts.weight_decay};
    double p_ref = 0.5;
    for (int i = 0; i < 3; ++i) {
        params[0].grad()[0] = 2.0 * (params[0].item() - 3.0);
        adam_step(params, state);
        p_ref = ref.step(p_ref, 2.0 * (p_ref - 3.0));
        CHECK(std::abs(params[0].item() - p_ref) < 1e-10);
    }
    CHECK(state.first_moment(0)[0] == doctest::Approx(ref.m).epsilon(1e-12));
    CHECK(state.second_moment(0)[0] == doctest::Approx(ref.v).epsilon(1e-12));
}

TEST_CASE("missing gradients and non-finite updates are errors") {
    std::vector<Tensor> params{Tensor::scalar(1.0, true)};
    AdamState state(params);
    CHECK_THROWS_AS(adam_step(params, state), Error);
    params[0].ensure_grad();
    params[0].grad()[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(adam_step(params, state), NumericError);
    CHECK(params[0].item() == 1.0);
}
