#include <doctest.h>

#include <cmath>
#include <limits>

#include "gazefield/error.hpp"
#include "gazefield/ops.hpp"
#include "gazefield/tape.hpp"
#include "oracles.hpp"

using namespace gazefield;

TEST_CASE("tensor construction validates shape and size") {
    CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), ShapeError);
    CHECK_THROWS_AS(Tensor({2, 0}, {}), ShapeError);
    Tensor t({2, 3}, std::vector<double>(6, 1.0));
    CHECK(t.size() == 6);
    CHECK_FALSE(t.has_grad());
    t.ensure_grad();
    CHECK(t.grad().size() == t.size());
}

TEST_CASE("copies share storage and clone does not") {
    Tensor a = Tensor::full({3}, 2.0);
    Tensor b = a;
    b.values()[0] = 7.0;
    CHECK(a.values()[0] == 7.0);
    Tensor c = a.clone();
    c.values()[1] = -1.0;
    CHECK(a.values()[1] == 2.0);
    CHECK_FALSE(c.same_storage(a));
}

TEST_CASE("conv2d with an identity 1x1 kernel returns its input") {
    Tape tape(Tape::Mode::Inference);
    Tensor x = Tensor::full({1, 1, 3, 3}, 1.0);
    Tensor w = Tensor::full({1, 1, 1, 1}, 1.0);
    Tensor y = ops::conv2d(tape, x, w, Tensor(), 1, 0);
    CHECK(y.shape() == Shape{1, 1, 3, 3});
    for (double v : y.values()) CHECK(v == 1.0);
}

TEST_CASE("sigmoid(0) is one half") {
    Tape tape(Tape::Mode::Inference);
    CHECK(ops::sigmoid(tape, Tensor::scalar(0.0)).item() == 0.5);
}

TEST_CASE("conv2d matches the nested-loop oracle") {
    std::mt19937_64 rng(3);
    for (auto [stride, pad] : {std::pair{1, 1}, std::pair{2, 1}, std::pair{1, 0}, std::pair{2, 0}}) {
        Tensor x = oracle::random_tensor(rng, {1, 2, 5, 5});
        Tensor w = oracle::random_tensor(rng, {3, 2, 3, 3});
        Tensor b = oracle::random_tensor(rng, {3});
        Tape tape(Tape::Mode::Inference);
        Tensor y = ops::conv2d(tape, x, w, b, stride, pad);
        const auto want = oracle::conv2d(x.values(), w.values(), b.values(), 1, 2, 5, 5, 3, 3, stride, pad);
        REQUIRE(y.size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i) CHECK(y.values()[i] == doctest::Approx(want[i]).epsilon(1e-9));
    }
}

TEST_CASE("backward of sum gives ones") {
    Tape tape;
    Tensor x({3}, {0.3, -2.0, 5.0}, true);
    tape.backward(ops::sum(tape, x));
    for (double g : x.grad()) CHECK(g == 1.0);
}

TEST_CASE("backward of sigmoid(w)*c is c*s*(1-s)") {
    const double w0 = 0.7, c = -1.3;
    Tape tape;
    Tensor w = Tensor::scalar(w0, true);
    tape.backward(ops::scale(tape, ops::sigmoid(tape, w), c));
    const double s = 1.0 / (1.0 + std::exp(-w0));
    CHECK(w.grad()[0] == doctest::Approx(c * s * (1.0 - s)).epsilon(1e-14));
}

TEST_CASE("two-layer network gradients match central differences") {
    std::mt19937_64 rng(11);
    Tensor x = oracle::random_tensor(rng, {4, 3});
    Tensor w1 = oracle::random_tensor(rng, {3, 5}, -1, 1, true);
    Tensor b1 = oracle::random_tensor(rng, {5}, 0.1, 0.5, true);
    Tensor w2 = oracle::random_tensor(rng, {5, 2}, -1, 1, true);
    auto forward = [&](Tape& t) {
        Tensor h = ops::sigmoid(t, ops::bias_add(t, ops::matmul(t, x, w1), b1));
        return ops::mean(t, ops::pow(t, ops::matmul(t, h, w2), 2.0));
    };
    Tape tape;
    tape.backward(forward(tape));
    auto value = [&] {
        Tape t(Tape::Mode::Inference);
        return forward(t).item();
    };
    for (Tensor p : {w1, b1, w2}) {
        const auto numeric = oracle::numeric_grad(value, p);
        CHECK(oracle::max_rel_error(p.grad(), numeric) < 1e-4);
    }
}

TEST_CASE("leaves the loss does not reach get a zero gradient") {
    Tape tape;
    Tensor used = Tensor::full({2}, 1.0, true);
    Tensor unused = Tensor::full({2}, 1.0, true);
    Tensor side = ops::scale(tape, unused, 2.0);
    (void)side;
    tape.backward(ops::sum(tape, used));
    REQUIRE(unused.has_grad());
    for (double g : unused.grad()) CHECK(g == 0.0);
}

TEST_CASE("gradients accumulate into leaves that already hold one") {
    Tensor x = Tensor::full({2}, 1.0, true);
    for (int i = 0; i < 2; ++i) {
        Tape tape;
        tape.backward(ops::sum(tape, x));
    }
    for (double g : x.grad()) CHECK(g == 2.0);
}

TEST_CASE("backward rejects consumed tapes and non-scalar losses") {
    Tape tape;
    Tensor x = Tensor::full({2}, 1.0, true);
    Tensor y = ops::scale(tape, x, 3.0);
    CHECK_THROWS_AS(tape.backward(y), ShapeError);
    Tensor s = ops::sum(tape, y);
    tape.backward(s);
    CHECK(tape.consumed());
    CHECK_THROWS_AS(tape.backward(s), Error);
}

TEST_CASE("the tape replays entries in reverse order") {
    Tape tape;
    Tensor x = Tensor::full({2, 2}, 0.5, true);
    Tensor y = ops::relu(tape, ops::scale(tape, x, 2.0));
    Tensor z = ops::mean(tape, y);
    CHECK(tape.kinds() == std::vector<OpKind>{OpKind::Scale, OpKind::Relu, OpKind::Mean});
    tape.backward(z);
    for (double g : x.grad()) CHECK(g == doctest::Approx(0.5));
}

TEST_CASE("inference tapes record nothing") {
    Tape tape(Tape::Mode::Inference);
    Tensor x = Tensor::full({2}, 1.0, true);
    ops::sum(tape, x);
    CHECK(tape.size() == 0);
}

TEST_CASE("op_forward reports shape mismatches, missing attributes and unknown kinds") {
    Tape tape;
    const std::vector<Tensor> bad{Tensor::zeros({2, 3}), Tensor::zeros({2, 3})};
    CHECK_THROWS_AS(op_forward(tape, OpKind::MatMul, bad), ShapeError);
    const std::vector<Tensor> one{Tensor::zeros({2, 3})};
    CHECK_THROWS_AS(op_forward(tape, OpKind::Scale, one), ShapeError);
    CHECK_THROWS_AS(op_forward(tape, static_cast<OpKind>(999), one), Error);
    CHECK_FALSE(op_from_name("no_such_op").has_value());
    for (OpKind k : all_op_kinds()) CHECK(op_from_name(op_name(k)) == k);
}

TEST_CASE("non-finite outputs are errors") {
    Tape tape;
    Tensor x = Tensor::full({2}, std::numeric_limits<double>::max(), true);
    CHECK_THROWS_AS(ops::scale(tape, x, 10.0), NumericError);
    Tensor neg = Tensor::full({1}, -1.0, true);
    CHECK_THROWS_AS(ops::pow(tape, neg, 0.5), NumericError);
}

TEST_CASE("clamp_min passes zero gradient exactly at the clamp point") {
    Tape tape;
    Tensor x({3}, {-1.0, 0.0, 2.0}, true);
    tape.backward(ops::sum(tape, ops::clamp_min(tape, x, 0.0)));
    CHECK(x.grad()[0] == 0.0);
    CHECK(x.grad()[1] == 0.0);
    CHECK(x.grad()[2] == 1.0);
}

TEST_CASE("l2_normalize returns unit rows") {
    std::mt19937_64 rng(5);
    Tape tape(Tape::Mode::Inference);
    Tensor y = ops::l2_normalize(tape, oracle::random_tensor(rng, {6, 2}));
    for (std::size_t r = 0; r < 6; ++r) {
        CHECK(std::hypot(y.values()[2 * r], y.values()[2 * r + 1]) == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("concat and upsample place values where expected") {
    Tape tape(Tape::Mode::Inference);
    Tensor a({1, 1, 1, 2}, {1, 2});
    Tensor b({1, 1, 1, 2}, {3, 4});
    Tensor c = ops::concat(tape, {a, b});
    CHECK(c.shape() == Shape{1, 2, 1, 2});
    CHECK(std::vector<double>(c.values().begin(), c.values().end()) == std::vector<double>{1, 2, 3, 4});
    Tensor u = ops::upsample(tape, a, 2);
    CHECK(std::vector<double>(u.values().begin(), u.values().end()) == std::vector<double>{1, 1, 2, 2, 1, 1, 2, 2});
}
