#include <doctest.h>

#include <cmath>

#include "gazefield/checkpoint.hpp"
#include "gazefield/error.hpp"
#include "gazefield/model.hpp"
#include "gazefield/ops.hpp"
#include "oracles.hpp"

using namespace gazefield;
using model::GazeModel;

namespace {

model::ModelConfig tiny_config() {
    model::ModelConfig c;
    c.scene_resolution = 16;
    c.heatmap_resolution = 8;
    c.direction.crop_resolution = 8;
    c.direction.conv_channels = {3, 4, 4};
    c.direction.embedding = 6;
    c.direction.position_width = 5;
    c.direction.fusion_width = 6;
    c.heatmap.encoder_channels = {4, 5, 5};
    c.heatmap.decoder_channels = {5, 4};
    c.heatmap.output_bias = -1.0;
    return c;
}

struct Inputs {
    Tensor scenes, crops, heads;
};

Inputs random_inputs(std::mt19937_64& rng, const model::ModelConfig& c, std::size_t n) {
    const std::size_t s = c.scene_resolution, k = c.direction.crop_resolution;
    return {oracle::random_tensor(rng, {n, 3, s, s}, 0, 1), oracle::random_tensor(rng, {n, 3, k, k}, 0, 1),
            oracle::random_tensor(rng, {n, 2}, 0.2, 0.8)};
}

// Biases start at zero; a little noise keeps ReLU inputs off the kink so
// finite differences are meaningful.
void jitter_biases(GazeModel& m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    for (auto& p : m.parameters())
        if (p.name.ends_with(".bias"))
            for (double& v : p.tensor.values()) v += u(rng);
}

double max_rel_on_subset(const std::function<double()>& f, Tensor t, std::span<const double> analytic,
                         std::size_t count, std::mt19937_64& rng) {
    auto v = t.values();
    std::vector<double> a, num;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = rng() % v.size();
        const double orig = v[j];
        v[j] = orig + 1e-5;
        const double up = f();
        v[j] = orig - 1e-5;
        const double down = f();
        v[j] = orig;
        num.push_back((up - down) / 2e-5);
        a.push_back(analytic[j]);
    }
    return oracle::max_rel_error(a, num);
}

}  // namespace

TEST_CASE("default and invalid configurations") {
    CHECK_NOTHROW(model::ModelConfig{}.validate());
    auto c = model::ModelConfig{};
    c.scene_resolution = 60;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.heatmap_resolution = 10;
    c.scene_resolution = 60;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.gammas = {};
    CHECK_THROWS_AS(GazeModel{c}, ConfigError);
}

TEST_CASE("parameters are named by pathway") {
    GazeModel m(tiny_config());
    std::size_t dir = 0, heat = 0;
    for (const auto& p : m.parameters()) {
        if (p.name.starts_with("direction.")) ++dir;
        else if (p.name.starts_with("heatmap.")) ++heat;
        else FAIL("unexpected parameter " << p.name);
    }
    CHECK(dir == m.direction_parameters().size());
    CHECK(heat == m.heatmap_parameters().size());
    CHECK(dir + heat == m.parameter_tensors().size());
}

TEST_CASE("the direction pathway outputs unit vectors") {
    std::mt19937_64 rng(40);
    const auto c = tiny_config();
    GazeModel m(c, 3);
    const auto in = random_inputs(rng, c, 5);
    Tape tape(Tape::Mode::Inference);
    const Tensor d = m.direction_forward(tape, in.crops, in.heads);
    CHECK(d.shape() == Shape{5, 2});
    for (std::size_t i = 0; i < 5; ++i) CHECK(std::hypot(d.values()[2 * i], d.values()[2 * i + 1]) == doctest::Approx(1.0));
}

TEST_CASE("forward has the documented extents and range, and is deterministic") {
    std::mt19937_64 rng(41);
    const auto c = tiny_config();
    GazeModel a(c, 9), b(c, 9), other(c, 10);
    const auto in = random_inputs(rng, c, 3);
    Tape t1(Tape::Mode::Inference), t2(Tape::Mode::Inference), t3(Tape::Mode::Inference);
    const auto oa = a.forward(t1, in.scenes, in.crops, in.heads);
    const auto ob = b.forward(t2, in.scenes, in.crops, in.heads);
    const auto oc = other.forward(t3, in.scenes, in.crops, in.heads);
    CHECK(oa.fields.shape() == Shape{3, 3, 16, 16});
    CHECK(oa.heatmap.shape() == Shape{3, 1, 8, 8});
    for (double v : oa.heatmap.values()) CHECK((v > 0.0 && v < 1.0));
    CHECK(std::equal(oa.heatmap.values().begin(), oa.heatmap.values().end(), ob.heatmap.values().begin()));
    CHECK_FALSE(std::equal(oa.heatmap.values().begin(), oa.heatmap.values().end(), oc.heatmap.values().begin()));
}

TEST_CASE("the field stack follows the predicted direction") {
    std::mt19937_64 rng(42);
    const auto c = tiny_config();
    GazeModel m(c, 1);
    const auto in = random_inputs(rng, c, 2);
    Tape tape(Tape::Mode::Inference);
    const auto out = m.forward(tape, in.scenes, in.crops, in.heads);
    for (std::size_t n = 0; n < 2; ++n) {
        const auto d = out.direction.values();
        const auto h = in.heads.values();
        for (std::size_t r = 0; r < 16; r += 5)
            for (std::size_t q = 0; q < 16; q += 3) {
                const double want = oracle::field_value(h[2 * n], h[2 * n + 1], (q + 0.5) / 16, (r + 0.5) / 16,
                                                        d[2 * n], d[2 * n + 1]);
                CHECK(out.fields.values()[((n * 3 + 2) * 16 + r) * 16 + q] == doctest::Approx(want).epsilon(1e-9));
            }
    }
}

TEST_CASE("end-to-end gradients match finite differences") {
    std::mt19937_64 rng(43);
    const auto c = tiny_config();
    GazeModel m(c, 4);
    jitter_biases(m, rng);
    const auto in = random_inputs(rng, c, 2);
    const Tensor dir_target = oracle::random_tensor(rng, {2, 2});
    const Tensor map_target = oracle::random_tensor(rng, {2, 1, 8, 8}, 0, 0.2);
    auto loss = [&](Tape& t) {
        const auto o = m.forward(t, in.scenes, in.crops, in.heads);
        return model::total_loss(t, model::direction_loss(t, o.direction, dir_target),
                                 model::heatmap_loss(t, o.heatmap, map_target), 0.5);
    };
    Tape tape;
    tape.backward(loss(tape));
    auto f = [&] {
        Tape t(Tape::Mode::Inference);
        return loss(t).item();
    };
    for (const auto& p : m.parameters()) {
        INFO(p.name);
        CHECK(max_rel_on_subset(f, p.tensor, p.tensor.grad(), 4, rng) < 1e-3);
    }
}

TEST_CASE("the heatmap loss reaches the direction pathway through the field") {
    std::mt19937_64 rng(44);
    const auto c = tiny_config();
    GazeModel m(c, 5);
    jitter_biases(m, rng);
    const auto in = random_inputs(rng, c, 2);
    const Tensor map_target = oracle::random_tensor(rng, {2, 1, 8, 8}, 0, 0.2);
    Tape tape;
    const auto o = m.forward(tape, in.scenes, in.crops, in.heads);
    tape.backward(model::heatmap_loss(tape, o.heatmap, map_target));
    double norm = 0.0;
    for (const auto& t : m.direction_parameters())
        for (double g : t.grad()) norm += g * g;
    CHECK(norm > 0.0);
}

TEST_CASE("a frozen pathway records no gradient") {
    std::mt19937_64 rng(45);
    const auto c = tiny_config();
    GazeModel m(c, 6);
    const auto in = random_inputs(rng, c, 2);
    m.set_direction_trainable(false);
    Tape tape;
    const auto o = m.forward(tape, in.scenes, in.crops, in.heads);
    tape.backward(ops::sum(tape, o.heatmap));
    for (const auto& t : m.direction_parameters()) {
        CHECK_FALSE(t.requires_grad());
        for (double g : t.grad()) CHECK(g == 0.0);
    }
    m.set_direction_trainable(true);
    for (const auto& t : m.direction_parameters()) CHECK(t.requires_grad());
}

TEST_CASE("loss examples") {
    Tape tape(Tape::Mode::Inference);
    const Tensor same({2, 2}, {1, 0, 0, 1});
    CHECK(model::direction_loss(tape, same, same).item() == doctest::Approx(0.0));
    const Tensor opposite({1, 2}, {-1, 0});
    const Tensor right({1, 2}, {1, 0});
    CHECK(model::direction_loss(tape, opposite, right).item() == doctest::Approx(2.0));
    const Tensor up({1, 2}, {0, 1});
    CHECK(model::direction_loss(tape, up, right).item() == doctest::Approx(1.0));

    const Tensor p({1}, {0.8});
    const Tensor one({1}, {1.0});
    CHECK(model::heatmap_loss(tape, p, one).item() == doctest::Approx(-std::log(0.8)));
    const Tensor zero({1}, {0.0});
    CHECK(model::heatmap_loss(tape, p, zero).item() == doctest::Approx(-std::log(0.2)));

    const Tensor ld = Tensor::scalar(0.3), lh = Tensor::scalar(0.8);
    CHECK(model::total_loss(tape, ld, lh, 0.5).item() == doctest::Approx(0.7));
    CHECK(model::total_loss(tape, ld, lh, 0.0).item() == doctest::Approx(0.3));
    CHECK_THROWS_AS(model::total_loss(tape, ld, lh, -1.0), ConfigError);
}

TEST_CASE("the heatmap loss on a 4x4 map matches a direct sum") {
    std::mt19937_64 rng(46);
    const Tensor p = oracle::random_tensor(rng, {1, 1, 4, 4}, 0.05, 0.95);
    const Tensor t = oracle::random_tensor(rng, {1, 1, 4, 4}, 0.0, 0.15);
    double want = 0.0;
    for (std::size_t i = 0; i < 16; ++i) {
        const double pi = p.values()[i], ti = t.values()[i];
        want -= ti * std::log(pi) + (1 - ti) * std::log(1 - pi);
    }
    Tape tape(Tape::Mode::Inference);
    CHECK(model::heatmap_loss(tape, p, t).item() == doctest::Approx(want / 16).epsilon(1e-14));
}

TEST_CASE("checkpoints restore the exact forward output") {
    std::mt19937_64 rng(47);
    const auto c = tiny_config();
    const auto dir = oracle::temp_dir("model_ckpt");
    GazeModel a(c, 11);
    jitter_biases(a, rng);
    save_checkpoint(dir / "m.json", a.parameters(), {{"note", "x"}});
    GazeModel b(c, 12);
    nlohmann::json meta;
    load_into(load_checkpoint(dir / "m.json", &meta), b.parameters());
    CHECK(meta["note"] == "x");
    const auto in = random_inputs(rng, c, 2);
    Tape t1(Tape::Mode::Inference), t2(Tape::Mode::Inference);
    const auto ha = a.forward(t1, in.scenes, in.crops, in.heads).heatmap;
    const auto hb = b.forward(t2, in.scenes, in.crops, in.heads).heatmap;
    CHECK(std::equal(ha.values().begin(), ha.values().end(), hb.values().begin()));

    auto bigger = c;
    bigger.direction.embedding = 7;
    GazeModel mismatched(bigger);
    CHECK_THROWS(load_into(load_checkpoint(dir / "m.json"), mismatched.parameters()));
    CHECK_THROWS_AS(load_checkpoint(dir / "absent.json"), DataError);
}
