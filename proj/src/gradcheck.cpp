#include "gazefield/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gazefield/direction_field.hpp"
#include "gazefield/heatmap.hpp"
#include "gazefield/model.hpp"
#include "gazefield/ops.hpp"

namespace gazefield::gradcheck {

namespace {

using Rng = std::mt19937_64;

Tensor random_tensor(Rng& rng, Shape shape, double lo, double hi, bool requires_grad = true) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor t = Tensor::zeros(std::move(shape), requires_grad);
    for (double& v : t.values()) v = u(rng);
    return t;
}

/// Values with |x − at| >= gap, so a central difference never straddles a kink.
Tensor away_from(Rng& rng, Shape shape, double at, double gap) {
    std::uniform_real_distribution<double> u(gap, 1.0);
    std::bernoulli_distribution sign(0.5);
    Tensor t = Tensor::zeros(std::move(shape), true);
    for (double& v : t.values()) v = at + (sign(rng) ? 1.0 : -1.0) * u(rng);
    return t;
}

/// Contracts a non-scalar output with fixed random weights so every output
/// element reaches the loss with a distinct coefficient.
std::function<Tensor(Tape&)> weighted_sum(std::function<Tensor(Tape&)> f, Rng& rng) {
    Tape probe(Tape::Mode::Inference);
    const Tensor sample = f(probe);
    if (sample.size() == 1) return f;
    Tensor weights = random_tensor(rng, sample.shape(), -1.0, 1.0, false);
    return [f, weights](Tape& t) { return ops::sum(t, ops::mul(t, f(t), weights)); };
}

struct Case {
    std::vector<Tensor> inputs;
    Attrs attrs;
};

Case make_case(OpKind kind, Rng& rng) {
    switch (kind) {
        case OpKind::MatMul:
            return {{random_tensor(rng, {3, 4}, -1, 1), random_tensor(rng, {4, 5}, -1, 1)}, {}};
        case OpKind::Conv2d:
            return {{random_tensor(rng, {2, 2, 5, 5}, -1, 1), random_tensor(rng, {3, 2, 3, 3}, -1, 1),
                     random_tensor(rng, {3}, -1, 1)},
                    Attrs{{"stride", 2.0}, {"pad", 1.0}}};
        case OpKind::Upsample:
            return {{random_tensor(rng, {1, 2, 3, 3}, -1, 1)}, Attrs{{"factor", 2.0}}};
        case OpKind::Relu:
            return {{away_from(rng, {4, 5}, 0.0, 0.05)}, {}};
        case OpKind::ClampMin:
            return {{away_from(rng, {4, 5}, 0.2, 0.05)}, Attrs{{"min", 0.2}}};
        case OpKind::Sigmoid:
            return {{random_tensor(rng, {4, 5}, -4, 4)}, {}};
        case OpKind::Concat:
            return {{random_tensor(rng, {2, 2, 3, 3}, -1, 1), random_tensor(rng, {2, 1, 3, 3}, -1, 1)}, {}};
        case OpKind::Add:
        case OpKind::Mul:
            return {{random_tensor(rng, {3, 4}, -1, 1), random_tensor(rng, {3, 4}, -1, 1)}, {}};
        case OpKind::Pow:
            return {{random_tensor(rng, {3, 4}, 0.5, 1.5)}, Attrs{{"exponent", 2.5}}};
        case OpKind::Scale:
            return {{random_tensor(rng, {3, 4}, -1, 1)}, Attrs{{"factor", 1.7}}};
        case OpKind::BiasAdd:
            return {{random_tensor(rng, {2, 3, 2, 2}, -1, 1), random_tensor(rng, {3}, -1, 1)}, {}};
        case OpKind::Reshape:
            return {{random_tensor(rng, {2, 6}, -1, 1)}, Attrs{}.set("shape", std::vector<double>{3, 4})};
        case OpKind::L2Normalize:
            return {{random_tensor(rng, {3, 2}, -1, 1)}, {}};
        case OpKind::Mean:
        case OpKind::Sum:
            return {{random_tensor(rng, {3, 4}, -1, 1)}, {}};
        case OpKind::DirectionField:
            return {{random_tensor(rng, {2, 2}, -1, 1), random_tensor(rng, {2, 2}, 0.2, 0.8, false)},
                    Attrs{{"width", 8.0}, {"height", 8.0}}.set("gammas", field::kDefaultGammas)};
        case OpKind::CosineLoss:
            return {{random_tensor(rng, {4, 2}, -1, 1), random_tensor(rng, {4, 2}, -1, 1)}, {}};
        case OpKind::BinaryCrossEntropy:
            return {{random_tensor(rng, {4, 4}, 0.1, 0.9), random_tensor(rng, {4, 4}, 0.0, 1.0)}, {}};
    }
    return {};
}

model::ModelConfig tiny_model() {
    model::ModelConfig m;
    m.scene_resolution = 16;
    m.heatmap_resolution = 8;
    m.direction.crop_resolution = 8;
    m.direction.conv_channels = {2, 3, 3};
    m.direction.embedding = 4;
    m.direction.position_width = 4;
    m.direction.fusion_width = 4;
    m.heatmap.encoder_channels = {3, 4, 4};
    m.heatmap.decoder_channels = {4, 3};
    m.heatmap.output_bias = -1.0;
    return m;
}

Result make_result(std::string name, double err, double tol) { return {std::move(name), err, tol, err < tol}; }

}  // namespace

double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
        na += analytic[i] * analytic[i];
        nn += numeric[i] * numeric[i];
    }
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
}

double check(const std::function<Tensor(Tape&)>& loss, std::vector<Tensor> wrt, const Options& options) {
    for (auto& t : wrt) {
        t.set_requires_grad(true);
        t.clear_grad();
    }
    {
        Tape tape;
        if (options.fault) tape.scale_gradients_of(options.fault->first, options.fault->second);
        tape.backward(loss(tape));
    }
    Rng rng(options.seed);
    std::vector<double> analytic, numeric;
    auto evaluate = [&]() {
        Tape tape(Tape::Mode::Inference);
        return loss(tape).item();
    };
    for (auto& t : wrt) {
        std::vector<std::size_t> coords(t.size());
        std::iota(coords.begin(), coords.end(), std::size_t{0});
        if (coords.size() > options.max_coords) {
            std::shuffle(coords.begin(), coords.end(), rng);
            coords.resize(options.max_coords);
        }
        auto values = t.values();
        for (auto i : coords) {
            analytic.push_back(t.has_grad() ? t.grad()[i] : 0.0);
            const double orig = values[i];
            values[i] = orig + options.step;
            const double up = evaluate();
            values[i] = orig - options.step;
            const double down = evaluate();
            values[i] = orig;
            numeric.push_back((up - down) / (2.0 * options.step));
        }
    }
    return relative_error(analytic, numeric);
}

std::vector<Result> run_suite(const Options& options) {
    std::vector<Result> results;
    Rng rng(options.seed);
    for (OpKind kind : all_op_kinds()) {
        Case c = make_case(kind, rng);
        auto inputs = c.inputs;
        auto attrs = c.attrs;
        auto f = weighted_sum([kind, inputs, attrs](Tape& t) { return op_forward(t, kind, inputs, attrs); }, rng);
        std::vector<Tensor> wrt;
        for (const auto& in : inputs) {
            if (in.requires_grad()) wrt.push_back(in);
        }
        results.push_back(make_result(std::string(op_name(kind)), check(f, wrt, options), kOpTolerance));
    }

    {
        std::vector<NormalizedPoint> heads{{0.3, 0.6}, {0.7, 0.25}};
        Tensor dir = random_tensor(rng, {2, 2}, -1, 1);
        auto f = weighted_sum(
            [heads, dir](Tape& t) { return field::build_field_stack(t, heads, dir, 16, 16, field::kDefaultGammas); },
            rng);
        results.push_back(make_result("field_stack", check(f, {dir}, options), kOpTolerance));
    }

    {
        const auto cfg = tiny_model();
        model::GazeModel net(cfg, options.seed);
        // Zero-initialised biases put ReLU inputs exactly on the kink wherever a
        // patch is all zero, where the one-sided subgradient and a central
        // difference disagree by construction. Small random biases avoid that.
        std::uniform_real_distribution<double> jitter(-0.1, 0.1);
        for (auto& p : net.parameters()) {
            if (p.name.ends_with(".bias")) {
                for (double& v : p.tensor.values()) v += jitter(rng);
            }
        }
        const std::size_t n = 2, s = cfg.scene_resolution, c = cfg.direction.crop_resolution;
        const std::size_t h = cfg.heatmap_resolution;
        Tensor scenes = random_tensor(rng, {n, 3, s, s}, 0, 1, false);
        Tensor crops = random_tensor(rng, {n, 3, c, c}, 0, 1, false);
        Tensor heads = random_tensor(rng, {n, 2}, 0.2, 0.8, false);
        Tensor gt_dir = random_tensor(rng, {n, 2}, -1, 1, false);
        std::vector<double> target_values;
        for (std::size_t i = 0; i < n; ++i) {
            std::uniform_real_distribution<double> u(0.05, 0.95);
            const auto map = heatmap::encode_gt({u(rng), u(rng)}, h, h);
            target_values.insert(target_values.end(), map.values.begin(), map.values.end());
        }
        Tensor targets({n, 1, h, h}, std::move(target_values));
        auto f = [&](Tape& t) {
            const auto out = net.forward(t, scenes, crops, heads);
            return model::total_loss(t, model::direction_loss(t, out.direction, gt_dir),
                                     model::heatmap_loss(t, out.heatmap, targets), 0.5);
        };
        results.push_back(make_result("end_to_end", check(f, net.parameter_tensors(), options), kEndToEndTolerance));
    }
    return results;
}

}  // namespace gazefield::gradcheck
