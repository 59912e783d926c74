#include "gazefield/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "gazefield/adam.hpp"
#include "gazefield/error.hpp"

namespace gazefield::train {

namespace {

using data::GazeSample;
using model::GazeModel;

/// Network-ready copies of every sample, laid out for fast batch gathering.
struct Prepared {
    std::size_t count = 0;
    std::size_t scene_size = 0;
    std::size_t crop_size = 0;
    std::size_t map_size = 0;
    std::vector<double> scenes, crops, heads, directions, targets;
};

Prepared prepare(const std::vector<GazeSample>& samples, const TrainConfig& cfg) {
    const auto& m = cfg.model;
    Prepared p;
    p.count = samples.size();
    p.scene_size = 3 * m.scene_resolution * m.scene_resolution;
    p.crop_size = 3 * m.direction.crop_resolution * m.direction.crop_resolution;
    p.map_size = m.heatmap_resolution * m.heatmap_resolution;
    p.scenes.reserve(p.count * p.scene_size);
    p.crops.reserve(p.count * p.crop_size);
    for (const auto& s : samples) {
        if (s.scene.data.size() != p.scene_size || s.head_crop.data.size() != p.crop_size) {
            throw DataError("sample " + s.id + ": image extents do not match the model configuration");
        }
        p.scenes.insert(p.scenes.end(), s.scene.data.begin(), s.scene.data.end());
        p.crops.insert(p.crops.end(), s.head_crop.data.begin(), s.head_crop.data.end());
        p.heads.push_back(s.head.x);
        p.heads.push_back(s.head.y);
        p.directions.push_back(s.direction.dx);
        p.directions.push_back(s.direction.dy);
        const auto gt = heatmap::encode_gt(ground_truth(s).mean(), m.heatmap_resolution, m.heatmap_resolution,
                                           cfg.sigma);
        p.targets.insert(p.targets.end(), gt.values.begin(), gt.values.end());
    }
    return p;
}

Tensor gather(const std::vector<double>& source, std::size_t item_size, std::span<const std::size_t> idx,
              Shape item_shape) {
    std::vector<double> v(idx.size() * item_size);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        std::copy_n(source.begin() + static_cast<std::ptrdiff_t>(idx[i] * item_size), item_size,
                    v.begin() + static_cast<std::ptrdiff_t>(i * item_size));
    }
    Shape shape{idx.size()};
    shape.insert(shape.end(), item_shape.begin(), item_shape.end());
    return Tensor(std::move(shape), std::move(v));
}

struct Batch {
    Tensor scenes, crops, heads, directions, targets;
};

Batch make_batch(const Prepared& p, const model::ModelConfig& m, std::span<const std::size_t> idx) {
    const std::size_t s = m.scene_resolution, c = m.direction.crop_resolution, h = m.heatmap_resolution;
    return {gather(p.scenes, p.scene_size, idx, {3, s, s}), gather(p.crops, p.crop_size, idx, {3, c, c}),
            gather(p.heads, 2, idx, {2}), gather(p.directions, 2, idx, {2}), gather(p.targets, p.map_size, idx, {1, h, h})};
}

struct StagePlan {
    int stage;
    std::size_t epochs;
    bool train_direction;
    bool train_heatmap;
    bool use_ld;
    bool use_lh;
};

std::vector<StagePlan> plan(const TrainConfig& cfg) {
    if (!cfg.mid_layer_supervision) {
        return {{3, cfg.stage2_epochs + cfg.finetune_epochs, true, true, false, true}};
    }
    return {{1, cfg.stage1_epochs, true, false, true, false},
            {2, cfg.stage2_epochs, false, true, false, true},
            {3, cfg.finetune_epochs, true, true, true, true}};
}

void check_finite(double v, const char* what, int stage, std::size_t epoch) {
    if (!std::isfinite(v)) {
        throw NumericError(std::string("non-finite ") + what + " in stage " + std::to_string(stage) + ", epoch " +
                           std::to_string(epoch));
    }
}

}  // namespace

void TrainConfig::validate() const {
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
    model.validate();
}

std::string log_csv(const std::vector<LogRow>& rows) {
    std::string out = "stage,epoch,loss_d,loss_h,loss,seconds\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& r : rows) {
        out += std::to_string(r.stage) + "," + std::to_string(r.epoch) + "," + (r.loss_d ? num(*r.loss_d) : "") +
               "," + (r.loss_h ? num(*r.loss_h) : "") + "," + num(r.loss) + ",";
        std::snprintf(buf, sizeof buf, "%.3f", r.seconds);
        out += buf;
        out += "\n";
    }
    return out;
}

TrainResult train_staged(const std::vector<GazeSample>& samples, const TrainConfig& cfg, const TrainHooks& hooks) {
    cfg.validate();
    if (samples.empty()) throw DataError("training set is empty");
    const Prepared data = prepare(samples, cfg);
    TrainResult result{GazeModel(cfg.model, cfg.seed), {}};
    GazeModel& net = result.model;

    std::vector<std::size_t> order(data.count);
    for (const auto& st : plan(cfg)) {
        net.set_direction_trainable(st.train_direction);
        net.set_heatmap_trainable(st.train_heatmap);
        std::vector<Tensor> params;
        if (st.train_direction) {
            for (auto& t : net.direction_parameters()) params.push_back(t);
        }
        if (st.train_heatmap) {
            for (auto& t : net.heatmap_parameters()) params.push_back(t);
        }
        AdamState adam(params, {.lr = cfg.lr, .weight_decay = cfg.weight_decay});
        std::mt19937_64 rng(cfg.seed * 1000003u + static_cast<std::uint64_t>(st.stage));

        for (std::size_t epoch = 1; epoch <= st.epochs; ++epoch) {
            const auto t0 = std::chrono::steady_clock::now();
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::shuffle(order.begin(), order.end(), rng);
            double sum_d = 0.0, sum_h = 0.0, sum = 0.0;
            for (std::size_t start = 0; start < data.count; start += cfg.batch_size) {
                const std::size_t stop = std::min(data.count, start + cfg.batch_size);
                const std::span<const std::size_t> idx(order.data() + start, stop - start);
                const Batch b = make_batch(data, cfg.model, idx);
                for (auto& p : params) p.zero_grad();

                Tape tape;
                Tensor dir = net.direction_forward(tape, b.crops, b.heads);
                Tensor ld = model::direction_loss(tape, dir, b.directions);
                Tensor lh, loss;
                if (st.use_lh) {
                    Tensor fields = net.field_stack(tape, b.heads, dir);
                    Tensor pred = net.heatmap_forward(tape, b.scenes, fields);
                    lh = model::heatmap_loss(tape, pred, b.targets);
                }
                if (st.use_ld && st.use_lh) {
                    loss = model::total_loss(tape, ld, lh, cfg.lambda);
                } else {
                    loss = st.use_lh ? lh : ld;
                }
                check_finite(loss.item(), "loss", st.stage, epoch);
                tape.backward(loss);
                try {
                    adam_step(params, adam);
                } catch (const NumericError& e) {
                    throw NumericError("stage " + std::to_string(st.stage) + ", epoch " + std::to_string(epoch) +
                                       ": " + e.what());
                }

                const double w = static_cast<double>(idx.size());
                sum_d += w * ld.item();
                if (lh) sum_h += w * lh.item();
                sum += w * loss.item();
            }
            const double n = static_cast<double>(data.count);
            LogRow row;
            row.stage = st.stage;
            row.epoch = epoch;
            row.loss_d = sum_d / n;
            if (st.use_lh) row.loss_h = sum_h / n;
            row.loss = sum / n;
            row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            result.log.push_back(row);
            if (hooks.on_epoch) hooks.on_epoch(row);
        }
        net.set_direction_trainable(true);
        net.set_heatmap_trainable(true);
        if (hooks.on_stage_end) hooks.on_stage_end(st.stage, net);
    }
    return result;
}

std::vector<heatmap::Heatmap> predict(const GazeModel& net, const std::vector<GazeSample>& samples,
                                      std::size_t batch_size) {
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    TrainConfig cfg;
    cfg.model = net.config();
    const Prepared data = prepare(samples, cfg);
    const std::size_t h = net.config().heatmap_resolution;
    std::vector<heatmap::Heatmap> out;
    out.reserve(samples.size());
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < data.count; start += batch_size) {
        idx.clear();
        for (std::size_t i = start; i < std::min(data.count, start + batch_size); ++i) idx.push_back(i);
        const Batch b = make_batch(data, net.config(), idx);
        Tape tape(Tape::Mode::Inference);
        const Tensor pred = net.forward(tape, b.scenes, b.crops, b.heads).heatmap;
        const auto v = pred.values();
        for (std::size_t i = 0; i < idx.size(); ++i) {
            out.push_back({h, h, std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(i * h * h),
                                                     v.begin() + static_cast<std::ptrdiff_t>((i + 1) * h * h))});
        }
    }
    return out;
}

metrics::GroundTruthSet ground_truth(const GazeSample& sample) { return {sample.gaze, sample.head}; }

metrics::MetricReport evaluate_heatmaps(const std::vector<heatmap::Heatmap>& maps,
                                        const std::vector<GazeSample>& samples) {
    if (maps.size() != samples.size()) throw ShapeError("evaluate: one heatmap per sample is required");
    std::vector<metrics::SampleMetrics> per(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        per[i] = metrics::evaluate_sample(maps[i].values, maps[i].width, maps[i].height, ground_truth(samples[i]));
    }
    return metrics::aggregate(std::move(per), metrics::default_thresholds());
}

metrics::MetricReport evaluate(const GazeModel& net, const std::vector<GazeSample>& samples) {
    return evaluate_heatmaps(predict(net, samples), samples);
}

}  // namespace gazefield::train
