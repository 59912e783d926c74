#include "gazefield/model.hpp"

#include <cmath>
#include <random>

#include "gazefield/error.hpp"
#include "gazefield/ops.hpp"

namespace gazefield::model {

namespace {

std::size_t conv_out(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad) {
    return (in + 2 * pad - kernel) / stride + 1;
}

bool starts_with(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

void ModelConfig::validate() const {
    if (scene_resolution < 8 || heatmap_resolution < 8) throw ConfigError("resolutions must be >= 8");
    if (scene_resolution % heatmap_resolution != 0) {
        throw ConfigError("scene_resolution must be a multiple of heatmap_resolution");
    }
    if (heatmap_resolution % 4 != 0) throw ConfigError("heatmap_resolution must be divisible by 4");
    if (gammas.empty()) throw ConfigError("gammas must not be empty");
    for (double g : gammas) {
        if (!(g >= 1.0) || !std::isfinite(g)) throw ConfigError("every gamma must be finite and >= 1");
    }
    if (direction.crop_resolution < 4) throw ConfigError("crop_resolution must be >= 4");
    if (direction.conv_channels.size() != 3) throw ConfigError("direction.conv_channels needs 3 entries");
    if (heatmap.encoder_channels.size() != 3) throw ConfigError("heatmap.encoder_channels needs 3 entries");
    if (heatmap.decoder_channels.size() != 2) throw ConfigError("heatmap.decoder_channels needs 2 entries");
    auto positive = [](const std::vector<std::size_t>& v) {
        for (auto c : v) {
            if (c == 0) return false;
        }
        return true;
    };
    if (!positive(direction.conv_channels) || !positive(heatmap.encoder_channels) ||
        !positive(heatmap.decoder_channels) || direction.embedding == 0 || direction.position_width == 0 ||
        direction.fusion_width == 0) {
        throw ConfigError("layer widths must be positive");
    }
}

GazeModel::GazeModel(ModelConfig config, std::uint64_t seed) : config_(std::move(config)), seed_(seed) {
    config_.validate();
    const auto& d = config_.direction;
    const auto& h = config_.heatmap;

    std::size_t in = 3, res = d.crop_resolution;
    const std::size_t strides[3] = {2, 2, 1};
    for (std::size_t i = 0; i < 3; ++i) {
        add_conv("direction.crop.conv" + std::to_string(i + 1), in, d.conv_channels[i], 3, strides[i], 1);
        crop_convs_.push_back(convs_.size() - 1);
        in = d.conv_channels[i];
        res = conv_out(res, 3, strides[i], 1);
    }
    crop_feature_size_ = in * res * res;
    add_linear("direction.crop.fc", crop_feature_size_, d.embedding);
    crop_fc_ = linears_.size() - 1;
    std::size_t pin = 2;
    for (std::size_t i = 0; i < 3; ++i) {
        add_linear("direction.position.fc" + std::to_string(i + 1), pin, d.position_width);
        position_fcs_.push_back(linears_.size() - 1);
        pin = d.position_width;
    }
    add_linear("direction.fusion.fc1", d.embedding + d.position_width, d.fusion_width);
    fusion_fcs_.push_back(linears_.size() - 1);
    add_linear("direction.fusion.fc2", d.fusion_width, 2);
    fusion_fcs_.push_back(linears_.size() - 1);

    const std::size_t patch = config_.scene_resolution / config_.heatmap_resolution;
    const std::size_t c_in = 3 + config_.gammas.size();
    const auto& e = h.encoder_channels;
    const auto& dc = h.decoder_channels;
    add_conv("heatmap.stem", c_in, e[0], patch, patch, 0);
    stem_ = convs_.size() - 1;
    add_conv("heatmap.enc2", e[0], e[1], 3, 2, 1);
    enc2_ = convs_.size() - 1;
    add_conv("heatmap.enc3", e[1], e[2], 3, 2, 1);
    enc3_ = convs_.size() - 1;
    add_conv("heatmap.dec2", e[2] + e[1], dc[0], 3, 1, 1);
    dec2_ = convs_.size() - 1;
    add_conv("heatmap.dec1", dc[0] + e[0], dc[1], 3, 1, 1);
    dec1_ = convs_.size() - 1;
    add_conv("heatmap.head", dc[1], 1, 1, 1, 0);
    head_ = convs_.size() - 1;
    for (double& b : convs_[head_].bias.values()) b = h.output_bias;
}

GazeModel::Conv& GazeModel::add_conv(const std::string& name, std::size_t in, std::size_t out, std::size_t kernel,
                                     std::size_t stride, std::size_t pad) {
    // Each layer draws from its own stream so adding a layer never reshuffles the others.
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(params_.size())};
    std::mt19937_64 rng(seq);
    const std::size_t fan_in = in * kernel * kernel;
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    Tensor w = Tensor::zeros({out, in, kernel, kernel}, true);
    for (double& v : w.values()) v = normal(rng);
    Tensor b = Tensor::zeros({out}, true);
    params_.push_back({name + ".weight", w});
    params_.push_back({name + ".bias", b});
    convs_.push_back({w, b, stride, pad});
    return convs_.back();
}

GazeModel::Linear& GazeModel::add_linear(const std::string& name, std::size_t in, std::size_t out) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(params_.size())};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(in)));
    Tensor w = Tensor::zeros({in, out}, true);
    for (double& v : w.values()) v = normal(rng);
    Tensor b = Tensor::zeros({out}, true);
    params_.push_back({name + ".weight", w});
    params_.push_back({name + ".bias", b});
    linears_.push_back({w, b});
    return linears_.back();
}

Tensor GazeModel::apply(Tape& tape, const Conv& c, const Tensor& x) const {
    return ops::conv2d(tape, x, c.weight, c.bias, c.stride, c.pad);
}

Tensor GazeModel::apply(Tape& tape, const Linear& l, const Tensor& x) const {
    return ops::bias_add(tape, ops::matmul(tape, x, l.weight), l.bias);
}

Tensor GazeModel::direction_forward(Tape& tape, const Tensor& crops, const Tensor& heads) const {
    const std::size_t c = config_.direction.crop_resolution;
    if (crops.rank() != 4 || crops.dim(1) != 3 || crops.dim(2) != c || crops.dim(3) != c) {
        throw ShapeError("direction_forward: crops must be [N,3," + std::to_string(c) + "," + std::to_string(c) +
                         "], got " + shape_str(crops.shape()));
    }
    const std::size_t n = crops.dim(0);
    if (heads.shape() != Shape{n, 2}) throw ShapeError("direction_forward: heads must be [N,2]");

    Tensor x = crops;
    for (auto i : crop_convs_) x = ops::relu(tape, apply(tape, convs_[i], x));
    x = ops::reshape(tape, x, {n, crop_feature_size_});
    Tensor crop_code = ops::relu(tape, apply(tape, linears_[crop_fc_], x));

    Tensor p = heads;
    for (auto i : position_fcs_) p = ops::relu(tape, apply(tape, linears_[i], p));

    Tensor f = ops::concat(tape, {crop_code, p});
    f = ops::relu(tape, apply(tape, linears_[fusion_fcs_[0]], f));
    f = apply(tape, linears_[fusion_fcs_[1]], f);
    return ops::l2_normalize(tape, f);
}

Tensor GazeModel::field_stack(Tape& tape, const Tensor& heads, const Tensor& dir) const {
    return ops::direction_field(tape, dir, heads, config_.scene_resolution, config_.scene_resolution,
                                config_.gammas);
}

Tensor GazeModel::heatmap_forward(Tape& tape, const Tensor& scenes, const Tensor& fields) const {
    const std::size_t s = config_.scene_resolution;
    if (scenes.rank() != 4 || scenes.dim(1) != 3 || scenes.dim(2) != s || scenes.dim(3) != s) {
        throw ShapeError("heatmap_forward: scenes must be [N,3," + std::to_string(s) + "," + std::to_string(s) +
                         "], got " + shape_str(scenes.shape()));
    }
    if (fields.rank() != 4 || fields.dim(0) != scenes.dim(0) || fields.dim(1) != config_.gammas.size() ||
        fields.dim(2) != s || fields.dim(3) != s) {
        throw ShapeError("heatmap_forward: fields " + shape_str(fields.shape()) + " do not match scenes " +
                         shape_str(scenes.shape()) + " with " + std::to_string(config_.gammas.size()) + " scales");
    }
    Tensor x = ops::concat(tape, {scenes, fields});
    Tensor e1 = ops::relu(tape, apply(tape, convs_[stem_], x));
    Tensor e2 = ops::relu(tape, apply(tape, convs_[enc2_], e1));
    Tensor e3 = ops::relu(tape, apply(tape, convs_[enc3_], e2));
    Tensor d2 = ops::relu(tape, apply(tape, convs_[dec2_], ops::concat(tape, {ops::upsample(tape, e3, 2), e2})));
    Tensor d1 = ops::relu(tape, apply(tape, convs_[dec1_], ops::concat(tape, {ops::upsample(tape, d2, 2), e1})));
    return ops::sigmoid(tape, apply(tape, convs_[head_], d1));
}

GazeModel::Output GazeModel::forward(Tape& tape, const Tensor& scenes, const Tensor& crops, const Tensor& heads) const {
    Output out;
    out.direction = direction_forward(tape, crops, heads);
    out.fields = field_stack(tape, heads, out.direction);
    out.heatmap = heatmap_forward(tape, scenes, out.fields);
    return out;
}

std::vector<Tensor> GazeModel::parameter_tensors() const {
    std::vector<Tensor> out;
    for (const auto& p : params_) out.push_back(p.tensor);
    return out;
}

std::vector<Tensor> GazeModel::direction_parameters() const {
    std::vector<Tensor> out;
    for (const auto& p : params_) {
        if (starts_with(p.name, "direction.")) out.push_back(p.tensor);
    }
    return out;
}

std::vector<Tensor> GazeModel::heatmap_parameters() const {
    std::vector<Tensor> out;
    for (const auto& p : params_) {
        if (starts_with(p.name, "heatmap.")) out.push_back(p.tensor);
    }
    return out;
}

void GazeModel::set_direction_trainable(bool on) {
    for (auto t : direction_parameters()) t.set_requires_grad(on);
}

void GazeModel::set_heatmap_trainable(bool on) {
    for (auto t : heatmap_parameters()) t.set_requires_grad(on);
}

Tensor direction_loss(Tape& tape, const Tensor& pred, const Tensor& target) {
    return ops::cosine_loss(tape, pred, target);
}

Tensor heatmap_loss(Tape& tape, const Tensor& pred, const Tensor& target) {
    return ops::binary_cross_entropy(tape, pred, target);
}

Tensor total_loss(Tape& tape, const Tensor& ld, const Tensor& lh, double lambda) {
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
    return ops::add(tape, ld, ops::scale(tape, lh, lambda));
}

}  // namespace gazefield::model
