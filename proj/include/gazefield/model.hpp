#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gazefield/checkpoint.hpp"
#include "gazefield/geometry.hpp"
#include "gazefield/tape.hpp"
#include "gazefield/tensor.hpp"

namespace gazefield::model {

/// Head-crop encoder (three 3×3 conv blocks, strides 2, 2, 1), a three-layer
/// position encoder and a two-layer fusion head ending in a unit 2-vector.
struct DirectionPathwayConfig {
    std::size_t crop_resolution = 16;
    std::vector<std::size_t> conv_channels{8, 16, 16};
    std::size_t embedding = 32;
    std::size_t position_width = 16;
    std::size_t fusion_width = 32;
};

/// Three-level encoder-decoder with skip connections. The stem is a
/// patchifying conv (kernel = stride = scene / heatmap resolution); two
/// stride-2 stages follow, then two upsample+concat+conv stages and a 1×1
/// sigmoid head.
struct HeatmapPathwayConfig {
    std::vector<std::size_t> encoder_channels{8, 16, 16};
    std::vector<std::size_t> decoder_channels{16, 8};
    /// Initial bias of the output logit; −3.5 puts the untrained map near the
    /// mean of the soft ground-truth targets.
    double output_bias = -3.5;
};

struct ModelConfig {
    std::size_t scene_resolution = 64;
    std::size_t heatmap_resolution = 16;
    std::vector<double> gammas{5.0, 2.0, 1.0};
    DirectionPathwayConfig direction;
    HeatmapPathwayConfig heatmap;

    /// Throws ConfigError on inconsistent extents or widths.
    void validate() const;
};

/// The two-pathway network. Parameters are named "direction.*" or "heatmap.*".
class GazeModel {
   public:
    explicit GazeModel(ModelConfig config, std::uint64_t seed = 0);

    const ModelConfig& config() const { return config_; }

    /// crops [N,3,c,c], heads [N,2] → unit directions [N,2].
    Tensor direction_forward(Tape& tape, const Tensor& crops, const Tensor& heads) const;
    /// dir [N,2] → field stack [N,|gammas|,S,S] at scene resolution.
    Tensor field_stack(Tape& tape, const Tensor& heads, const Tensor& dir) const;
    /// scenes [N,3,S,S], fields [N,|gammas|,S,S] → heatmaps [N,1,h,h] in (0,1).
    Tensor heatmap_forward(Tape& tape, const Tensor& scenes, const Tensor& fields) const;

    struct Output {
        Tensor direction;
        Tensor fields;
        Tensor heatmap;
    };
    Output forward(Tape& tape, const Tensor& scenes, const Tensor& crops, const Tensor& heads) const;

    ParameterList& parameters() { return params_; }
    const ParameterList& parameters() const { return params_; }
    std::vector<Tensor> parameter_tensors() const;
    std::vector<Tensor> direction_parameters() const;
    std::vector<Tensor> heatmap_parameters() const;
    /// Freezing clears requires_grad, so no op on the pathway is recorded.
    void set_direction_trainable(bool on);
    void set_heatmap_trainable(bool on);

   private:
    struct Conv {
        Tensor weight;
        Tensor bias;
        std::size_t stride = 1;
        std::size_t pad = 0;
    };
    struct Linear {
        Tensor weight;  // [in, out]
        Tensor bias;
    };

    Conv& add_conv(const std::string& name, std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride,
                   std::size_t pad);
    Linear& add_linear(const std::string& name, std::size_t in, std::size_t out);
    Tensor apply(Tape& tape, const Conv& c, const Tensor& x) const;
    Tensor apply(Tape& tape, const Linear& l, const Tensor& x) const;

    ModelConfig config_;
    std::uint64_t seed_;
    ParameterList params_;
    std::vector<Conv> convs_;
    std::vector<Linear> linears_;
    // Indices into convs_ / linears_.
    std::vector<std::size_t> crop_convs_;
    std::size_t crop_fc_ = 0;
    std::vector<std::size_t> position_fcs_;
    std::vector<std::size_t> fusion_fcs_;
    std::size_t stem_ = 0, enc2_ = 0, enc3_ = 0, dec2_ = 0, dec1_ = 0, head_ = 0;
    std::size_t crop_feature_size_ = 0;
};

/// Mean cosine loss between predicted and ground-truth directions.
Tensor direction_loss(Tape& tape, const Tensor& pred, const Tensor& target);
/// Mean binary cross entropy over all heatmap cells.
Tensor heatmap_loss(Tape& tape, const Tensor& pred, const Tensor& target);
/// ld + lambda·lh.
Tensor total_loss(Tape& tape, const Tensor& ld, const Tensor& lh, double lambda);

}  // namespace gazefield::model
