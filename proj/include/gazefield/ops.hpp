#pragma once

#include <span>
#include <vector>

#include "gazefield/tape.hpp"
#include "gazefield/tensor.hpp"

// Typed differentiable operations. All take the tape first; with an
// inference tape (or no input requiring grad) nothing is recorded.
namespace gazefield::ops {

inline constexpr double kNormalizeEps = 1e-8;
inline constexpr double kBceClamp = 1e-12;

/// [M,K]·[K,N] → [M,N].
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
/// x [N,C,H,W], w [O,C,K,K], bias [O] (may be undefined) → [N,O,OH,OW].
Tensor conv2d(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& bias, std::size_t stride,
              std::size_t pad);
/// Nearest-neighbour upsampling of [N,C,H,W] by an integer factor.
Tensor upsample(Tape& tape, const Tensor& x, std::size_t factor);

Tensor relu(Tape& tape, const Tensor& x);
/// max(x, lo); the subgradient at exactly x == lo is 0.
Tensor clamp_min(Tape& tape, const Tensor& x, double lo = 0.0);
Tensor sigmoid(Tape& tape, const Tensor& x);

/// Concatenation along axis 1 (channels, or features for rank-2 inputs).
Tensor concat(Tape& tape, const std::vector<Tensor>& parts);
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor pow(Tape& tape, const Tensor& x, double exponent);
Tensor scale(Tape& tape, const Tensor& x, double factor);
/// Adds bias [C] along axis 1 of x [N,C,...].
Tensor bias_add(Tape& tape, const Tensor& x, const Tensor& bias);
Tensor reshape(Tape& tape, const Tensor& x, Shape shape);

/// Row-wise x / sqrt(|x|² + eps) for x [N,D].
Tensor l2_normalize(Tape& tape, const Tensor& x, double eps = kNormalizeEps);
Tensor mean(Tape& tape, const Tensor& x);
Tensor sum(Tape& tape, const Tensor& x);

/// Gaze direction fields: dir [N,2], heads [N,2] (constant) → [N,|gammas|,height,width].
Tensor direction_field(Tape& tape, const Tensor& dir, const Tensor& heads, std::size_t width,
                       std::size_t height, std::span<const double> gammas);
/// mean over rows of 1 − cos(pred_i, target_i), both [N,D].
Tensor cosine_loss(Tape& tape, const Tensor& pred, const Tensor& target);
/// Mean binary cross entropy; pred in [0,1], clamped to [kBceClamp, 1 − kBceClamp] inside the logs.
Tensor binary_cross_entropy(Tape& tape, const Tensor& pred, const Tensor& target);

}  // namespace gazefield::ops
