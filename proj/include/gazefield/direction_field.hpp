#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gazefield/geometry.hpp"
#include "gazefield/tape.hpp"
#include "gazefield/tensor.hpp"

namespace gazefield::field {

/// FOV-cone sharpness exponents of the multi-scale stack.
inline const std::vector<double> kDefaultGammas{5.0, 2.0, 1.0};
/// One-scale mode.
inline const std::vector<double> kOneScaleGammas{1.0};

/// G = p − head.
Direction ray_direction(NormalizedPoint head, NormalizedPoint p);

/// max(cos∠(G, dir), 0). Returns 0 when p == head. Throws NumericError for a zero dir.
double field_value(NormalizedPoint head, NormalizedPoint p, Direction dir);

/// field_value(...)^gamma; gamma < 1 is rejected (the derivative is singular at 0).
double field_value_pow(NormalizedPoint head, NormalizedPoint p, Direction dir, double gamma);

/// Center of grid cell (row, col) in normalized coordinates.
inline NormalizedPoint cell_center(std::size_t row, std::size_t col, std::size_t width, std::size_t height) {
    return {(static_cast<double>(col) + 0.5) / static_cast<double>(width),
            (static_cast<double>(row) + 0.5) / static_cast<double>(height)};
}

void validate_gammas(std::span<const double> gammas);

/// Per-scale probability grids for one head and direction.
struct DirectionFieldStack {
    std::vector<double> gammas;
    std::size_t width = 0;
    std::size_t height = 0;
    NormalizedPoint head;
    /// One row-major height×width grid per gamma.
    std::vector<std::vector<double>> grids;

    double at(std::size_t scale, std::size_t row, std::size_t col) const { return grids[scale][row * width + col]; }
};

/// Non-differentiable stack, used for dumps and visualisation.
DirectionFieldStack build_field_stack(NormalizedPoint head, Direction dir, std::size_t width, std::size_t height,
                                      std::span<const double> gammas);

/// Differentiable batch stack: dir [N,2] on the tape → [N,|gammas|,height,width].
Tensor build_field_stack(Tape& tape, std::span<const NormalizedPoint> heads, const Tensor& dir, std::size_t width,
                         std::size_t height, std::span<const double> gammas);

// Kernels behind the DirectionField op. dirs and heads are [N,2] row-major.
void field_forward(std::span<const double> dirs, std::span<const double> heads, std::size_t batch,
                   std::size_t width, std::size_t height, std::span<const double> gammas, std::span<double> out);
void field_backward(std::span<const double> dirs, std::span<const double> heads, std::size_t batch,
                    std::size_t width, std::size_t height, std::span<const double> gammas,
                    std::span<const double> dout, std::span<double> ddir);

}  // namespace gazefield::field
