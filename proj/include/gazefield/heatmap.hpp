#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gazefield/geometry.hpp"

namespace gazefield::heatmap {

inline constexpr double kDefaultSigma = 3.0;

/// Row-major height×width grid.
struct Heatmap {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> values;

    double at(std::size_t row, std::size_t col) const { return values[row * width + col]; }
};

struct Cell {
    std::size_t row = 0;
    std::size_t col = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

/// Unnormalised Gaussian centred on the gaze point:
/// H(row, col) = exp(−((col − gx)² + (row − gy)²) / 2σ²) / (√(2π)·σ),
/// with gx = x·width − 0.5 and gy = y·height − 0.5 in cell units. The peak
/// value is 1/(√(2π)·σ), not 1.
Heatmap encode_gt(NormalizedPoint gaze, std::size_t width, std::size_t height, double sigma = kDefaultSigma);

/// Largest cell; ties go to the smallest (row, col).
Cell argmax_cell(std::span<const double> values, std::size_t width, std::size_t height);

/// Center of the largest cell.
NormalizedPoint decode_argmax(const Heatmap& h);
NormalizedPoint decode_argmax(std::span<const double> values, std::size_t width, std::size_t height);

/// Cell containing a point; points on the far edge belong to the last cell.
Cell cell_of(NormalizedPoint p, std::size_t width, std::size_t height);

}  // namespace gazefield::heatmap
