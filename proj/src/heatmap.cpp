#include "gazefield/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gazefield/direction_field.hpp"
#include "gazefield/error.hpp"

namespace gazefield::heatmap {

Heatmap encode_gt(NormalizedPoint gaze, std::size_t width, std::size_t height, double sigma) {
    if (!(sigma > 0.0)) throw NumericError("encode_gt: sigma must be positive");
    if (!gaze.inside_unit_square()) throw DataError("encode_gt: gaze point outside [0,1]^2");
    if (width == 0 || height == 0) throw ShapeError("encode_gt: empty heatmap");
    const double gx = gaze.x * static_cast<double>(width) - 0.5;
    const double gy = gaze.y * static_cast<double>(height) - 0.5;
    const double peak = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma);
    const double denom = 2.0 * sigma * sigma;
    Heatmap h{width, height, std::vector<double>(width * height)};
    for (std::size_t r = 0; r < height; ++r) {
        const double dy = static_cast<double>(r) - gy;
        for (std::size_t c = 0; c < width; ++c) {
            const double dx = static_cast<double>(c) - gx;
            h.values[r * width + c] = peak * std::exp(-(dx * dx + dy * dy) / denom);
        }
    }
    return h;
}

Cell argmax_cell(std::span<const double> values, std::size_t width, std::size_t height) {
    if (values.empty() || values.size() != width * height) throw ShapeError("argmax: heatmap size mismatch");
    // max_element keeps the first maximum, which is the smallest row-major index.
    const auto idx = static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
    return {idx / width, idx % width};
}

NormalizedPoint decode_argmax(std::span<const double> values, std::size_t width, std::size_t height) {
    const Cell c = argmax_cell(values, width, height);
    return field::cell_center(c.row, c.col, width, height);
}

NormalizedPoint decode_argmax(const Heatmap& h) { return decode_argmax(h.values, h.width, h.height); }

Cell cell_of(NormalizedPoint p, std::size_t width, std::size_t height) {
    auto index = [](double v, std::size_t n) {
        const auto i = static_cast<std::ptrdiff_t>(std::floor(v * static_cast<double>(n)));
        return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1));
    };
    return {index(p.y, height), index(p.x, width)};
}

}  // namespace gazefield::heatmap
