#pragma once

// Independent reference computations used by the tests. None of these call
// into the library's numerical code; they restate each quantity in the most
// direct form available so that agreement is meaningful.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gazefield/tape.hpp"
#include "gazefield/tensor.hpp"

namespace oracle {

using gazefield::Shape;
using gazefield::Tensor;

inline Tensor random_tensor(std::mt19937_64& rng, Shape shape, double lo = -1.0, double hi = 1.0,
                            bool requires_grad = false) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor t = Tensor::zeros(std::move(shape), requires_grad);
    for (double& v : t.values()) v = u(rng);
    return t;
}

/// Nested-loop convolution, zero padding.
inline std::vector<double> conv2d(std::span<const double> x, std::span<const double> w, std::span<const double> b,
                                  std::size_t n, std::size_t c, std::size_t h, std::size_t wd, std::size_t o,
                                  std::size_t k, std::size_t stride, std::size_t pad) {
    const std::size_t oh = (h + 2 * pad - k) / stride + 1, ow = (wd + 2 * pad - k) / stride + 1;
    std::vector<double> out(n * o * oh * ow, 0.0);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t oc = 0; oc < o; ++oc)
            for (std::size_t r = 0; r < oh; ++r)
                for (std::size_t q = 0; q < ow; ++q) {
                    double acc = b.empty() ? 0.0 : b[oc];
                    for (std::size_t ic = 0; ic < c; ++ic)
                        for (std::size_t i = 0; i < k; ++i)
                            for (std::size_t j = 0; j < k; ++j) {
                                const long y = static_cast<long>(r * stride + i) - static_cast<long>(pad);
                                const long xx = static_cast<long>(q * stride + j) - static_cast<long>(pad);
                                if (y < 0 || xx < 0 || y >= static_cast<long>(h) || xx >= static_cast<long>(wd)) continue;
                                acc += x[((s * c + ic) * h + static_cast<std::size_t>(y)) * wd + static_cast<std::size_t>(xx)] *
                                       w[((oc * c + ic) * k + i) * k + j];
                            }
                    out[((s * o + oc) * oh + r) * ow + q] = acc;
                }
    return out;
}

/// Field value from bearings: the angle between the ray and the gaze
/// direction is measured with atan2, then cos(angle) below 90°, else 0.
inline double field_value(double hx, double hy, double px, double py, double dx, double dy) {
    if (px == hx && py == hy) return 0.0;
    double a = std::atan2(py - hy, px - hx) - std::atan2(dy, dx);
    while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
    while (a < -std::numbers::pi) a += 2.0 * std::numbers::pi;
    a = std::abs(a);
    return a >= std::numbers::pi / 2.0 ? 0.0 : std::cos(a);
}

/// Gaussian ground-truth value at cell (row, col) for gaze (x, y).
inline double gaussian_cell(std::size_t row, std::size_t col, double x, double y, std::size_t width,
                            std::size_t height, double sigma) {
    const double gx = x * static_cast<double>(width) - 0.5;
    const double gy = y * static_cast<double>(height) - 0.5;
    const double dc = static_cast<double>(col) - gx, dr = static_cast<double>(row) - gy;
    return std::exp(-(dc * dc + dr * dr) / (2.0 * sigma * sigma)) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
}

/// ROC area by sweeping every distinct score as a threshold (predict positive
/// when score >= t) and integrating the (FPR, TPR) polyline with trapezoids.
inline double roc_auc_sweep(std::span<const double> scores, std::span<const char> positive) {
    std::vector<double> thresholds(scores.begin(), scores.end());
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    double p = 0, n = 0;
    for (char c : positive) (c ? p : n) += 1;
    double area = 0.0, prev_fpr = 0.0, prev_tpr = 0.0;
    for (double t : thresholds) {
        double tp = 0, fp = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] >= t) (positive[i] ? tp : fp) += 1;
        }
        const double fpr = fp / n, tpr = tp / p;
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_fpr = fpr;
        prev_tpr = tpr;
    }
    return area;
}

/// Angle in degrees between two vectors, from bearings.
inline double angle_deg(double ax, double ay, double bx, double by) {
    double a = std::atan2(ay, ax) - std::atan2(by, bx);
    while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
    while (a < -std::numbers::pi) a += 2.0 * std::numbers::pi;
    return std::abs(a) * 180.0 / std::numbers::pi;
}

/// Central-difference gradient of a scalar function of `t`'s values.
inline std::vector<double> numeric_grad(const std::function<double()>& f, Tensor t, double h = 1e-5) {
    std::vector<double> g(t.size());
    auto v = t.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double orig = v[i];
        v[i] = orig + h;
        const double up = f();
        v[i] = orig - h;
        const double down = f();
        v[i] = orig;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

/// max_i |a_i − b_i| / max(max_i |b_i|, 1e-12).
inline double max_rel_error(std::span<const double> a, std::span<const double> b) {
    double diff = 0.0, scale = 1e-12;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff = std::max(diff, std::abs(a[i] - b[i]));
        scale = std::max(scale, std::abs(b[i]));
    }
    return diff / scale;
}

/// Scalar Adam with L2 decay folded into the gradient.
struct ScalarAdam {
    double lr, b1, b2, eps, wd;
    double m = 0.0, v = 0.0;
    int t = 0;
    double step(double p, double g) {
        g += wd * p;
        ++t;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mh = m / (1 - std::pow(b1, t));
        const double vh = v / (1 - std::pow(b2, t));
        return p - lr * mh / (std::sqrt(vh) + eps);
    }
};

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("gazefield_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace oracle
