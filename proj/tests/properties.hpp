#pragma once

// Randomised property suite for the gaze direction field, shared by the unit
// tests and the acceptance runner.

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <string>

#include "gazefield/direction_field.hpp"
#include "oracles.hpp"

namespace properties {

/// Failure count per property over `n` random (head, dir, P, gamma) tuples.
inline std::map<std::string, int> field_failures(int n, std::uint64_t seed, double tol = 1e-9) {
    using gazefield::Direction;
    using gazefield::NormalizedPoint;
    namespace field = gazefield::field;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    std::uniform_real_distribution<double> gamma_dist(1.0, 6.0);
    std::map<std::string, int> fail{{"range", 0},         {"oracle", 0},       {"ray_maximal", 0},
                                    {"monotone", 0},      {"clamp_90", 0},     {"radial", 0},
                                    {"power", 0},         {"stack_power", 0}};
    for (int i = 0; i < n; ++i) {
        const NormalizedPoint head{unit(rng), unit(rng)};
        const double phi = angle(rng);
        const double scale = 0.1 + 2.0 * unit(rng);
        const Direction dir{scale * std::cos(phi), scale * std::sin(phi)};
        const NormalizedPoint p{unit(rng), unit(rng)};
        const double gamma = gamma_dist(rng);

        const double v = field::field_value(head, p, dir);
        const double vg = field::field_value_pow(head, p, dir, gamma);
        if (!(v >= 0.0 && v <= 1.0 && vg >= 0.0 && vg <= 1.0)) ++fail["range"];
        if (std::abs(v - oracle::field_value(head.x, head.y, p.x, p.y, dir.dx, dir.dy)) > tol) ++fail["oracle"];
        if (std::abs(vg - std::pow(v, gamma)) > 1e-12) ++fail["power"];

        // Any point on the ray inside the unit square.
        const double ux = std::cos(phi), uy = std::sin(phi);
        double tmax = 10.0;
        if (ux > 0) tmax = std::min(tmax, (1.0 - head.x) / ux);
        if (ux < 0) tmax = std::min(tmax, -head.x / ux);
        if (uy > 0) tmax = std::min(tmax, (1.0 - head.y) / uy);
        if (uy < 0) tmax = std::min(tmax, -head.y / uy);
        if (tmax > 1e-6) {
            const double t = tmax * (0.01 + 0.99 * unit(rng));
            const NormalizedPoint on{head.x + t * ux, head.y + t * uy};
            if (std::abs(field::field_value(head, on, dir) - 1.0) > tol) ++fail["ray_maximal"];
        }

        // Fixed |G|, two angles in [0°, 90°]; and one beyond 90°.
        const double r = 0.05 + 0.5 * unit(rng);
        double a1 = unit(rng) * std::numbers::pi / 2, a2 = unit(rng) * std::numbers::pi / 2;
        if (a1 > a2) std::swap(a1, a2);
        const double side = unit(rng) < 0.5 ? 1.0 : -1.0;
        auto at = [&](double a) {
            return NormalizedPoint{head.x + r * std::cos(phi + side * a), head.y + r * std::sin(phi + side * a)};
        };
        if (field::field_value(head, at(a1), dir) < field::field_value(head, at(a2), dir) - tol) ++fail["monotone"];
        const double beyond = std::numbers::pi / 2 + 1e-6 + unit(rng) * (std::numbers::pi / 2 - 1e-6);
        if (field::field_value(head, at(beyond), dir) != 0.0) ++fail["clamp_90"];
        if (field::field_value(head, at(std::numbers::pi / 2), dir) > tol) ++fail["clamp_90"];

        // Scaling G leaves the value unchanged.
        const double c = 0.01 + 5.0 * unit(rng);
        const NormalizedPoint scaled{head.x + c * (p.x - head.x), head.y + c * (p.y - head.y)};
        if (std::abs(field::field_value(head, scaled, dir) - v) > tol) ++fail["radial"];
    }

    // Stack channels: channel for gamma == channel for 1 raised to gamma.
    for (int i = 0; i < 10; ++i) {
        const NormalizedPoint head{unit(rng), unit(rng)};
        const double phi = angle(rng);
        const std::vector<double> gammas{1.0, 2.0, 5.0, gamma_dist(rng)};
        const auto stack = field::build_field_stack(head, {std::cos(phi), std::sin(phi)}, 16, 12, gammas);
        for (std::size_t k = 1; k < gammas.size(); ++k)
            for (std::size_t row = 0; row < 12; ++row)
                for (std::size_t col = 0; col < 16; ++col)
                    if (std::abs(stack.at(k, row, col) - std::pow(stack.at(0, row, col), gammas[k])) > 1e-12)
                        ++fail["stack_power"];
    }
    return fail;
}

}  // namespace properties
