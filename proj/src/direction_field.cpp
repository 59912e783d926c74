#include "gazefield/direction_field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gazefield/error.hpp"
#include "gazefield/ops.hpp"

namespace gazefield::field {

namespace {

using Index = std::ptrdiff_t;

// Clamped cosine between G = p − head and dir, with |G| = 0 mapped to 0.
// Also returns the unit vectors needed by the derivative.
struct CellCosine {
    double cosine = 0.0;  // unclamped
    double gx = 0.0, gy = 0.0;
};

inline CellCosine cell_cosine(double px, double py, double hx, double hy, double ux, double uy) {
    const double gx = px - hx, gy = py - hy;
    const double gn = std::hypot(gx, gy);
    if (gn == 0.0) return {};
    return {(gx * ux + gy * uy) / gn, gx / gn, gy / gn};
}

}  // namespace

Direction ray_direction(NormalizedPoint head, NormalizedPoint p) { return {p.x - head.x, p.y - head.y}; }

double field_value(NormalizedPoint head, NormalizedPoint p, Direction dir) {
    if (dir.is_zero()) throw NumericError("field_value: zero gaze direction");
    const Direction u = dir.normalized();
    const double c = cell_cosine(p.x, p.y, head.x, head.y, u.dx, u.dy).cosine;
    return std::clamp(c, 0.0, 1.0);
}

double field_value_pow(NormalizedPoint head, NormalizedPoint p, Direction dir, double gamma) {
    if (!(gamma >= 1.0)) throw NumericError("field_value_pow: gamma must be >= 1, got " + std::to_string(gamma));
    return std::pow(field_value(head, p, dir), gamma);
}

void validate_gammas(std::span<const double> gammas) {
    if (gammas.empty()) throw ShapeError("direction field needs at least one gamma");
    for (double g : gammas) {
        if (!(g >= 1.0) || !std::isfinite(g)) {
            throw NumericError("direction field gamma must be finite and >= 1, got " + std::to_string(g));
        }
    }
}

DirectionFieldStack build_field_stack(NormalizedPoint head, Direction dir, std::size_t width, std::size_t height,
                                      std::span<const double> gammas) {
    if (width < 2 || height < 2) throw ShapeError("direction field extents must be >= 2");
    validate_gammas(gammas);
    DirectionFieldStack stack;
    stack.gammas.assign(gammas.begin(), gammas.end());
    stack.width = width;
    stack.height = height;
    stack.head = head;
    std::vector<double> out(gammas.size() * width * height);
    const double d[2] = {dir.dx, dir.dy};
    const double h[2] = {head.x, head.y};
    field_forward(d, h, 1, width, height, gammas, out);
    const std::size_t plane = width * height;
    for (std::size_t s = 0; s < gammas.size(); ++s) {
        stack.grids.emplace_back(out.begin() + static_cast<Index>(s * plane),
                                 out.begin() + static_cast<Index>((s + 1) * plane));
    }
    return stack;
}

Tensor build_field_stack(Tape& tape, std::span<const NormalizedPoint> heads, const Tensor& dir, std::size_t width,
                         std::size_t height, std::span<const double> gammas) {
    std::vector<double> hv;
    hv.reserve(heads.size() * 2);
    for (const auto& h : heads) {
        hv.push_back(h.x);
        hv.push_back(h.y);
    }
    Tensor head_tensor({heads.size(), 2}, std::move(hv));
    return ops::direction_field(tape, dir, head_tensor, width, height, gammas);
}

void field_forward(std::span<const double> dirs, std::span<const double> heads, std::size_t batch,
                   std::size_t width, std::size_t height, std::span<const double> gammas, std::span<double> out) {
    const std::size_t plane = width * height;
    const std::size_t scales = gammas.size();
    for (std::size_t n = 0; n < batch; ++n) {
        if (dirs[2 * n] == 0.0 && dirs[2 * n + 1] == 0.0) throw NumericError("direction field: zero gaze direction");
    }
#pragma omp parallel for schedule(static) if (batch * plane * scales > (1u << 14))
    for (Index n = 0; n < static_cast<Index>(batch); ++n) {
        const double dn = std::hypot(dirs[2 * n], dirs[2 * n + 1]);
        const double ux = dirs[2 * n] / dn, uy = dirs[2 * n + 1] / dn;
        const double hx = heads[2 * n], hy = heads[2 * n + 1];
        double* base = out.data() + n * scales * plane;
        for (std::size_t r = 0; r < height; ++r) {
            for (std::size_t c = 0; c < width; ++c) {
                const NormalizedPoint p = cell_center(r, c, width, height);
                const double s = std::clamp(cell_cosine(p.x, p.y, hx, hy, ux, uy).cosine, 0.0, 1.0);
                for (std::size_t k = 0; k < scales; ++k) {
                    base[k * plane + r * width + c] = gammas[k] == 1.0 ? s : std::pow(s, gammas[k]);
                }
            }
        }
    }
}

void field_backward(std::span<const double> dirs, std::span<const double> heads, std::size_t batch,
                    std::size_t width, std::size_t height, std::span<const double> gammas,
                    std::span<const double> dout, std::span<double> ddir) {
    const std::size_t plane = width * height;
    const std::size_t scales = gammas.size();
#pragma omp parallel for schedule(static) if (batch * plane * scales > (1u << 14))
    for (Index n = 0; n < static_cast<Index>(batch); ++n) {
        const double dx = dirs[2 * n], dy = dirs[2 * n + 1];
        const double dn = std::hypot(dx, dy);
        const double ux = dx / dn, uy = dy / dn;
        const double hx = heads[2 * n], hy = heads[2 * n + 1];
        const double* g = dout.data() + n * scales * plane;
        double acc_x = 0.0, acc_y = 0.0;
        for (std::size_t r = 0; r < height; ++r) {
            for (std::size_t c = 0; c < width; ++c) {
                const NormalizedPoint p = cell_center(r, c, width, height);
                const CellCosine cc = cell_cosine(p.x, p.y, hx, hy, ux, uy);
                // Clamped cells (cos <= 0) and the head cell pass no gradient.
                if (cc.cosine <= 0.0) continue;
                double dvalue = 0.0;
                for (std::size_t k = 0; k < scales; ++k) {
                    const double up = g[k * plane + r * width + c];
                    if (up == 0.0) continue;
                    const double gamma = gammas[k];
                    dvalue += up * (gamma == 1.0 ? 1.0 : gamma * std::pow(cc.cosine, gamma - 1.0));
                }
                // d cos / d dir = (Ĝ − cos·û) / |dir|
                acc_x += dvalue * (cc.gx - cc.cosine * ux);
                acc_y += dvalue * (cc.gy - cc.cosine * uy);
            }
        }
        ddir[2 * n] += acc_x / dn;
        ddir[2 * n + 1] += acc_y / dn;
    }
}

}  // namespace gazefield::field
