#pragma once

#include <cmath>

namespace gazefield {

/// Image position with width = height = 1; x grows rightward, y downward.
struct NormalizedPoint {
    double x = 0.0;
    double y = 0.0;

    bool inside_unit_square() const { return x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0; }
    friend bool operator==(const NormalizedPoint&, const NormalizedPoint&) = default;
};

struct Direction {
    double dx = 0.0;
    double dy = 0.0;

    double norm() const { return std::hypot(dx, dy); }
    bool is_zero() const { return dx == 0.0 && dy == 0.0; }
    /// Unit vector; the zero vector maps to itself.
    Direction normalized() const {
        const double n = norm();
        return n > 0.0 ? Direction{dx / n, dy / n} : Direction{};
    }
    friend bool operator==(const Direction&, const Direction&) = default;
};

inline double distance(NormalizedPoint a, NormalizedPoint b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Angle between two non-zero vectors in degrees, in [0, 180].
inline double angle_degrees(Direction a, Direction b) {
    const double c = (a.dx * b.dx + a.dy * b.dy) / (a.norm() * b.norm());
    return std::acos(std::fmax(-1.0, std::fmin(1.0, c))) * 180.0 / M_PI;
}

}  // namespace gazefield
