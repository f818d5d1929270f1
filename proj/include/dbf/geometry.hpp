#pragma once

#include <cmath>

namespace dbf {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s
inline constexpr double kPi = 3.14159265358979323846;

/// Planar position in meters.
struct Position2D {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Position2D&, const Position2D&) = default;
};

inline Position2D operator+(Position2D a, Position2D b) { return {a.x + b.x, a.y + b.y}; }
inline Position2D operator-(Position2D a, Position2D b) { return {a.x - b.x, a.y - b.y}; }

inline bool is_finite(Position2D p) { return std::isfinite(p.x) && std::isfinite(p.y); }

/// Straight-line distance between two points.
double euclidean_range(Position2D a, Position2D b) noexcept;

/// Free-space wavenumber 2πf/c in rad/m.
inline double wavenumber(double carrier_hz) { return 2.0 * kPi * carrier_hz / kSpeedOfLight; }

}  // namespace dbf
