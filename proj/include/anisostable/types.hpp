#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace anisostable {

// Points live in R^d with d <= 3; unused trailing components stay zero.
using Vec = std::array<double, 3>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

// Bad model data or a request outside the supported regime (CLI exit 2).
struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Quantity undefined by convention, e.g. V when d <= alpha (CLI exit 2).
struct RegimeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A computation could not certify its own output (CLI exit 3).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double dot(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }
inline Vec operator+(const Vec& a, const Vec& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec operator-(const Vec& a, const Vec& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec operator-(const Vec& a) { return {-a[0], -a[1], -a[2]}; }
inline Vec operator*(double s, const Vec& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline Vec cross(const Vec& a, const Vec& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline Vec normalized(const Vec& a) {
    double n = norm(a);
    if (!(n > 0)) throw ModelError("zero direction vector");
    return (1.0 / n) * a;
}

// Angle between unit vectors, stable near 0 and pi.
inline double angle_between(const Vec& a, const Vec& b) {
    return std::atan2(norm(cross(a, b)), dot(a, b));
}

}  // namespace anisostable
