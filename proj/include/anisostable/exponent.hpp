#pragma once

#include <vector>

#include "anisostable/measure.hpp"

namespace anisostable {

// Φ(u) = c_α ∫ |u·ξ|^α μ(dξ), c_α = π / (2 sin(πα/2) Γ(1+α)).
class ExponentEvaluator {
public:
    explicit ExponentEvaluator(const StableModel& m);

    const StableModel& model() const { return *m_; }
    double phi_constant() const { return c_; }

    // Adaptive evaluation, exact up to quadrature tolerance (~1e-10).
    double phi(const Vec& u) const;
    // Fixed-node evaluation through the SIMD kernel; caps use product Gauss rules,
    // so cap contributions carry ~1e-4 relative error near kinks.
    double phi_fast(const Vec& u) const;

    struct Range {
        double min, max;
        Vec argmin, argmax;
    };
    // min/max of Φ over a sphere grid (comparability constants).
    Range sphere_range(int n = 0) const;

private:
    const StableModel* m_;
    double c_;
    double uniform_factor_;  // M · E|ξ_1|^α for ξ uniform on the sphere
    SpectralMeasure caps_;
    std::vector<double> nx_, ny_, nz_, nw_;
};

// E|ξ_1|^α for ξ uniform on S^{d-1}.
double uniform_abs_moment(int d, double alpha);

// Quadrature nodes on the sphere. d = 2: n equally spaced angles on [0, π)
// (half circle; use the symmetry u ↦ -u). d = 3: Fibonacci lattice of n points.
std::vector<Vec> sphere_grid(int d, int n, bool half = false);

}  // namespace anisostable
