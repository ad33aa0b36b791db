#pragma once

#include "anisostable/measure.hpp"

namespace anisostable {

// ν(dy) = r^{-1-α} dr μ(dθ) in polar form. Holds no data of its own.
class LevyMeasureView {
public:
    explicit LevyMeasureView(const StableModel& m) : m_(&m) {}

    const StableModel& model() const { return *m_; }

    // ν(B(x, ρ)); +inf when the ball reaches the origin.
    double nu_ball_mass(const Vec& x, double rho, double rel_tol = 1e-8) const;

    // ∫_{B(y,ρ)} |y-v|^{α-d} ν(dv); +inf when an atom ray passes through y and
    // the kernel is not integrable along it (α - d <= -1).
    double riesz_ball_integral(const Vec& y, double rho, double rel_tol = 1e-8) const;

    // ∫ f(s) s^{-1-α} ds along direction θ restricted to |sθ - y| < ρ, for the
    // kernel |y - sθ|^{α-d}; exposed for tests. phi is the angle between θ and y.
    double riesz_ray(double ynorm, double phi, double rho) const;

private:
    const StableModel* m_;
};

}  // namespace anisostable
