#pragma once

#include <vector>

#include "anisostable/simd.hpp"

namespace anisostable {

// J(w) = ∫_0^∞ r^{d-1} cos(rw) e^{-r^α} dr and its antiderivative
// K(w) = ∫_0^w J = ∫_0^∞ r^{d-2} sin(rw) e^{-r^α} dr (d >= 2).
// With them, p_1(x) = (2π)^{-d} ∫_S Φ(θ)^{-d/α} J(θ·x Φ(θ)^{-1/α}) dθ.
class RidgeTable {
public:
    RidgeTable(double alpha, int d);

    double alpha() const { return alpha_; }
    int dim() const { return d_; }

    // Direct quadrature, no table.
    double J_direct(double w) const;
    double K_direct(double w) const;
    // Large-|w| asymptotic expansions.
    double J_asymptotic(double w) const;
    double K_asymptotic(double w) const;

    // Table lookup (scalar).
    void lookup(double w, double& J, double& K) const;
    simd::RidgeTableView view() const;

    double wmax() const { return wmax_; }

private:
    static void tail(const void* ctx, double w, double* J, double* K);

    double alpha_;
    int d_;
    double scale_, dz_, wmax_, rcut_;
    std::vector<double> J_, K_;
};

// Tables are costly (a few thousand oscillatory integrals); shared per (α, d).
const RidgeTable& ridge_table(double alpha, int d);

}  // namespace anisostable
