#include <algorithm>
#include <cmath>

#include "anisostable/simd.hpp"

namespace anisostable::simd {

namespace {

double abs_dot_pow_sum(const double* x, const double* y, const double* z, const double* c, std::size_t n, double ux,
                       double uy, double uz, double alpha) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double p = std::abs(ux * x[i] + uy * y[i] + uz * z[i]);
        if (p > 0) s += c[i] * std::exp(alpha * std::log(p));
    }
    return s;
}

void lookup_one(const RidgeTableView& t, double w, double& J, double& K) {
    double aw = std::abs(w);
    if (aw > t.wmax) {
        t.tail(t.ctx, w, &J, &K);
        return;
    }
    double v = aw / t.scale;
    double z = std::log(v + std::sqrt(v * v + 1)) * t.inv_dz;
    // knot k sits at z = (k - 1)·dz
    double fz = std::floor(z);
    std::size_t i = static_cast<std::size_t>(fz) + 1;
    i = std::min(i, t.knots - 3);
    double u = z - (static_cast<double>(i) - 1);
    double l0 = -u * (u - 1) * (u - 2) / 6;
    double l1 = (u + 1) * (u - 1) * (u - 2) / 2;
    double l2 = -(u + 1) * u * (u - 2) / 2;
    double l3 = (u + 1) * u * (u - 1) / 6;
    J = l0 * t.J[i - 1] + l1 * t.J[i] + l2 * t.J[i + 1] + l3 * t.J[i + 2];
    K = l0 * t.K[i - 1] + l1 * t.K[i] + l2 * t.K[i + 1] + l3 * t.K[i + 2];
    if (w < 0) K = -K;
}

void ridge_lookup(const RidgeTableView& t, const double* x, std::size_t n, double a, double b, double* w, double* J,
                  double* K) {
    for (std::size_t j = 0; j < n; ++j) {
        w[j] = a * x[j] + b;
        lookup_one(t, w[j], J[j], K[j]);
    }
}

void ridge_panel(std::size_t n, const double* w0, const double* J0, const double* K0, const double* w1,
                 const double* J1, const double* K1, double coef, double tiny, double* acc) {
    for (std::size_t j = 0; j < n; ++j) {
        double dw = w1[j] - w0[j];
        double v = std::abs(dw) > tiny ? (K1[j] - K0[j]) / dw : 0.5 * (J0[j] + J1[j]);
        acc[j] += coef * v;
    }
}

void exp_neg(const double* in, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(-in[i]);
}

}  // namespace

const Kernels& scalar_kernels() {
    static const Kernels k{"scalar", abs_dot_pow_sum, ridge_lookup, ridge_panel, exp_neg};
    return k;
}

// Used by the AVX2 path for lanes beyond the table.
void ridge_lookup_scalar_one(const RidgeTableView& t, double w, double& J, double& K) { lookup_one(t, w, J, K); }

}  // namespace anisostable::simd
