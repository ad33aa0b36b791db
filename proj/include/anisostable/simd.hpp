#pragma once

#include <cstddef>

namespace anisostable::simd {

// Tabulated J and K on a grid uniform in z = asinh(|w| / scale), starting one
// knot below z = 0 so the cubic stencil never leaves the table at w = 0.
// J is even in w, K is odd.
struct RidgeTableView {
    const double* J;
    const double* K;
    std::size_t knots;  // including the ghost knot at z = -dz
    double scale;
    double inv_dz;
    double wmax;  // lookups with |w| > wmax are delegated to `tail`
    void (*tail)(const void* ctx, double w, double* J, double* K);
    const void* ctx;
};

struct Kernels {
    const char* name;

    // Σ_i c_i |u·ξ_i|^α over nodes ξ_i = (x_i, y_i, z_i).
    double (*abs_dot_pow_sum)(const double* x, const double* y, const double* z, const double* c, std::size_t n,
                              double ux, double uy, double uz, double alpha);

    // w_j = a·x_j + b, then J(w_j), K(w_j) by 4-point cubic interpolation.
    void (*ridge_lookup)(const RidgeTableView& t, const double* x, std::size_t n, double a, double b, double* w,
                         double* J, double* K);

    // acc_j += coef · (K1_j - K0_j)/(w1_j - w0_j), or coef·(J0_j + J1_j)/2 when
    // |w1_j - w0_j| <= tiny: the integral over one angular panel of J along a
    // linear path in w, divided by the panel width.
    void (*ridge_panel)(std::size_t n, const double* w0, const double* J0, const double* K0, const double* w1,
                        const double* J1, const double* K1, double coef, double tiny, double* acc);

    // out_i = exp(-in_i)
    void (*exp_neg)(const double* in, double* out, std::size_t n);
};

const Kernels& scalar_kernels();
// Only callable when avx2_supported().
const Kernels* avx2_kernels();
bool avx2_supported();

// Chosen once: AVX2 when the CPU supports it and ANISOSTABLE_SIMD != "scalar".
const Kernels& active();

}  // namespace anisostable::simd
