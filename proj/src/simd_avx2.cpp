// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <cmath>

#include "anisostable/simd.hpp"

namespace anisostable::simd {

void ridge_lookup_scalar_one(const RidgeTableView& t, double w, double& J, double& K);

namespace {

inline __m256d int_to_double(__m256i v) {
    // valid for 0 <= v < 2^51
    const __m256i magic_i = _mm256_set1_epi64x(0x4330000000000000LL);
    const __m256d magic_d = _mm256_set1_pd(4503599627370496.0);
    return _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(v, magic_i)), magic_d);
}

inline __m256i double_to_int(__m256d v) {
    // v integral-valued, |v| < 2^51
    const __m256d magic = _mm256_set1_pd(6755399441055744.0);
    __m256i bits = _mm256_castpd_si256(_mm256_add_pd(v, magic));
    return _mm256_sub_epi64(bits, _mm256_castpd_si256(magic));
}

// Natural log for positive normal inputs, about 1 ulp.
inline __m256d vlog(__m256d x) {
    const __m256i mant_mask = _mm256_set1_epi64x(0x000fffffffffffffLL);
    const __m256i one_bits = _mm256_set1_epi64x(0x3ff0000000000000LL);
    __m256i bits = _mm256_castpd_si256(x);
    __m256d e = _mm256_sub_pd(int_to_double(_mm256_srli_epi64(bits, 52)), _mm256_set1_pd(1023.0));
    __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));
    __m256d big = _mm256_cmp_pd(m, _mm256_set1_pd(1.4142135623730951), _CMP_GT_OQ);
    m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), big);
    e = _mm256_add_pd(e, _mm256_and_pd(big, _mm256_set1_pd(1.0)));
    __m256d one = _mm256_set1_pd(1.0);
    __m256d f = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
    __m256d s = _mm256_mul_pd(f, f);
    // 2 atanh(f) = 2f Σ s^k/(2k+1); |f| <= 0.1716 so eleven terms reach double precision
    __m256d p = _mm256_set1_pd(1.0 / 21);
    for (int k = 9; k >= 0; --k) p = _mm256_fmadd_pd(p, s, _mm256_set1_pd(1.0 / (2 * k + 1)));
    __m256d lm = _mm256_mul_pd(_mm256_add_pd(f, f), p);
    const __m256d ln2_hi = _mm256_set1_pd(0.6931471803691238);
    const __m256d ln2_lo = _mm256_set1_pd(1.9082149292705877e-10);
    return _mm256_add_pd(_mm256_fmadd_pd(e, ln2_hi, lm), _mm256_mul_pd(e, ln2_lo));
}

inline __m256d vexp(__m256d x) {
    x = _mm256_max_pd(x, _mm256_set1_pd(-708.0));
    x = _mm256_min_pd(x, _mm256_set1_pd(709.0));
    __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634)),
                                _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(0.6931471803691238), x);
    r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.9082149292705877e-10), r);
    // Taylor to degree 13 on |r| <= ln2/2
    __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);
    double inv_fact = 1.0 / 6227020800.0;
    for (int k = 12; k >= 0; --k) {
        inv_fact *= (k + 1);
        p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(inv_fact));
    }
    __m256i ni = _mm256_add_epi64(double_to_int(n), _mm256_set1_epi64x(1023));
    __m256d scale = _mm256_castsi256_pd(_mm256_slli_epi64(ni, 52));
    return _mm256_mul_pd(p, scale);
}

double abs_dot_pow_sum(const double* x, const double* y, const double* z, const double* c, std::size_t n, double ux,
                       double uy, double uz, double alpha) {
    const __m256d vx = _mm256_set1_pd(ux), vy = _mm256_set1_pd(uy), vz = _mm256_set1_pd(uz);
    const __m256d va = _mm256_set1_pd(alpha);
    const __m256d sign = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d p = _mm256_mul_pd(vx, _mm256_loadu_pd(x + i));
        p = _mm256_fmadd_pd(vy, _mm256_loadu_pd(y + i), p);
        p = _mm256_fmadd_pd(vz, _mm256_loadu_pd(z + i), p);
        p = _mm256_andnot_pd(sign, p);
        __m256d zero = _mm256_cmp_pd(p, _mm256_setzero_pd(), _CMP_EQ_OQ);
        __m256d safe = _mm256_blendv_pd(p, _mm256_set1_pd(1.0), zero);
        __m256d v = vexp(_mm256_mul_pd(va, vlog(safe)));
        v = _mm256_andnot_pd(zero, v);
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(c + i), v, acc);
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i) {
        double p = std::abs(ux * x[i] + uy * y[i] + uz * z[i]);
        if (p > 0) s += c[i] * std::exp(alpha * std::log(p));
    }
    return s;
}

void ridge_lookup(const RidgeTableView& t, const double* x, std::size_t n, double a, double b, double* w, double* J,
                  double* K) {
    const __m256d va = _mm256_set1_pd(a), vb = _mm256_set1_pd(b);
    const __m256d inv_scale = _mm256_set1_pd(1.0 / t.scale), inv_dz = _mm256_set1_pd(t.inv_dz);
    const __m256d one = _mm256_set1_pd(1.0), sign = _mm256_set1_pd(-0.0);
    const __m256d wmax = _mm256_set1_pd(t.wmax);
    const __m256d last = _mm256_set1_pd(static_cast<double>(t.knots - 3));
    const __m256d sixth = _mm256_set1_pd(1.0 / 6), half = _mm256_set1_pd(0.5), two = _mm256_set1_pd(2.0);
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        __m256d vw = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + j), vb);
        _mm256_storeu_pd(w + j, vw);
        __m256d aw = _mm256_andnot_pd(sign, vw);
        __m256d out = _mm256_cmp_pd(aw, wmax, _CMP_GT_OQ);
        __m256d v = _mm256_mul_pd(_mm256_min_pd(aw, wmax), inv_scale);
        __m256d z = _mm256_mul_pd(vlog(_mm256_add_pd(v, _mm256_sqrt_pd(_mm256_fmadd_pd(v, v, one)))), inv_dz);
        __m256d fi = _mm256_min_pd(_mm256_add_pd(_mm256_floor_pd(z), one), last);
        __m256d u = _mm256_sub_pd(z, _mm256_sub_pd(fi, one));
        __m256i idx = double_to_int(fi);
        __m256d um1 = _mm256_sub_pd(u, one), up1 = _mm256_add_pd(u, one), um2 = _mm256_sub_pd(u, two);
        __m256d l0 = _mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(u, um1), um2), _mm256_xor_pd(sixth, sign));
        __m256d l1 = _mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(up1, um1), um2), half);
        __m256d l2 = _mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(up1, u), um2), _mm256_xor_pd(half, sign));
        __m256d l3 = _mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(up1, u), um1), sixth);
        const __m256i p1 = _mm256_set1_epi64x(1), p2 = _mm256_set1_epi64x(2);
        __m256i i0 = _mm256_sub_epi64(idx, p1), i2 = _mm256_add_epi64(idx, p1), i3 = _mm256_add_epi64(idx, p2);
        __m256d vJ = _mm256_mul_pd(l0, _mm256_i64gather_pd(t.J, i0, 8));
        vJ = _mm256_fmadd_pd(l1, _mm256_i64gather_pd(t.J, idx, 8), vJ);
        vJ = _mm256_fmadd_pd(l2, _mm256_i64gather_pd(t.J, i2, 8), vJ);
        vJ = _mm256_fmadd_pd(l3, _mm256_i64gather_pd(t.J, i3, 8), vJ);
        __m256d vK = _mm256_mul_pd(l0, _mm256_i64gather_pd(t.K, i0, 8));
        vK = _mm256_fmadd_pd(l1, _mm256_i64gather_pd(t.K, idx, 8), vK);
        vK = _mm256_fmadd_pd(l2, _mm256_i64gather_pd(t.K, i2, 8), vK);
        vK = _mm256_fmadd_pd(l3, _mm256_i64gather_pd(t.K, i3, 8), vK);
        // K is odd in w
        vK = _mm256_xor_pd(vK, _mm256_and_pd(vw, sign));
        _mm256_storeu_pd(J + j, vJ);
        _mm256_storeu_pd(K + j, vK);
        int mask = _mm256_movemask_pd(out);
        if (mask)
            for (int l = 0; l < 4; ++l)
                if (mask & (1 << l)) ridge_lookup_scalar_one(t, w[j + l], J[j + l], K[j + l]);
    }
    for (; j < n; ++j) {
        w[j] = a * x[j] + b;
        ridge_lookup_scalar_one(t, w[j], J[j], K[j]);
    }
}

void ridge_panel(std::size_t n, const double* w0, const double* J0, const double* K0, const double* w1,
                 const double* J1, const double* K1, double coef, double tiny, double* acc) {
    const __m256d vc = _mm256_set1_pd(coef), vt = _mm256_set1_pd(tiny), sign = _mm256_set1_pd(-0.0);
    const __m256d half = _mm256_set1_pd(0.5);
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        __m256d dw = _mm256_sub_pd(_mm256_loadu_pd(w1 + j), _mm256_loadu_pd(w0 + j));
        __m256d small = _mm256_cmp_pd(_mm256_andnot_pd(sign, dw), vt, _CMP_LE_OQ);
        __m256d safe = _mm256_blendv_pd(dw, _mm256_set1_pd(1.0), small);
        __m256d slope = _mm256_div_pd(_mm256_sub_pd(_mm256_loadu_pd(K1 + j), _mm256_loadu_pd(K0 + j)), safe);
        __m256d mean = _mm256_mul_pd(half, _mm256_add_pd(_mm256_loadu_pd(J0 + j), _mm256_loadu_pd(J1 + j)));
        __m256d v = _mm256_blendv_pd(slope, mean, small);
        _mm256_storeu_pd(acc + j, _mm256_fmadd_pd(vc, v, _mm256_loadu_pd(acc + j)));
    }
    for (; j < n; ++j) {
        double dw = w1[j] - w0[j];
        double v = std::abs(dw) > tiny ? (K1[j] - K0[j]) / dw : 0.5 * (J0[j] + J1[j]);
        acc[j] += coef * v;
    }
}

void exp_neg(const double* in, double* out, std::size_t n) {
    const __m256d sign = _mm256_set1_pd(-0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, vexp(_mm256_xor_pd(_mm256_loadu_pd(in + i), sign)));
    for (; i < n; ++i) out[i] = std::exp(-in[i]);
}

}  // namespace

const Kernels* avx2_kernels() {
    static const Kernels k{"avx2", abs_dot_pow_sum, ridge_lookup, ridge_panel, exp_neg};
    return &k;
}

}  // namespace anisostable::simd
