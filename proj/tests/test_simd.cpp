#include <doctest.h>

#include <random>
#include <vector>

#include "anisostable/ridge.hpp"
#include "anisostable/simd.hpp"

using namespace anisostable;

namespace {

std::vector<double> uniform(std::size_t n, double lo, double hi, unsigned seed) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(g);
    return v;
}

}  // namespace

TEST_CASE("avx2 kernels match the scalar ones") {
    if (!simd::avx2_supported()) {
        MESSAGE("no AVX2 on this CPU; only the scalar path is exercised");
        return;
    }
    const auto& s = simd::scalar_kernels();
    const auto& v = *simd::avx2_kernels();

    SUBCASE("abs_dot_pow_sum, odd lengths included") {
        for (std::size_t n : {1u, 3u, 4u, 7u, 64u, 1001u})
            for (double a : {0.4, 1.0, 1.5, 1.9}) {
                auto x = uniform(n, -1, 1, 1), y = uniform(n, -1, 1, 2), z = uniform(n, -1, 1, 3),
                     c = uniform(n, 0, 1, 4);
                double r0 = s.abs_dot_pow_sum(x.data(), y.data(), z.data(), c.data(), n, 0.3, -0.7, 0.2, a);
                double r1 = v.abs_dot_pow_sum(x.data(), y.data(), z.data(), c.data(), n, 0.3, -0.7, 0.2, a);
                CHECK(r1 == doctest::Approx(r0).epsilon(1e-12));
            }
    }

    SUBCASE("exp_neg") {
        auto in = uniform(1003, 0, 700, 5);
        in[0] = 0;
        in[1] = 1e-300;
        std::vector<double> o0(in.size()), o1(in.size());
        s.exp_neg(in.data(), o0.data(), in.size());
        v.exp_neg(in.data(), o1.data(), in.size());
        for (std::size_t i = 0; i < in.size(); ++i) CHECK(o1[i] == doctest::Approx(o0[i]).epsilon(1e-13));
    }

    SUBCASE("ridge lookup and panels") {
        for (double a : {1.0, 0.4}) {
            const auto& t = ridge_table(a, 2);
            auto view = t.view();
            auto x = uniform(517, -30, 30, 6);
            std::vector<double> w0(x.size()), J0(x.size()), K0(x.size()), w1(x.size()), J1(x.size()), K1(x.size());
            s.ridge_lookup(view, x.data(), x.size(), 1.3, 0.2, w0.data(), J0.data(), K0.data());
            v.ridge_lookup(view, x.data(), x.size(), 1.3, 0.2, w1.data(), J1.data(), K1.data());
            for (std::size_t i = 0; i < x.size(); ++i) {
                CHECK(w1[i] == doctest::Approx(w0[i]).epsilon(1e-15));
                CHECK(J1[i] == doctest::Approx(J0[i]).epsilon(1e-12).scale(1e-15));
                CHECK(K1[i] == doctest::Approx(K0[i]).epsilon(1e-12).scale(1e-15));
            }
            std::vector<double> wb(x.size()), Jb(x.size()), Kb(x.size());
            s.ridge_lookup(view, x.data(), x.size(), 1.31, 0.2, wb.data(), Jb.data(), Kb.data());
            std::vector<double> acc0(x.size(), 0.5), acc1(x.size(), 0.5);
            s.ridge_panel(x.size(), w0.data(), J0.data(), K0.data(), wb.data(), Jb.data(), Kb.data(), 0.7, 1e-9,
                          acc0.data());
            v.ridge_panel(x.size(), w0.data(), J0.data(), K0.data(), wb.data(), Jb.data(), Kb.data(), 0.7, 1e-9,
                          acc1.data());
            for (std::size_t i = 0; i < x.size(); ++i) CHECK(acc1[i] == doctest::Approx(acc0[i]).epsilon(1e-11));
        }
    }
}

TEST_CASE("dispatch honours ANISOSTABLE_SIMD") {
    const auto& k = simd::active();
    CHECK(k.name != nullptr);
    if (!simd::avx2_supported()) CHECK(std::string(k.name) == simd::scalar_kernels().name);
}
