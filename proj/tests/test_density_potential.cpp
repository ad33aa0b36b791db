#include <doctest.h>

#include "anisostable/density.hpp"
#include "anisostable/potential.hpp"

using namespace anisostable;

TEST_CASE("ridge inversion reproduces the Cauchy density") {
    auto m = make_isotropic(2, 1, 1);
    RidgeEvaluator r(m);
    for (Vec x : {Vec{0, 0, 0}, Vec{0.5, -1, 0}, Vec{3, 2, 0}}) {
        double ex = 1 / (2 * kPi) * std::pow(1 + dot(x, x), -1.5);
        CHECK(r.eval(x) == doctest::Approx(ex).epsilon(1e-4));
    }
}

TEST_CASE("product of one-dimensional Cauchy laws for atoms on the axes") {
    // each atom pair contributes (c_1/2)|u_i|, so p_1 factors into Cauchy densities of scale π/4
    auto m = make_atomic_axes(2, 1);
    RidgeEvaluator r(m);
    double g = kPi / 4;
    auto f = [&](double t) { return g / kPi / (g * g + t * t); };
    for (Vec x : {Vec{0, 0, 0}, Vec{0.7, -0.2, 0}, Vec{2, 1.5, 0}})
        CHECK(r.eval(x) == doctest::Approx(f(x[0]) * f(x[1])).epsilon(1e-3));
}

TEST_CASE("density scaling p_t(x) = t^{-d/α} p_1(t^{-1/α} x)") {
    auto m = make_atomic_axes(2, 1.5);
    auto g = build_density_grid(m, 4, 1.0 / 8);
    Vec x{0.5, 0.25, 0};
    auto a = density_at(2, x, g);
    Vec y = std::pow(2.0, -1 / 1.5) * x;
    CHECK(a.value == doctest::Approx(std::pow(2.0, -2 / 1.5) * g.interpolate(y)).epsilon(1e-12));
}

TEST_CASE("potential kernel: Riesz value and regime error") {
    auto m = make_isotropic(2, 1, 1);
    auto p = potential_profile(m, profile_directions(m, 16));
    for (double v : p.V) CHECK(2 * kPi * v == doctest::Approx(1).epsilon(1e-2));
    // d = 1 <= α: V is infinite by convention
    StableModel d1;
    d1.d = 1;
    d1.alpha = 1;
    d1.mu = SpectralMeasure(1);
    d1.mu.add_atom({1, 0, 0}, 1);
    CHECK_THROWS_AS(potential_profile(d1, profile_directions(d1, 2)), RegimeError);
}
