#include <doctest.h>

#include "anisostable/exponent.hpp"
#include "anisostable/kato.hpp"
#include "anisostable/levy.hpp"

using namespace anisostable;

TEST_CASE("bundled measures are symmetric with unit mass") {
    for (auto m : {make_isotropic(2, 1, 1), make_atomic_axes(2, 1), make_nu2(2, 1, 0.3), make_nu3()}) {
        // ν2 is two arcs of angular radius 0.3 with density 1
        CHECK(m.mu.total_mass() == doctest::Approx(m.name == "nu2" ? 1.2 : 1).epsilon(1e-9));
        // symmetric: Φ(u) = Φ(-u) and the odd moment vanishes
        Rng g(3);
        Vec s{0, 0, 0};
        for (int i = 0; i < 20000; ++i) s = s + m.mu.sample_direction(g);
        CHECK(norm(s) / 20000 < 0.03);
    }
}

TEST_CASE("model JSON round trip keeps the checksum") {
    for (auto m : {make_atomic_axes(2, 0.75), make_nu2(3, 0.5), make_nu3()}) {
        auto back = model_from_json(m.to_json());
        CHECK(back.checksum() == m.checksum());
        CHECK(back.mu.total_mass() == doctest::Approx(m.mu.total_mass()));
    }
}

TEST_CASE("malformed models are rejected") {
    CHECK_THROWS_AS(model_from_json(nlohmann::json{{"d", 4}, {"alpha", 1}, {"spectral", {{"uniform_mass", 1}}}}),
                    ModelError);
    CHECK_THROWS_AS(model_from_json(nlohmann::json{{"d", 2}, {"alpha", 1}}), ModelError);
    CHECK_THROWS_AS(model_from_json(nlohmann::json{{"d", 2}, {"alpha", 2.5}, {"spectral", {{"uniform_mass", 1}}}}),
                    ModelError);
    // a single atom pair spans one axis only
    CHECK_THROWS_AS(model_from_json(nlohmann::json{
                        {"d", 2}, {"alpha", 1}, {"spectral", {{"atoms", {{{1, 0}, 0.5}}}}}}),
                    ModelError);
}

TEST_CASE("exponent: Cauchy calibration, homogeneity, fast path") {
    auto m = make_isotropic(2, 1, 1);
    ExponentEvaluator ev(m);
    CHECK(ev.phi({1, 0, 0}) == doctest::Approx(1).epsilon(1e-9));
    CHECK(ev.phi({0.6, -0.8, 0}) == doctest::Approx(1).epsilon(1e-9));

    for (auto mm : {make_atomic_axes(2, 0.75), make_nu2(2, 1.3, 0.3), make_nu2(3, 0.5)}) {
        ExponentEvaluator e(mm);
        Vec u = normalized(Vec{0.3, -0.5, mm.d == 3 ? 0.7 : 0});
        double p = e.phi(u);
        CHECK(e.phi(2.5 * u) == doctest::Approx(std::pow(2.5, mm.alpha) * p).epsilon(1e-9));
        CHECK(e.phi(-1.0 * u) == doctest::Approx(p).epsilon(1e-10));
        CHECK(e.phi_fast(u) == doctest::Approx(p).epsilon(1e-3));
    }
    // atoms at ±e1, ±e2 with mass 1/4: Φ(u) = c_α (|u1|^α + |u2|^α)/2
    auto a = make_atomic_axes(2, 0.75);
    ExponentEvaluator ea(a);
    Vec u{0.3, 0.9, 0};
    CHECK(ea.phi(u) == doctest::Approx(a.phi_constant() * (std::pow(0.3, 0.75) + std::pow(0.9, 0.75)) / 2));
}

TEST_CASE("uniform moment against the Beta-function form") {
    // E|ξ1|^α on S^1 is Γ((α+1)/2) / (√π Γ(α/2+1))
    for (double a : {0.5, 1.0, 1.5}) {
        double ex = std::tgamma((a + 1) / 2) / (std::sqrt(kPi) * std::tgamma(a / 2 + 1));
        CHECK(uniform_abs_moment(2, a) == doctest::Approx(ex).epsilon(1e-10));
    }
}

TEST_CASE("Levy ball mass: isotropic closed form far from the origin") {
    // ν(B(x, ρ)) ≈ M/(2π) |x|^{-1-α} π ρ² for small ρ; compare to 1%
    auto m = make_isotropic(2, 1, 1);
    LevyMeasureView l(m);
    double x = 3, rho = 0.05;
    double approx = 1 / (2 * kPi) * std::pow(x, -2.0) * kPi * rho * rho;
    CHECK(l.nu_ball_mass({x, 0, 0}, rho) == doctest::Approx(approx).epsilon(0.01));
    CHECK(std::isinf(l.nu_ball_mass({0.3, 0, 0}, 0.5)));
}

TEST_CASE("relative Kato ratio is exactly 1 in d = 1, α = 1") {
    StableModel m;
    m.d = 1;
    m.alpha = 1;
    m.mu = SpectralMeasure(1);
    m.mu.add_atom({1, 0, 0}, 1);
    LevyMeasureView l(m);
    for (double y : {0.6, 0.9, 1.7, -3.2, 10.0}) {
        double r = l.riesz_ball_integral({y, 0, 0}, 0.5) / l.nu_ball_mass({y, 0, 0}, 0.5);
        CHECK(r == doctest::Approx(1).epsilon(1e-9));
    }
}

TEST_CASE("spectral criterion picks the right rule") {
    CHECK(rk_spectral_check(make_atomic_axes(2, 1.5).mu, 1.5, 2).criterion == "automatic");
    CHECK(rk_spectral_check(make_atomic_axes(2, 1).mu, 1, 2).criterion == "log-kernel");
    auto s = rk_spectral_check(make_atomic_axes(2, 0.75).mu, 0.75, 2);
    CHECK(s.criterion == "power-kernel");
    CHECK(s.verdict == "fails");
}
