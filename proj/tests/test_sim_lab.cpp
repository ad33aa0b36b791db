#include <doctest.h>

#include "anisostable/lab.hpp"
#include "anisostable/parallel.hpp"

using namespace anisostable;

TEST_CASE("Wilson interval edge cases") {
    auto a = wilson(0, 10);
    CHECK(a.lo == 0);
    CHECK(a.hi > 0.2);
    auto b = wilson(10, 10);
    CHECK(b.hi == doctest::Approx(1));
    auto c = wilson(30, 100);
    CHECK(c.lo < 0.3);
    CHECK(c.hi > 0.3);
}

TEST_CASE("exterior partition: cells and volumes") {
    ExteriorPartition p;
    p.d = 2;
    p.radii = {1, 1.5, 2, kInf};
    p.sectors = 8;
    double shell = 0;
    for (std::size_t c = 0; c < p.size(); ++c) {
        std::size_t sh, se, bd;
        p.split(c, sh, se, bd);
        if (sh == 0) shell += p.volume(c);
        if (sh == 2) CHECK(std::isinf(p.volume(c)));
    }
    CHECK(shell == doctest::Approx(kPi * (1.5 * 1.5 - 1)));
    CHECK(p.cell({0.5, 0, 0}) == -1);
    CHECK(p.cell({1.2, 0.01, 0}) >= 0);
    CHECK(p.cell({1.2, 0.01, 0}) != p.cell({-1.2, 0.01, 0}));

    ExteriorPartition q;
    q.d = 3;
    q.radii = {1, 2};
    q.sectors = 4;
    q.bands = 3;
    double tot = 0;
    for (std::size_t c = 0; c < q.size(); ++c) tot += q.volume(c);
    CHECK(tot == doctest::Approx(4.0 / 3 * kPi * 7));
}

TEST_CASE("simulation does not depend on the thread count") {
    auto m = make_atomic_axes(2, 1);
    SimulatorConfig cfg;
    cfg.paths = 600;
    cfg.seed = 9;
    set_threads(1);
    auto a = simulate_exit(m, {0.2, 0.1, 0}, cfg);
    set_threads(3);
    auto b = simulate_exit(m, {0.2, 0.1, 0}, cfg);
    set_threads(0);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.tau[i] == b.tau[i]);
        CHECK(a.exit[i] == b.exit[i]);
    }
}

TEST_CASE("mean exit time of the Cauchy process from the centre") {
    auto m = make_isotropic(2, 1, 1);
    SimulatorConfig cfg;
    cfg.paths = 20000;
    auto b = simulate_exit(m, {0, 0, 0}, cfg);
    IsotropicOracle iso(m);
    CHECK(iso.exit_time({0, 0, 0}) == doctest::Approx(2 / kPi).epsilon(1e-12));
    CHECK(std::abs(b.mean_tau() - 2 / kPi) < 4 * b.mean_tau_se() + 0.01);
}

TEST_CASE("closed-form Green function is symmetric") {
    for (double a : {0.6, 1.0, 1.7}) {
        auto m = make_isotropic(2, a, 1);
        IsotropicOracle iso(m);
        Rng g(4);
        std::uniform_real_distribution<double> U(-0.7, 0.7);
        for (int i = 0; i < 20; ++i) {
            Vec x{U(g), U(g), 0}, v{U(g), U(g), 0};
            CHECK(iso.green(x, v) == doctest::Approx(iso.green(v, x)).epsilon(1e-10));
        }
    }
}

TEST_CASE("simulated Green function is symmetric for a symmetric anisotropic model") {
    // ∫_A G(x, v) dv / |A| at A around y, and the other way round; coarse cells
    auto m = make_atomic_axes(2, 1.5);
    SimulatorConfig cfg;
    cfg.paths = 20000;
    ExitOptions o;
    o.occupation = true;
    o.lattice.n = 10;
    Vec x{-0.3, -0.1, 0}, y{0.3, 0.1, 0};
    auto gx = green_estimate(simulate_exit(m, x, cfg, o));
    o.first_path = cfg.paths;
    auto gy = green_estimate(simulate_exit(m, y, cfg, o));
    long cx = gx.lattice.cell(x), cy = gx.lattice.cell(y);
    double a = gx.G[cy], b = gy.G[cx];
    double se = std::hypot(gx.se[cy], gy.se[cx]);
    CHECK(std::abs(a - b) < 4 * se);
}

TEST_CASE("closed-form harmonic measure sums to one") {
    auto m = make_isotropic(2, 1, 1);
    IsotropicOracle iso(m);
    ExteriorPartition p;
    p.radii = {1, 1.2, 2, kInf};
    p.sectors = 4;
    for (Vec x : {Vec{0, 0, 0}, Vec{0.5, 0.2, 0}}) {
        double s = 0;
        for (std::size_t c = 0; c < p.size(); ++c) s += iso.poisson_mass(x, p, c);
        CHECK(s == doctest::Approx(1).epsilon(1e-6));
    }
}

TEST_CASE("node sums carry the whole spectral mass and ν(B^c) comes out exactly") {
    for (auto m : {make_isotropic(2, 1, 1), make_nu2(2, 1, 0.3), make_nu3()}) {
        Rng g(5);
        auto nd = mu_nodes(m.mu, 64, &g);
        double s = 0;
        for (auto& [th, w] : nd) s += w;
        CHECK(s == doctest::Approx(m.mu.total_mass()).epsilon(1e-9));
        ExteriorPartition p;
        p.d = m.d;
        p.radii = {1, 2, kInf};
        p.sectors = 8;
        p.bands = m.d == 3 ? 4 : 1;
        std::vector<double> out(p.size(), 0);
        nu_partition_masses(m.alpha, nd, {0, 0, 0}, p, 1, out);
        double t = 0;
        for (double v : out) t += v;
        CHECK(t == doctest::Approx(m.mu.total_mass() / m.alpha).epsilon(1e-9));
    }
}

TEST_CASE("Harnack verdict rule") {
    CHECK(harnack_verdict({2, 3}) == "inconclusive");
    CHECK(harnack_verdict({2.5, 2.6, 2.55, 2.6}) == "consistent");
    CHECK(harnack_verdict({5, 6, 7, 8}) == "violating");
    CHECK(harnack_verdict({5, 10, 10.5, 10.6}) == "consistent");
}

TEST_CASE("Harnack sup never decreases when the point set grows") {
    auto m = make_isotropic(2, 1, 1);
    HarnackConfig cfg;
    cfg.sim.paths = 4000;
    cfg.sectors = {8, 16, 32};
    cfg.radii = {1, 1.5, kInf};
    std::vector<Vec> pts{{0, 0, 0}, {0.2, 0, 0}, {0, -0.2, 0}, {0.45, 0, 0}, {-0.3, 0.3, 0}};
    std::vector<ExitBatch> b;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        ExitOptions o;
        o.first_path = i * cfg.sim.paths;
        b.push_back(simulate_exit(m, pts[i], cfg.sim, o));
    }
    auto sup_over = [&](double radius) {
        double s = 0;
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = 0; j < pts.size(); ++j) {
                if (i == j || norm(pts[i]) >= radius || norm(pts[j]) >= radius) continue;
                auto r = harnack_from_batches(m, b[i], b[j], cfg);
                for (auto& l : r.levels) s = std::max(s, l.sup_ratio);
            }
        return s;
    };
    double small = sup_over(0.25), large = sup_over(0.5);
    CHECK(small > 1);
    CHECK(large >= small);
}

TEST_CASE("conditional estimator agrees with exit counts on coarse cells") {
    auto m = make_atomic_axes(2, 1);
    SimulatorConfig cfg;
    cfg.paths = 20000;
    auto b = simulate_exit(m, {0.3, -0.2, 0}, cfg);
    ExteriorPartition p;
    p.radii = {1, 1.5, kInf};
    p.sectors = 4;
    auto h = harmonic_measure(b, p);
    auto s = conditional_harmonic_measure(m, b, p);
    double tot = 0;
    for (std::size_t c = 0; c < p.size(); ++c) {
        tot += s.freq[c];
        double se = std::hypot(s.se[c], std::sqrt(h.freq[c] * (1 - h.freq[c]) / h.paths));
        CHECK(std::abs(s.freq[c] - h.freq[c]) < 4 * se + 1e-3);
    }
    CHECK(tot == doctest::Approx(1 - b.censored_fraction()).epsilon(0.01));
}
