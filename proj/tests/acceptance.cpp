// Acceptance run: one line per criterion, "criterion N: PASS|FAIL: detail".
// Usage: acceptance [N ...]; no arguments runs all of them. Exit 1 if any fails.
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <thread>

#include "anisostable/catalog.hpp"
#include "anisostable/density.hpp"
#include "anisostable/kato.hpp"
#include "anisostable/parallel.hpp"
#include "anisostable/potential.hpp"

using namespace anisostable;

namespace {

struct Result {
    bool pass;
    std::string detail;
};

std::string f(const char* fmt, double a) {
    char b[64];
    std::snprintf(b, sizeof b, fmt, a);
    return b;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1: inverted p_1 against the Cauchy density on |x| <= 4
Result c1() {
    auto t0 = std::chrono::steady_clock::now();
    auto m = make_isotropic(2, 1, 1);
    RidgeEvaluator r(m);
    double worst = 0;
    for (double x = -4; x <= 4; x += 0.125)
        for (double y = -4; y <= 4; y += 0.125) {
            double rr = x * x + y * y;
            if (rr > 16) continue;
            double ex = 1 / (2 * kPi) * std::pow(1 + rr, -1.5);
            worst = std::max(worst, std::abs(r.eval({x, y, 0}) / ex - 1));
        }
    double t = seconds_since(t0);
    return {worst <= 1e-3 && t <= 60, "max rel err " + f("%.2e", worst) + ", " + f("%.1f s", t)};
}

// 2: V = 1/(2π) on the circle and 𝕍(B(0,1)) = 1
Result c2() {
    auto m = make_isotropic(2, 1, 1);
    auto p = potential_profile(m, profile_directions(m, 512));
    double w = 0;
    for (double v : p.V) w = std::max(w, std::abs(2 * kPi * v - 1));
    double vm = vmass_ball({0, 0, 0}, 1, p);
    return {w <= 1e-2 && std::abs(vm - 1) <= 1e-2, "max |2πV-1| " + f("%.2e", w) + ", V(B(0,1)) " + f("%.6f", vm)};
}

// 3: d = 1, α = 1, μ = δ_1 + δ_{-1}: R(y) = 1
Result c3() {
    auto m = model_from_json(nlohmann::json{{"d", 1}, {"alpha", 1}, {"spectral", {{"atoms", {{{1}, 1.0}}}}}});
    LevyMeasureView l(m);
    double worst = 0;
    for (double y = 0.55; y <= 16; y *= 1.1)
        for (double s : {1.0, -1.0}) {
            Vec v{s * y, 0, 0};
            worst = std::max(worst, std::abs(l.riesz_ball_integral(v, 0.5) / l.nu_ball_mass(v, 0.5) - 1));
        }
    auto scan = rk_scan(l);
    for (double v : scan.sup_by_radius) worst = std::max(worst, std::abs(v - 1));
    return {worst <= 1e-6, "max |R(y)-1| " + f("%.2e", worst)};
}

// 4: ν₃ ratios at the shrinking-ball centres
Result c4() {
    auto m = make_nu3();
    LevyMeasureView l(m);
    auto w = shrinking_ball_witnesses(l);
    auto iso = make_isotropic(3, 0.5, 1);
    LevyMeasureView li(iso);
    double base = li.riesz_ball_integral({1, 0, 0}, 0.5) / li.nu_ball_mass({1, 0, 0}, 0.5);
    bool inc = w.size() >= 5;
    std::string seq;
    for (std::size_t i = 0; i < std::min<std::size_t>(5, w.size()); ++i) {
        if (i && !(w[i].ratio > w[i - 1].ratio)) inc = false;
        seq += (i ? ", " : "") + f("%.4g", w[i].ratio);
    }
    double last = w.size() >= 5 ? w[4].ratio : 0;
    return {inc && last >= 10 * base,
            "ratios " + seq + "; isotropic baseline " + f("%.4g", base) + ", last/baseline " + f("%.1f", last / base)};
}

// 5: Harnack plateau for the Cauchy process
Result c5() {
    auto t0 = std::chrono::steady_clock::now();
    auto m = make_isotropic(2, 1, 1);
    HarnackConfig cfg;
    cfg.sim.paths = 200000;
    auto r = harnack_test(m, {0, 0, 0}, {0.5, 0, 0}, cfg);
    // oracle: sup_y P(0,y)/P(x2,y) = (1-|x2|²)^{-α/2} sup |y-x2|^d/|y|^d
    double oracle = std::pow(0.75, -0.5) * 1.5 * 1.5;
    bool ok = !r.levels.empty();
    std::string s;
    for (auto& l : r.levels) {
        ok = ok && l.sup_ratio >= 2.0 && l.sup_ratio <= 3.2;
        s += (s.empty() ? "" : ", ") + f("%.3f", l.sup_ratio);
    }
    double t = seconds_since(t0);
    return {ok && t <= 600, "sup ratios " + s + " (oracle " + f("%.3f", oracle) + "), verdict " + r.verdict + ", " +
                                f("%.0f s", t)};
}

// 6: Harnack growth for atoms on the axes, α = 1
Result c6() {
    auto m = make_atomic_axes(2, 1);
    // same points and estimator as the catalog
    HarnackConfig cfg;
    cfg.sim.paths = 200000;
    cfg.radii = {1, 1.5, kInf};
    cfg.sectors = {128, 256, 512};
    cfg.estimator = HarnackEstimator::Conditional;
    auto r = harnack_test(m, {0, -0.45, 0}, {0.45, 0, 0}, cfg);
    bool mono = r.levels.size() == 3;
    std::string s;
    for (std::size_t i = 0; i < r.levels.size(); ++i) {
        if (i && !(r.levels[i].sup_ratio > r.levels[i - 1].sup_ratio)) mono = false;
        s += (i ? ", " : "") + f("%.2f", r.levels[i].sup_ratio);
    }
    bool above = !r.levels.empty() && r.levels.back().sup_ratio > 10;
    // counts at 0 vs (0.5, 0), reported only
    HarnackConfig c2 = cfg;
    c2.estimator = HarnackEstimator::Counts;
    auto r2 = harnack_test(m, {0, 0, 0}, {0.5, 0, 0}, c2);
    std::string s2;
    for (std::size_t i = 0; i < r2.levels.size(); ++i) s2 += (i ? ", " : "") + f("%.2f", r2.levels[i].sup_ratio);
    return {mono && above, "sup ratios " + s + " at 128/256/512 sectors; counts from 0 vs (0.5,0): " + s2};
}

// 7: E^0 τ for the Cauchy process and (h, ε) halving
Result c7() {
    auto m = make_isotropic(2, 1, 1);
    IsotropicOracle iso(m);
    double ex = iso.exit_time({0, 0, 0});
    SimulatorConfig a;
    a.paths = 100000;
    auto ba = simulate_exit(m, {0, 0, 0}, a);
    SimulatorConfig b = a;
    b.h /= 2;
    b.eps /= 2;
    b.seed = 2;
    auto bb = simulate_exit(m, {0, 0, 0}, b);
    double rel = std::abs(ba.mean_tau() / ex - 1);
    double diff = std::abs(ba.mean_tau() - bb.mean_tau());
    double ci = 1.96 * std::hypot(ba.mean_tau_se(), bb.mean_tau_se());
    return {rel <= 0.03 && diff <= ci, "ŝ(0) " + f("%.5f", ba.mean_tau()) + " vs " + f("%.5f", ex) + " (rel " +
                                           f("%.2e", rel) + "); halved (h, ε): " + f("%.5f", bb.mean_tau()) +
                                           ", |Δ| " + f("%.4f", diff) + " vs CI " + f("%.4f", ci)};
}

// 8: V continuous at α = 0.75, divergent along the atoms at α = 0.4
Result c8() {
    auto m1 = make_atomic_axes(2, 0.75);
    auto pc = potential_profile(m1, profile_directions(m1, 256));
    auto pf = potential_profile(m1, profile_directions(m1, 512));
    auto r1 = check_v_continuity(pc, pf, 1.0);
    bool cont = r1.divergent == 0 && r1.modulus_fine < r1.modulus_coarse;

    auto m2 = make_atomic_axes(2, 0.4);
    auto qc = potential_profile(m2, profile_directions(m2, 256));
    auto qf = potential_profile(m2, profile_directions(m2, 512));
    auto r2 = check_v_continuity(qc, qf, 1.0);
    // markers exactly on the atom directions (angles 0, π/2, π, 3π/2 on the 512 grid)
    bool on_atoms = true;
    for (std::size_t i : {0, 128, 256, 384}) on_atoms = on_atoms && qf.divergent[i];
    bool growth2 = r2.max_growth >= 2;
    return {cont && on_atoms && growth2,
            "α=0.75: " + r1.verdict + ", modulus " + f("%.3g", r1.modulus_coarse) + " -> " + f("%.3g", r1.modulus_fine) +
                "; α=0.4: " + std::to_string(r2.divergent) + " divergent directions, on atoms " +
                (on_atoms ? "yes" : "no") + ", growth per doubling " + f("%.3f", r2.max_growth) + " (need >= 2)"};
}

// 9: sup ν(B(x,r/12)) / (r^{-2α} 𝕍(B(x,r/2))) non-increasing within 20%
Result c9() {
    bool ok = true;
    std::string s;
    for (auto m : {make_isotropic(2, 1, 1), make_atomic_axes(2, 0.75)}) {
        auto p = potential_profile(m, profile_directions(m, 256));
        LevyMeasureView l(m);
        auto t = check_nu_v_bound(p, l);
        s += (s.empty() ? "" : "; ") + m.name + ":";
        for (std::size_t k = 0; k < t.sup_ratio.size(); ++k) {
            if (k && t.sup_ratio[k] > 1.2 * t.sup_ratio[k - 1]) ok = false;
            s += " " + f("%.4g", t.sup_ratio[k]);
        }
    }
    return {ok, s};
}

// 10: Green function against s(v)|v|^{α-d} and against the closed form
Result c10() {
    auto m = make_isotropic(2, 1, 1);
    SimulatorConfig cfg;
    cfg.paths = 200000;
    auto g = green_ratio_test(m, {0, 0, 0}, cfg);
    bool band = g.band <= 5;
    bool classical = g.classical_available && g.classical_max_rel <= 0.10;
    return {band && classical, "band " + f("%.2f", g.band) + " (need <= 5), median-normalized band " +
                                   f("%.2f", g.normalized_band) + ", classical max rel " +
                                   f("%.3f", g.classical_max_rel) + " over " + std::to_string(g.classical_cells) +
                                   " cells"};
}

// 11: direct exits, Ikeda–Watanabe and closed form on 8 cells
Result c11() {
    auto m = make_isotropic(2, 1, 1);
    ExteriorPartition p;
    p.radii = {1, 1.2, 1.5, 2, kInf};
    p.sectors = 2;
    SimulatorConfig cfg;
    cfg.paths = 100000;
    auto r = oracle_closure(m, {0.4, 0, 0}, p, cfg);
    return {r.agree, "worst pairwise z " + f("%.2f", r.worst_z) + " over " + std::to_string(p.size()) + " cells"};
}

// 12: empirical characteristic function of the increments
Result c12() {
    bool ok = true;
    double worst = 0;
    for (auto m : {make_isotropic(2, 1, 1), make_atomic_axes(2, 1)}) {
        ExponentEvaluator ev(m);
        SimulatorConfig cfg;
        std::vector<Vec> us;
        Rng g(11);
        std::uniform_real_distribution<double> U(0, 1);
        for (int i = 0; i < 20; ++i) {
            double r = 0.2 + 2.3 * U(g), th = 2 * kPi * U(g);
            us.push_back({r * std::cos(th), r * std::sin(th), 0});
        }
        for (double t : {0.5, 1.0}) {
            const std::size_t n = 100000;
            std::vector<double> s(us.size(), 0), s2(us.size(), 0);
            Rng rng = path_rng(42, static_cast<std::uint64_t>(t * 10));
            for (std::size_t k = 0; k < n; ++k) {
                Vec x = sample_increment(m, t, cfg, rng);
                for (std::size_t j = 0; j < us.size(); ++j) {
                    double c = std::cos(dot(us[j], x));
                    s[j] += c;
                    s2[j] += c * c;
                }
            }
            for (std::size_t j = 0; j < us.size(); ++j) {
                double mean = s[j] / n, sd = std::sqrt(std::max(0.0, s2[j] / n - mean * mean) / n);
                double z = std::abs(mean - std::exp(-t * ev.phi(us[j]))) / sd;
                worst = std::max(worst, z);
                if (z > 3) ok = false;
            }
        }
    }
    return {ok, "largest |z| over 80 comparisons " + f("%.2f", worst)};
}

// 13: catalog, quick budget
Result c13() {
    auto t0 = std::chrono::steady_clock::now();
    auto rep = run_catalog(Budget::Quick, 1);
    double t = seconds_since(t0);
    // the budget is 2 min on 8 cores; with fewer cores the work is serialised
    unsigned cores = std::max(1u, std::thread::hardware_concurrency());
    double limit = 120.0 * 8 / std::min(8u, cores);
    auto bad = rep.mismatches();
    std::string s = std::to_string(bad.size()) + " mismatches";
    for (auto& b : bad) s += "; " + b;
    s += "; " + f("%.0f s", t) + " on " + std::to_string(cores) + " cores (limit " + f("%.0f s", limit) + ")";
    return {bad.empty() && t <= limit, s};
}

}  // namespace

int main(int argc, char** argv) {
    std::map<int, std::function<Result()>> all{{1, c1}, {2, c2},  {3, c3},   {4, c4},   {5, c5},   {6, c6},  {7, c7},
                                               {8, c8}, {9, c9}, {10, c10}, {11, c11}, {12, c12}, {13, c13}};
    std::vector<int> which;
    for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
    if (which.empty())
        for (auto& [k, v] : all) which.push_back(k);
    int failed = 0;
    for (int k : which) {
        auto it = all.find(k);
        if (it == all.end()) {
            std::fprintf(stderr, "no criterion %d\n", k);
            return 2;
        }
        Result r;
        try {
            r = it->second();
        } catch (const std::exception& e) {
            r = {false, std::string("threw: ") + e.what()};
        }
        std::printf("criterion %d: %s: %s\n", k, r.pass ? "PASS" : "FAIL", r.detail.c_str());
        std::fflush(stdout);
        failed += !r.pass;
    }
    return failed ? 1 : 0;
}
