#include "anisostable/catalog.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>

#include "anisostable/kato.hpp"
#include "anisostable/parallel.hpp"
#include "anisostable/potential.hpp"

namespace anisostable {

namespace {

const char* kHarnackIffRk = "Harnack holds iff RK holds";

Expectation ex(std::string col, std::string val, std::string basis) {
    return {std::move(col), std::move(val), std::move(basis)};
}

std::string fmt(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3g", v);
    return b;
}

}  // namespace

void ExampleModel::validate() const {
    model.validate();
    for (auto& e : expected)
        if (e.basis.empty()) throw ModelError(model.name + ": expectation for " + e.column + " has no basis");
}

std::vector<ExampleModel> example_models() {
    std::vector<ExampleModel> out;

    ExampleModel nu1{make_isotropic(2, 1, 1), {}};
    nu1.model.name = "nu1";
    nu1.expected = {ex("strict", "strict", "uniform μ gives ν(B(x,r)) ≍ r^d at every point of the sphere"),
                    ex("rk_nu", "holds", "RK holds for the uniform spectral measure"),
                    ex("rk_spectral", "holds", "bounded spectral density passes the log-kernel criterion (d=2, α=1)"),
                    ex("harnack", "consistent", kHarnackIffRk),
                    ex("v_continuity", "continuous", "γ > d−2α gives continuous V")};
    out.push_back(nu1);

    ExampleModel nu2{make_nu2(2, 1, 0.3), {}};
    nu2.model.name = "nu2";
    nu2.expected = {ex("rk_nu", "holds", "RK holds for spectral caps of positive radius"),
                    ex("rk_spectral", "holds", "bounded density on caps passes the log-kernel criterion (d=2, α=1)"),
                    ex("harnack", "consistent", kHarnackIffRk),
                    ex("v_continuity", "continuous", "γ > d−2α gives continuous V")};
    out.push_back(nu2);

    ExampleModel nu3{make_nu3(0.5, 2, 6), {}};
    nu3.model.name = "nu3";
    nu3.expected = {ex("strict", "not strict", "shrinking caps: ν(B(x,r)) falls far below r^γ near the small caps"),
                    ex("rk_nu", "fails", "RK fails for caps shrinking faster than their separation"),
                    ex("rk_spectral", "fails", "spectral criterion fails on shrinking caps (d−α > 1)"),
                    ex("harnack", "violating", kHarnackIffRk)};
    out.push_back(nu3);

    ExampleModel a1{make_atomic_axes(2, 1), {}};
    a1.model.name = "atomic_a1";
    a1.expected = {ex("rk_nu", "fails", "an atom of μ breaks RK when α ≤ d−1"),
                   ex("rk_spectral", "fails", "an atom diverges the log-kernel criterion (d=2, α=1)"),
                   ex("harnack", "violating", kHarnackIffRk),
                   ex("v_continuity", "continuous", "γ = 1 > d−2α = 0 gives continuous V")};
    out.push_back(a1);

    ExampleModel a15{make_atomic_axes(2, 1.5), {}};
    a15.model.name = "atomic_a1.5";
    a15.expected = {ex("rk_nu", "holds", "RK always holds when d−1 < α"),
                    ex("rk_spectral", "holds", "RK always holds when d−1 < α"),
                    ex("harnack", "consistent", "Harnack always holds when d−1 < α"),
                    ex("v_continuity", "continuous", "γ = 1 > d−2α = −1 gives continuous V")};
    out.push_back(a15);

    ExampleModel a075{make_atomic_axes(2, 0.75), {}};
    a075.model.name = "atomic_a0.75";
    a075.expected = {ex("rk_spectral", "fails", "an atom fails the spectral criterion when d−α > 1"),
                     ex("harnack", "violating", kHarnackIffRk),
                     ex("v_continuity", "continuous", "γ = 1 > d−2α = 0.5 gives continuous V")};
    out.push_back(a075);

    for (auto& e : out) e.validate();
    return out;
}

Budget budget_from_string(const std::string& s) {
    if (s == "quick") return Budget::Quick;
    if (s == "full") return Budget::Full;
    throw ModelError("budget must be quick or full, got " + s);
}

const char* to_string(Budget b) { return b == Budget::Quick ? "quick" : "full"; }

CatalogSettings CatalogSettings::for_budget(Budget b) {
    CatalogSettings s;
    s.radii = {1, 1.5, kInf};
    s.sectors_2d = {16, 32, 64, 128, 256, 512};
    s.sectors_3d = {16, 32, 64};
    if (b == Budget::Quick) {
        s.paths_2d = 200000;
        s.paths_3d = 50000;
        s.kato_grid_3d = 400;
        s.v_dirs = 64;
        s.v_in_3d = false;
    } else {
        s.paths_2d = 400000;
        s.paths_3d = 100000;
        s.kato_grid_3d = 0;
        s.v_dirs = 128;
        s.v_in_3d = true;
    }
    return s;
}

bool CatalogRow::pass() const {
    for (auto& c : checks)
        if (!c.pass) return false;
    return true;
}

namespace {

CatalogRow run_entry(const ExampleModel& e, const CatalogSettings& s, std::uint64_t seed) {
    auto t0 = std::chrono::steady_clock::now();
    const StableModel& m = e.model;
    CatalogRow row;
    row.name = m.name;
    row.d = m.d;
    row.alpha = m.alpha;

    ClassifyOptions co;
    if (m.d == 3) co.grid_points = s.kato_grid_3d;
    auto cr = classify(m, co);
    row.gamma = cr.gamma.gamma;
    row.strict = cr.strict.strict ? "strict" : "not strict";
    row.rk_nu = cr.rk.verdict;
    row.rk_spectral = cr.spectral.criterion == "none" ? "n/a" : cr.spectral.verdict;
    row.detail["classify"] = cr.to_json();

    HarnackConfig h;
    h.sim.paths = m.d == 3 ? s.paths_3d : s.paths_2d;
    h.sim.seed = seed ^ m.checksum();
    h.radii = s.radii;
    h.sectors = m.d == 3 ? s.sectors_3d : s.sectors_2d;
    h.estimator = HarnackEstimator::Conditional;
    auto hr = harnack_test(m, e.x1, e.x2, h);
    row.harnack = hr.verdict;
    for (auto& l : hr.levels) row.harnack_sups.push_back(l.sup_ratio);
    row.detail["harnack"] = hr.to_json();

    if (m.d <= m.alpha) {
        row.v_continuity = "n/a";
    } else if (m.d == 3 && !s.v_in_3d) {
        row.v_continuity = "skipped";
    } else {
        auto pc = potential_profile(m, profile_directions(m, s.v_dirs));
        auto pf = potential_profile(m, profile_directions(m, 2 * s.v_dirs));
        auto t1 = check_v_continuity(pc, pf, row.gamma);
        row.v_continuity = t1.verdict;
        row.detail["v"] = {{"verdict", t1.verdict},
                           {"modulus_coarse", t1.modulus_coarse},
                           {"modulus_fine", t1.modulus_fine},
                           {"divergent", t1.divergent},
                           {"min_V", t1.min_V}};
    }

    auto observed = [&](const std::string& col) -> std::string {
        if (col == "strict") return row.strict;
        if (col == "rk_nu") return row.rk_nu;
        if (col == "rk_spectral") return row.rk_spectral;
        if (col == "harnack") return row.harnack;
        if (col == "v_continuity") return row.v_continuity;
        throw ModelError("unknown catalog column " + col);
    };
    for (auto& x : e.expected) {
        std::string o = observed(x.column);
        row.checks.push_back({x, o, o == x.value});
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

}  // namespace

CatalogReport run_catalog(Budget budget, std::uint64_t seed, const std::vector<std::string>& only) {
    auto t0 = std::chrono::steady_clock::now();
    CatalogReport rep;
    rep.budget = budget;
    rep.seed = seed;
    auto settings = CatalogSettings::for_budget(budget);
    std::vector<ExampleModel> entries;
    for (auto& e : example_models())
        if (only.empty() || std::find(only.begin(), only.end(), e.model.name) != only.end()) entries.push_back(e);
    rep.rows.resize(entries.size());
    // Each entry is parallel inside; with several workers the entries overlap as well.
    parallel_for(entries.size(), [&](std::size_t i) { rep.rows[i] = run_entry(entries[i], settings, seed); });
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

std::vector<std::string> CatalogReport::mismatches() const {
    std::vector<std::string> out;
    for (auto& r : rows)
        for (auto& c : r.checks)
            if (!c.pass)
                out.push_back(r.name + ": " + c.expected.column + " expected " + c.expected.value + ", got " +
                              c.observed);
    return out;
}

std::string CatalogReport::to_markdown() const {
    std::ostringstream o;
    o << "| model | d | α | γ̂ | strict | RK ν-form | RK spectral | Harnack | V | sup ratios | result |\n";
    o << "|---|---|---|---|---|---|---|---|---|---|---|\n";
    for (auto& r : rows) {
        auto cell = [&](const std::string& col, const std::string& v) {
            for (auto& c : r.checks)
                if (c.expected.column == col) return v + (c.pass ? " ✓" : " ✗ (want " + c.expected.value + ")");
            return v;
        };
        std::string sups;
        for (double v : r.harnack_sups) sups += (sups.empty() ? "" : ", ") + fmt(v);
        o << "| " << r.name << " | " << r.d << " | " << fmt(r.alpha) << " | " << fmt(r.gamma) << " | "
          << cell("strict", r.strict) << " | " << cell("rk_nu", r.rk_nu) << " | "
          << cell("rk_spectral", r.rk_spectral) << " | " << cell("harnack", r.harnack) << " | "
          << cell("v_continuity", r.v_continuity) << " | " << sups << " | " << (r.pass() ? "pass" : "FAIL")
          << " |\n";
    }
    o << "\nBasis of the expected verdicts:\n\n";
    for (auto& r : rows)
        for (auto& c : r.checks)
            o << "- " << r.name << ", " << c.expected.column << " = " << c.expected.value << ": " << c.expected.basis
              << "\n";
    o << "\nbudget " << to_string(budget) << ", seed " << seed << "\n";
    return o.str();
}

nlohmann::json CatalogReport::to_json() const {
    nlohmann::json rs = nlohmann::json::array();
    for (auto& r : rows) {
        nlohmann::json cs = nlohmann::json::array();
        for (auto& c : r.checks)
            cs.push_back({{"column", c.expected.column},
                          {"expected", c.expected.value},
                          {"basis", c.expected.basis},
                          {"observed", c.observed},
                          {"pass", c.pass}});
        rs.push_back({{"name", r.name},
                      {"d", r.d},
                      {"alpha", r.alpha},
                      {"gamma", r.gamma},
                      {"strict", r.strict},
                      {"rk_nu", r.rk_nu},
                      {"rk_spectral", r.rk_spectral},
                      {"harnack", r.harnack},
                      {"harnack_sups", r.harnack_sups},
                      {"v_continuity", r.v_continuity},
                      {"checks", cs},
                      {"pass", r.pass()},
                      {"detail", r.detail}});
    }
    return {{"budget", to_string(budget)}, {"seed", seed}, {"rows", rs}, {"mismatches", mismatches()}};
}

}  // namespace anisostable
