#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "anisostable/catalog.hpp"
#include "anisostable/density.hpp"
#include "anisostable/io.hpp"
#include "anisostable/kato.hpp"
#include "anisostable/parallel.hpp"
#include "anisostable/potential.hpp"

using namespace anisostable;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
    std::string model_path;
    std::uint64_t seed = 1;
    std::string out = "out";
    std::string budget = "quick";
    double tol = -1;  // < 0: per-subcommand default
    unsigned threads = 0;
    bool check = false;
};

// Thrown when --check finds the output outside its tolerance.
struct CheckFailed : NumericalError {
    using NumericalError::NumericalError;
};

struct Run {
    Common c;
    Budget budget = Budget::Quick;
    StableModel model;
    bool has_model = false;
    RunManifest manifest;
    json summary;  // printed to stdout and written as <sub>.json

    std::string path(const std::string& name) const { return (fs::path(c.out) / name).string(); }
    void output(const std::string& name) { manifest.add_output(path(name)); }
    double tol(double def) const { return c.tol < 0 ? def : c.tol; }
    bool quick() const { return budget == Budget::Quick; }
};

Vec parse_vec(const std::vector<double>& v, int d) {
    if (static_cast<int>(v.size()) != d) throw ModelError("point needs " + std::to_string(d) + " coordinates");
    Vec x{0, 0, 0};
    for (int i = 0; i < d; ++i) x[i] = v[i];
    return x;
}

json vjson(const Vec& v) { return {v[0], v[1], v[2]}; }

void cmd_exponent(Run& r, int n) {
    ExponentEvaluator ev(r.model);
    auto dirs = sphere_grid(r.model.d, n > 0 ? n : (r.model.d == 3 ? 400 : 256));
    std::vector<std::vector<double>> rows;
    double worst = 0;
    for (auto& u : dirs) {
        double a = ev.phi(u), b = ev.phi_fast(u);
        worst = std::max(worst, std::abs(a - b) / a);
        rows.push_back({u[0], u[1], u[2], a, b});
    }
    write_csv(r.path("exponent.csv"), {"u1", "u2", "u3", "phi", "phi_fast"}, rows);
    r.output("exponent.csv");
    auto range = ev.sphere_range();
    r.summary = {{"phi_min", range.min},       {"phi_max", range.max},     {"argmin", vjson(range.argmin)},
                 {"argmax", vjson(range.argmax)}, {"fast_max_rel_diff", worst}};
    if (r.c.check && worst > r.tol(1e-3))
        throw CheckFailed("fast exponent differs from the adaptive one by " + std::to_string(worst));
}

void cmd_density(Run& r, double extent, double spacing) {
    if (extent <= 0) extent = r.model.d == 3 ? 4 : (r.quick() ? 8 : 16);
    if (spacing <= 0) spacing = r.model.d == 3 ? 0.25 : (r.quick() ? 1.0 / 16 : 1.0 / 32);
    auto g = cached_density_grid(r.model, extent, spacing);
    write_density_csv(g, r.path("density.csv"));
    r.output("density.csv");
    double mass = g.riemann_mass + g.tail_mass_bound;
    r.summary = {{"points", g.values.size()},
                 {"h", g.h},
                 {"extent", g.extent},
                 {"inversion_error", g.inversion_error},
                 {"riemann_mass", g.riemann_mass},
                 {"tail_mass_bound", g.tail_mass_bound}};
    // the box mass plus the tail bound must bracket 1
    if (r.c.check) {
        double t = r.tol(1e-2);
        bool ok = g.riemann_mass <= 1 + t && mass >= 1 - t;
        r.summary["normalization_ok"] = ok;
        if (!ok) throw CheckFailed("density mass " + std::to_string(g.riemann_mass) + " outside 1 ± tol");
    }
}

void cmd_potential(Run& r, int n) {
    if (n <= 0) n = r.model.d == 3 ? 200 : (r.quick() ? 64 : 256);
    auto prof = potential_profile(r.model, profile_directions(r.model, n));
    write_profile_csv(prof, r.path("potential.csv"));
    r.output("potential.csv");
    double vmin = kInf, vmax = 0;
    for (double v : prof.V) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    r.summary = {{"directions", prof.dirs.size()},
                 {"V_min", vmin},
                 {"V_max", vmax},
                 {"divergent", prof.divergent_count()},
                 {"vmass_unit_ball", prof.divergent_count() ? kInf : vmass_ball({0, 0, 0}, 1, prof)}};
    if (r.c.check && prof.divergent_count())
        throw CheckFailed(std::to_string(prof.divergent_count()) + " directions with infinite V");
}

void cmd_classify(Run& r) {
    ClassifyOptions o;
    if (r.model.d == 3 && r.quick()) o.grid_points = 400;
    auto rep = classify(r.model, o);
    r.summary = rep.to_json();
}

void cmd_simulate(Run& r, const std::vector<double>& x0, std::size_t paths, double eps, double h) {
    SimulatorConfig cfg;
    cfg.seed = r.c.seed;
    cfg.paths = paths ? paths : (r.quick() ? 10000 : 100000);
    if (eps > 0) cfg.eps = eps;
    if (h > 0) cfg.h = h;
    ExitOptions opt;
    opt.occupation = true;
    auto b = simulate_exit(r.model, x0.empty() ? Vec{0, 0, 0} : parse_vec(x0, r.model.d), cfg, opt);
    write_exit_csv(b, r.path("exits.csv"));
    r.output("exits.csv");
    write_occupation_csv(b, r.path("occupation.csv"));
    r.output("occupation.csv");
    r.summary = {{"config", cfg.to_json()},
                 {"mean_tau", b.mean_tau()},
                 {"mean_tau_se", b.mean_tau_se()},
                 {"censored_fraction", b.censored_fraction()}};
}

void cmd_harnack(Run& r, const std::vector<double>& x1, const std::vector<double>& x2, std::vector<int> sectors,
                 std::size_t paths) {
    HarnackConfig cfg;
    cfg.sim.seed = r.c.seed;
    cfg.sim.paths = paths ? paths : (r.quick() ? 20000 : 200000);
    if (!sectors.empty()) cfg.sectors = sectors;
    Vec a = x1.empty() ? Vec{0, 0, 0} : parse_vec(x1, r.model.d);
    Vec b = x2.empty() ? Vec{0.5, 0, 0} : parse_vec(x2, r.model.d);
    auto rep = harnack_test(r.model, a, b, cfg);
    std::vector<std::vector<double>> rows;
    for (auto& l : rep.levels)
        rows.push_back({double(l.sectors), double(l.bands), double(l.cells_used), l.sup_ratio, l.ci.lo, l.ci.hi});
    write_csv(r.path("harnack_levels.csv"), {"sectors", "bands", "cells_used", "sup_ratio", "ci_lo", "ci_hi"}, rows);
    r.output("harnack_levels.csv");
    r.summary = rep.to_json();
}

void cmd_green(Run& r, const std::vector<double>& x, std::size_t paths) {
    SimulatorConfig cfg;
    cfg.seed = r.c.seed;
    cfg.paths = paths ? paths : (r.quick() ? 20000 : 200000);
    GreenTestOptions opt;
    if (r.quick()) opt.profile_paths = 2000;
    auto g = green_ratio_test(r.model, x.empty() ? Vec{0, 0, 0} : parse_vec(x, r.model.d), cfg, opt);
    std::vector<std::vector<double>> rows;
    const auto& L = g.field.lattice;
    for (std::size_t i = 0; i < L.size(); ++i) {
        Vec c = L.center(i);
        rows.push_back({c[0], c[1], c[2], g.field.G[i], g.field.se[i], g.ratio[i], double(g.confident[i])});
    }
    write_csv(r.path("green_ratio.csv"), {"v1", "v2", "v3", "G", "se", "ratio", "confident"}, rows);
    r.output("green_ratio.csv");
    r.summary = g.to_json();
    if (r.c.check && g.classical_available && g.classical_max_rel > r.tol(0.1))
        throw CheckFailed("Green function off the closed form by " + std::to_string(g.classical_max_rel));
}

void cmd_poisson(Run& r, const std::vector<double>& x, std::size_t paths, int sectors) {
    SimulatorConfig cfg;
    cfg.seed = r.c.seed;
    cfg.paths = paths ? paths : (r.quick() ? 20000 : 100000);
    ExteriorPartition p;
    p.d = r.model.d;
    p.radii = {1, 1.2, 1.5, 2, kInf};
    p.sectors = r.model.d == 1 ? 2 : sectors;
    p.bands = r.model.d == 3 ? std::max(1, sectors / 2) : 1;
    Vec x0 = x.empty() ? Vec{0, 0, 0} : parse_vec(x, r.model.d);
    bool iso = r.model.mu.atoms().empty() && r.model.mu.caps().empty() && !r.model.mu.shrinking();
    std::vector<std::vector<double>> rows;
    if (iso && r.model.d > r.model.alpha) {
        auto c = oracle_closure(r.model, x0, p, cfg);
        for (std::size_t i = 0; i < p.size(); ++i)
            rows.push_back({double(i), c.direct[i], c.direct_se[i], c.iw[i], c.iw_se[i], c.exact[i]});
        r.summary = c.to_json();
        if (r.c.check && !c.agree) throw CheckFailed("harmonic measure routes disagree, worst z " + std::to_string(c.worst_z));
    } else {
        ExitOptions opt;
        opt.occupation = true;
        auto b = simulate_exit(r.model, x0, cfg, opt);
        auto hm = harmonic_measure(b, p);
        auto g = green_estimate(b);
        auto iw = iw_harmonic_masses(r.model, g, p);
        json cells = json::array();
        for (std::size_t i = 0; i < p.size(); ++i) {
            double se = std::sqrt(hm.freq[i] * (1 - hm.freq[i]) / std::max<std::size_t>(1, hm.paths));
            rows.push_back({double(i), hm.freq[i], se, iw[i], 0, std::nan("")});
            cells.push_back({{"direct", hm.freq[i]}, {"iw", iw[i]}});
        }
        r.summary = {{"x", vjson(x0)}, {"cells", cells}};
    }
    write_csv(r.path("poisson_cells.csv"), {"cell", "direct", "direct_se", "iw", "iw_se", "exact"}, rows);
    r.output("poisson_cells.csv");
}

int cmd_catalog(Run& r, const std::vector<std::string>& only) {
    auto rep = run_catalog(r.budget, r.c.seed, only);
    {
        std::ofstream md(r.path("catalog.md"));
        md << rep.to_markdown();
    }
    r.output("catalog.md");
    r.summary = rep.to_json();
    std::cout << rep.to_markdown();
    auto bad = rep.mismatches();
    for (auto& b : bad) std::cerr << "mismatch: " << b << "\n";
    return bad.empty() ? 0 : 1;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Potential theory of anisotropic stable processes: exponents, densities, potentials, "
                 "Kato classification and exit simulations."};
    app.require_subcommand(0, 1);
    std::string replay;
    app.add_option("--replay", replay, "Rerun the invocation recorded in a manifest and compare output checksums");

    Common c;
    auto common = [&](CLI::App* s, bool model_required) {
        auto o = s->add_option("--model", c.model_path, "Model JSON file");
        if (model_required) o->required()->check(CLI::ExistingFile);
        s->add_option("--seed", c.seed, "Random seed")->capture_default_str();
        s->add_option("--out", c.out, "Output directory")->capture_default_str();
        s->add_option("--budget", c.budget, "quick or full")->check(CLI::IsMember({"quick", "full"}))->capture_default_str();
        s->add_option("--tol", c.tol, "Tolerance for --check (default depends on the subcommand)");
        s->add_option("--threads", c.threads, "Worker threads, 0 = all cores")->capture_default_str();
        s->add_flag("--check", c.check, "Verify the output against its oracle; exit 3 when it fails");
    };

    int n = 0, sectors_p = 8;
    double extent = 0, spacing = 0, eps = 0, h = 0;
    std::size_t paths = 0;
    std::vector<double> x0, x1, x2;
    std::vector<int> sectors;
    std::vector<std::string> only;

    auto* s_exp = app.add_subcommand("exponent", "Φ on a sphere grid");
    common(s_exp, true);
    s_exp->add_option("--n", n, "Grid directions");
    auto* s_den = app.add_subcommand("density", "p_1 on a lattice by Fourier inversion");
    common(s_den, true);
    s_den->add_option("--extent", extent, "Half-width of the lattice box");
    s_den->add_option("--spacing", spacing, "Lattice spacing");
    auto* s_pot = app.add_subcommand("potential", "Potential kernel V on the unit sphere");
    common(s_pot, true);
    s_pot->add_option("--n", n, "Directions");
    auto* s_cls = app.add_subcommand("classify", "γ-measure, strictness and relative Kato verdicts");
    common(s_cls, true);
    auto* s_sim = app.add_subcommand("simulate", "Exit times and exit points from the unit ball");
    common(s_sim, true);
    s_sim->add_option("--x0", x0, "Starting point");
    s_sim->add_option("--paths", paths, "Number of paths");
    s_sim->add_option("--eps", eps, "Small-jump cutoff");
    s_sim->add_option("--step", h, "Euler step");
    auto* s_har = app.add_subcommand("harnack", "Empirical Harnack ratios over refined exterior partitions");
    common(s_har, true);
    s_har->add_option("--x1", x1, "First point (default origin)");
    s_har->add_option("--x2", x2, "Second point (default (0.5, 0))");
    s_har->add_option("--sectors", sectors, "Sectors per refinement level");
    s_har->add_option("--paths", paths, "Paths per point");
    auto* s_gre = app.add_subcommand("green", "Simulated Green function against s(v)|v-x|^{α-d}");
    common(s_gre, true);
    s_gre->add_option("--x", x0, "Pole (default origin)");
    s_gre->add_option("--paths", paths, "Number of paths");
    auto* s_poi = app.add_subcommand("poisson", "Harmonic measure of exterior cells: direct, Ikeda-Watanabe, closed form");
    common(s_poi, true);
    s_poi->add_option("--x", x0, "Starting point (default origin)");
    s_poi->add_option("--paths", paths, "Number of paths");
    s_poi->add_option("--sectors", sectors_p, "Angular sectors")->capture_default_str();
    auto* s_cat = app.add_subcommand("catalog", "Verdict table for the bundled example measures");
    common(s_cat, false);
    s_cat->add_option("--only", only, "Restrict to these entries");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (!replay.empty()) {
        auto m = RunManifest::from_json(read_json(replay));
        std::vector<std::string> args = m.config.at("argv").get<std::vector<std::string>>();
        std::vector<char*> av;
        for (auto& a : args) av.push_back(a.data());
        int code = run_cli(static_cast<int>(av.size()), av.data());
        auto bad = m.verify();
        for (auto& b : bad) std::cerr << "checksum differs: " << b << "\n";
        if (code != 0) return code;
        std::cout << (bad.empty() ? "replay reproduced all outputs\n" : "replay differs\n");
        return bad.empty() ? 0 : 3;
    }
    auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front();
    if (!sub) {
        std::cerr << app.help();
        return 2;
    }

    auto t0 = std::chrono::steady_clock::now();
    Run r;
    r.c = c;
    r.budget = budget_from_string(c.budget);
    set_threads(c.threads);
    fs::create_directories(c.out);
    if (!c.model_path.empty()) {
        r.model = load_model(c.model_path);
        r.has_model = true;
    }
    std::vector<std::string> args(argv, argv + argc);
    r.manifest.subcommand = sub->get_name();
    r.manifest.seed = c.seed;
    r.manifest.version = version_string();
    r.manifest.config = {{"argv", args},
                         {"budget", c.budget},
                         {"tol", c.tol},
                         {"check", c.check},
                         {"model", r.has_model ? r.model.to_json() : json()}};

    int code = 0;
    const std::string name = sub->get_name();
    if (name == "exponent") cmd_exponent(r, n);
    else if (name == "density") cmd_density(r, extent, spacing);
    else if (name == "potential") cmd_potential(r, n);
    else if (name == "classify") cmd_classify(r);
    else if (name == "simulate") cmd_simulate(r, x0, paths, eps, h);
    else if (name == "harnack") cmd_harnack(r, x1, x2, sectors, paths);
    else if (name == "green") cmd_green(r, x0, paths);
    else if (name == "poisson") cmd_poisson(r, x0, paths, sectors_p);
    else if (name == "catalog") code = cmd_catalog(r, only);

    write_json(r.summary, r.path(name + ".json"));
    r.output(name + ".json");
    if (name != "catalog") std::cout << r.summary.dump(2) << "\n";
    r.manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_json(r.manifest.to_json(), r.path("manifest.json"));
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const ModelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const RegimeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}
