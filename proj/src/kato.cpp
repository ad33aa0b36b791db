#include "anisostable/kato.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "anisostable/angular.hpp"
#include "anisostable/exponent.hpp"
#include "anisostable/parallel.hpp"

namespace anisostable {

bool in_support(const SpectralMeasure& mu, const Vec& x, double slack) {
    if (mu.uniform_mass() > 0) return true;
    Vec u = normalized(x);
    for (auto& a : mu.atoms())
        if (angle_between(u, a.dir) <= slack) return true;
    for (auto& c : mu.caps())
        if (angle_between(u, c.center) <= c.radius + slack) return true;
    return false;
}

namespace {

double default_spacing(int d, int n) { return d == 2 ? 2 * kPi / n : std::sqrt(4 * kPi / n); }

// Points at angular distance t from f, k of them around it (d = 3) or the two
// of them (d = 2).
void ring(int d, const Vec& f, double t, int k, std::vector<Vec>& out) {
    if (d == 2) {
        double a = std::atan2(f[1], f[0]);
        out.push_back({std::cos(a + t), std::sin(a + t), 0});
        if (t != 0) out.push_back({std::cos(a - t), std::sin(a - t), 0});
        return;
    }
    if (t == 0) {
        out.push_back(f);
        return;
    }
    Vec e1, e2;
    tangent_frame(f, e1, e2);
    for (int j = 0; j < k; ++j) {
        double psi = 2 * kPi * j / k;
        out.push_back(std::cos(t) * f + std::sin(t) * (std::cos(psi) * e1 + std::sin(psi) * e2));
    }
}

// Base grid plus five-fold refinement within two angular radii of each feature.
std::vector<Vec> enriched_grid(const SpectralMeasure& mu, int d, int n) {
    if (d == 1) return {{1, 0, 0}, {-1, 0, 0}};
    std::vector<Vec> g = sphere_grid(d, n, false);
    double sp = default_spacing(d, n);
    for (auto& [f, a] : mu.features()) {
        double reach = 2 * std::max(a, sp);
        double step = sp / 5;
        for (double t = 0; t <= reach + 1e-12; t += step) {
            int k = d == 3 ? std::clamp(static_cast<int>(2 * kPi * std::sin(t) / step), 6, 24) : 0;
            ring(d, f, t, k, g);
        }
        // points inside small caps that the step above would jump over
        if (a > 0 && a < step)
            for (double t : {0.25 * a, 0.5 * a, 0.75 * a, a}) ring(d, f, t, 8, g);
    }
    return g;
}

// One representative of each antipodal pair; every quantity here is even.
std::vector<Vec> half_of(const std::vector<Vec>& g) {
    const Vec h = normalized(Vec{0.7071, 0.5, 0.3});
    std::vector<Vec> out;
    for (auto& v : g)
        if (dot(v, h) >= 0) out.push_back(v);
    return out;
}

std::vector<Vec> support_points(const SpectralMeasure& mu, int d, int n) {
    std::vector<Vec> out;
    for (auto& v : half_of(enriched_grid(mu, d, n)))
        if (in_support(mu, v, 1e-9)) out.push_back(v);
    for (auto& a : mu.atoms()) out.push_back(a.dir);
    for (auto& c : mu.caps()) out.push_back(c.center);
    return half_of(out);
}

int default_points(int d, int n) { return n > 0 ? n : d == 2 ? 512 : 1500; }

void ls_slope(const std::vector<double>& x, const std::vector<double>& y, double& slope, double& se) {
    std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    slope = sxy / sxx;
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double e = y[i] - my - slope * (x[i] - mx);
        rss += e * e;
    }
    se = n > 2 ? std::sqrt(rss / (n - 2) / sxx) : 0;
}

// Trend rule shared by the ν-form and spectral scans. `seq` runs from coarse
// to fine scales.
std::string trend_verdict(const std::vector<double>& seq, double hold_growth) {
    double g = 1;
    for (std::size_t i = 0; i < seq.size(); ++i)
        for (std::size_t j = i + 1; j < seq.size(); ++j)
            if (seq[i] > 0) g = std::max(g, seq[j] / seq[i]);
    int run = 0, best = 0;
    for (std::size_t i = 1; i < seq.size(); ++i) {
        run = seq[i] > seq[i - 1] ? run + 1 : 0;
        best = std::max(best, run);
    }
    if (g >= 4 && best >= 3) return "fails";
    if (g <= hold_growth) return "holds";
    return "inconclusive";
}

}  // namespace

GammaEstimate gamma_estimate(const LevyMeasureView& levy, int grid_points) {
    const auto& m = levy.model();
    auto pts = support_points(m.mu, m.d, default_points(m.d, grid_points));
    if (pts.empty()) throw ModelError("gamma_estimate: no support points on the scan grid");
    GammaEstimate g{};
    for (int k = 3; k <= 9; ++k) g.radii.push_back(std::ldexp(1.0, -k));
    const std::size_t nr = g.radii.size();
    std::vector<double> mass(pts.size() * nr);
    parallel_for(pts.size(), [&](std::size_t i) {
        for (std::size_t k = 0; k < nr; ++k) mass[i * nr + k] = levy.nu_ball_mass(pts[i], g.radii[k], 1e-9);
    });
    g.sup_mass.assign(nr, 0);
    g.argsup.assign(nr, {});
    g.min_pointwise_slope = kInf;
    std::vector<double> lx, ly;
    for (double r : g.radii) lx.push_back(std::log(r));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        std::vector<double> yy;
        for (std::size_t k = 0; k < nr; ++k) {
            double v = mass[i * nr + k];
            if (v > g.sup_mass[k]) {
                g.sup_mass[k] = v;
                g.argsup[k] = pts[i];
            }
            if (v > 0) yy.push_back(std::log(v));
        }
        if (yy.size() == nr) {
            double s, se;
            ls_slope(lx, yy, s, se);
            g.min_pointwise_slope = std::min(g.min_pointwise_slope, s);
        }
    }
    for (double v : g.sup_mass) ly.push_back(std::log(v));
    ls_slope(lx, ly, g.gamma, g.fit_error);
    return g;
}

StrictGamma strict_gamma_check(const LevyMeasureView& levy, double gamma, int grid_points, double max_constant) {
    const auto& m = levy.model();
    auto pts = support_points(m.mu, m.d, default_points(m.d, grid_points));
    StrictGamma s{gamma, kInf, 0, kInf, {}, {}, false};
    std::vector<double> radii;
    for (int k = 2; k <= 9; ++k) radii.push_back(std::ldexp(1.0, -k));
    std::vector<double> q(pts.size() * radii.size());
    parallel_for(pts.size(), [&](std::size_t i) {
        for (std::size_t k = 0; k < radii.size(); ++k)
            q[i * radii.size() + k] = levy.nu_ball_mass(pts[i], radii[k], 1e-9) / std::pow(radii[k], gamma);
    });
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t k = 0; k < radii.size(); ++k) {
            double v = q[i * radii.size() + k];
            if (v < s.lower) {
                s.lower = v;
                s.worst_low = pts[i];
            }
            if (v > s.upper) {
                s.upper = v;
                s.worst_high = pts[i];
            }
        }
    s.constant = s.lower > 0 ? s.upper / s.lower : kInf;
    s.strict = s.constant <= max_constant;
    return s;
}

std::vector<RkWitness> shrinking_ball_witnesses(const LevyMeasureView& levy) {
    std::vector<RkWitness> out;
    const auto& mu = levy.model().mu;
    if (!mu.shrinking()) return out;
    auto caps = mu.shrinking_caps();
    int n = mu.shrinking()->n0;
    for (auto& c : caps) {
        Vec y = std::ldexp(1.0, n - 1) * c.center;
        double den = levy.nu_ball_mass(y, 0.5);
        double num = levy.riesz_ball_integral(y, 0.5);
        out.push_back({y, den > 0 ? num / den : 0, "feature n=" + std::to_string(n)});
        ++n;
    }
    return out;
}

RkScan rk_scan(const LevyMeasureView& levy, std::vector<double> radii, int grid_points) {
    const auto& m = levy.model();
    auto dirs = half_of(enriched_grid(m.mu, m.d, default_points(m.d, grid_points == 0 && m.d == 3 ? 600 : grid_points)));
    RkScan r;
    r.radii = radii;
    r.infinite = false;
    std::vector<RkWitness> all(dirs.size() * radii.size());
    parallel_for(all.size(), [&](std::size_t q) {
        Vec y = radii[q % radii.size()] * dirs[q / radii.size()];
        double den = levy.nu_ball_mass(y, 0.5);
        double ratio = 0;
        if (den > 0) ratio = levy.riesz_ball_integral(y, 0.5) / den;
        all[q] = {y, ratio, "scan"};
    });
    r.sup_by_radius.assign(radii.size(), 0);
    for (std::size_t q = 0; q < all.size(); ++q) {
        auto k = q % radii.size();
        r.sup_by_radius[k] = std::max(r.sup_by_radius[k], all[q].ratio);
        if (!std::isfinite(all[q].ratio)) r.infinite = true;
    }
    r.feature_sequence = shrinking_ball_witnesses(levy);
    for (auto& w : r.feature_sequence) {
        all.push_back(w);
        if (!std::isfinite(w.ratio)) r.infinite = true;
    }
    std::sort(all.begin(), all.end(), [](const RkWitness& a, const RkWitness& b) { return a.ratio > b.ratio; });
    all.resize(std::min<std::size_t>(all.size(), 10));
    r.witnesses = all;
    r.sup = r.witnesses.empty() ? 0 : r.witnesses.front().ratio;

    bool feature_growth = false;
    auto& fs = r.feature_sequence;
    if (fs.size() >= 3) {
        feature_growth = true;
        for (std::size_t i = 1; i < fs.size(); ++i)
            if (!(fs[i].ratio > fs[i - 1].ratio)) feature_growth = false;
        feature_growth = feature_growth && fs.back().ratio >= 2 * fs.front().ratio;
    }
    if (r.infinite || feature_growth)
        r.verdict = "fails";
    else
        r.verdict = trend_verdict(r.sup_by_radius, 1.2);
    return r;
}

SpectralCheck rk_spectral_check(const SpectralMeasure& mu, double alpha, int d, int grid_points) {
    SpectralCheck s;
    s.infinite = false;
    if (d - 1 < alpha) {
        s.criterion = "automatic";
        s.verdict = "holds";
        s.note = d == 2 ? "d = 2 and alpha > 1: RK always satisfied" : "d - 1 < alpha: Harnack holds";
        return s;
    }
    double kappa = alpha - (d - 1);
    bool log_kernel = d == 2 && alpha == 1;
    if (!log_kernel && !(d - alpha > 1)) {
        s.criterion = "none";
        s.verdict = "inconclusive";
        s.note = "no spectral criterion for d - alpha = 1 with d > 2; use the nu-form scan";
        return s;
    }
    s.criterion = log_kernel ? "log-kernel" : "power-kernel";
    auto pts = support_points(mu, d, default_points(d, grid_points == 0 && d == 3 ? 600 : grid_points));
    for (int k = 1; k <= 10; ++k) s.radii.push_back(std::ldexp(1.0, -k));
    const std::size_t nr = s.radii.size();
    std::vector<double> ratio(pts.size() * nr, 0);
    parallel_for(pts.size(), [&](std::size_t i) {
        AngularProfile prof(mu, pts[i]);
        for (std::size_t k = 0; k < nr; ++k) {
            double r = s.radii[k];
            double phimax = 2 * std::asin(std::min(1.0, r / 2));
            double den = prof.integrate([](double) { return 1.0; }, 0.0, phimax, 1e-9);
            if (!(den > 0)) continue;
            double num = prof.integrate(
                [&](double phi) {
                    if (phi == 0) return kInf;  // an atom at ξ
                    double chord = 2 * std::sin(phi / 2);
                    // the continuous part is integrable at 0; tanh-sinh probes absurdly close to it
                    if (chord < 1e-100) return 0.0;
                    return log_kernel ? std::log(2 * r / chord) : std::pow(chord / r, kappa);
                },
                0.0, phimax, 1e-8);
            ratio[i * nr + k] = num / den;
        }
    });
    s.sup_by_radius.assign(nr, 0);
    s.argsup.assign(nr, {});
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t k = 0; k < nr; ++k) {
            double v = ratio[i * nr + k];
            if (!std::isfinite(v)) s.infinite = true;
            if (v > s.sup_by_radius[k]) {
                s.sup_by_radius[k] = v;
                s.argsup[k] = pts[i];
            }
        }
    s.verdict = s.infinite ? "fails" : trend_verdict(s.sup_by_radius, 2.0);
    return s;
}

nlohmann::json ConditionReport::to_json() const {
    using nlohmann::json;
    auto vec = [](const Vec& v) { return json::array({v[0], v[1], v[2]}); };
    auto num = [](double v) -> json {
        if (std::isfinite(v)) return v;
        return "inf";
    };
    json j;
    j["model"] = model;
    j["gamma"] = gamma.gamma;
    j["gamma_err"] = gamma.fit_error;
    json gs = json::array();
    for (std::size_t k = 0; k < gamma.radii.size(); ++k)
        gs.push_back({{"r", gamma.radii[k]}, {"sup_mass", gamma.sup_mass[k]}, {"at", vec(gamma.argsup[k])}});
    j["gamma_table"] = gs;
    j["strict"] = {{"verdict", strict.strict},
                   {"gamma", strict.gamma},
                   {"lower", num(strict.lower)},
                   {"upper", num(strict.upper)},
                   {"constant", num(strict.constant)},
                   {"worst_low", vec(strict.worst_low)},
                   {"worst_high", vec(strict.worst_high)}};
    json w = json::array();
    for (auto& x : rk.witnesses) w.push_back({{"y", vec(x.y)}, {"ratio", num(x.ratio)}, {"tag", x.tag}});
    json fsq = json::array();
    for (auto& x : rk.feature_sequence) fsq.push_back({{"y", vec(x.y)}, {"ratio", num(x.ratio)}, {"tag", x.tag}});
    json sr = json::array();
    for (std::size_t k = 0; k < rk.radii.size(); ++k) sr.push_back({{"radius", rk.radii[k]}, {"sup", num(rk.sup_by_radius[k])}});
    j["rk"] = {{"sup", num(rk.sup)},
               {"infinite", rk.infinite},
               {"by_radius", sr},
               {"witnesses", w},
               {"feature_sequence", fsq},
               {"verdict", rk.verdict}};
    json sp = json::array();
    for (std::size_t k = 0; k < spectral.radii.size(); ++k)
        sp.push_back({{"r", spectral.radii[k]}, {"sup", num(spectral.sup_by_radius[k])}, {"at", vec(spectral.argsup[k])}});
    j["spectral"] = {{"criterion", spectral.criterion},
                     {"verdict", spectral.verdict},
                     {"infinite", spectral.infinite},
                     {"table", sp},
                     {"note", spectral.note}};
    j["verdicts"] = {{"rk", rk_verdict},
                     {"strict", strict.strict},
                     {"cross_check_agree", cross_check_agree}};
    return j;
}

ConditionReport classify(const StableModel& m, ClassifyOptions opt) {
    m.validate();
    LevyMeasureView levy(m);
    ConditionReport c;
    c.model = m.name;
    c.gamma = gamma_estimate(levy, opt.grid_points);
    c.strict = strict_gamma_check(levy, c.gamma.gamma, opt.grid_points);
    c.rk = rk_scan(levy, opt.radii, opt.grid_points);
    c.spectral = rk_spectral_check(m.mu, m.alpha, m.d, opt.grid_points);
    bool applicable = c.spectral.criterion != "none";
    c.cross_check_agree = !applicable || c.spectral.verdict == c.rk.verdict;
    if (c.rk.verdict == "fails" || (applicable && c.spectral.verdict == "fails"))
        c.rk_verdict = "fails";
    else if (c.rk.verdict == "holds" && (!applicable || c.spectral.verdict == "holds"))
        c.rk_verdict = "holds";
    else if (applicable && c.spectral.verdict == "holds" && c.rk.verdict == "inconclusive")
        c.rk_verdict = "holds";
    else
        c.rk_verdict = "inconclusive";
    return c;
}

}  // namespace anisostable
