#include "anisostable/potential.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <fstream>
#include <sstream>

#include "anisostable/parallel.hpp"
#include "anisostable/quad.hpp"

namespace anisostable {

namespace {

using G32 = boost::math::quadrature::gauss<double, 32>;
using G16 = boost::math::quadrature::gauss<double, 16>;

void require_transient(int d, double alpha) {
    if (!(d > alpha)) {
        std::ostringstream os;
        os << "potential kernel undefined: V is identically infinite when d <= alpha (d = " << d << ", alpha = "
           << alpha << ")";
        throw RegimeError(os.str());
    }
}

// Divergent when the increments over successive doublings stop shrinking.
constexpr double kIncRatioDivergent = 0.9;
constexpr int kDivergentRun = 3;

}  // namespace

double PotentialProfile::min_finite() const {
    double m = kInf;
    for (double v : V)
        if (std::isfinite(v)) m = std::min(m, v);
    return m;
}

std::size_t PotentialProfile::divergent_count() const {
    return static_cast<std::size_t>(std::count(divergent.begin(), divergent.end(), 1));
}

double PotentialProfile::at(const Vec& theta) const {
    if (d == 1) return theta[0] >= 0 ? V[0] : V.back();
    if (d == 2 && uniform_circle) {
        double n = static_cast<double>(V.size());
        double t = std::atan2(theta[1], theta[0]);
        if (t < 0) t += 2 * kPi;
        double u = t / (2 * kPi) * n;
        std::size_t i = static_cast<std::size_t>(u) % V.size();
        std::size_t j = (i + 1) % V.size();
        double f = u - std::floor(u);
        if (f == 0) return V[i];
        if (!std::isfinite(V[i]) || !std::isfinite(V[j])) return kInf;
        return (1 - f) * V[i] + f * V[j];
    }
    // nearest few directions, inverse squared-distance weights
    constexpr int k = 4;
    std::pair<double, std::size_t> best[k];
    for (auto& b : best) b = {kInf, 0};
    Vec u = normalized(theta);
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        Vec dv = dirs[i] - u;
        double dd = dot(dv, dv);
        if (dd < best[k - 1].first) {
            best[k - 1] = {dd, i};
            for (int q = k - 1; q > 0 && best[q].first < best[q - 1].first; --q) std::swap(best[q], best[q - 1]);
        }
    }
    if (best[0].first < 1e-24) return V[best[0].second];
    double sw = 0, s = 0;
    for (auto& b : best) {
        if (!std::isfinite(V[b.second])) return kInf;
        double w = 1 / b.first;
        sw += w;
        s += w * V[b.second];
    }
    return s / sw;
}

std::vector<Vec> profile_directions(const StableModel& m, int n) {
    if (m.d == 1) return {{1, 0, 0}, {-1, 0, 0}};
    if (m.d == 2) return sphere_grid(2, n, false);
    auto g = sphere_grid(3, n, false);
    for (auto& f : m.mu.feature_directions(4)) {
        g.push_back(f);
        g.push_back(-f);
    }
    return g;
}

namespace {

struct RayResult {
    double V, tail, inc_ratio, growth;
    bool divergent;
};

RayResult integrate_ray(const RidgeEvaluator& r, const Vec& theta, double alpha, int d, double L, int doublings) {
    const double k = d - alpha;
    auto p = [&](double s) { return r.eval(s * theta); };
    // [0, L]: s = L u^{1/k} removes the s^{k-1} endpoint factor
    double head = std::pow(L, k) / k * G32::integrate([&](double u) { return p(L * std::pow(u, 1 / k)); }, 0.0, 1.0);
    std::vector<double> inc;
    double lo = L;
    for (int j = 0; j < doublings; ++j) {
        double a = std::log(lo), b = std::log(2 * lo);
        inc.push_back(G16::integrate(
            [&](double v) {
                double s = std::exp(v);
                return std::pow(s, k) * p(s);
            },
            a, b));
        lo *= 2;
    }
    RayResult out{0, 0, 0, 1, false};
    double total = head;
    std::vector<double> totals;
    for (double x : inc) {
        total += x;
        totals.push_back(total);
    }
    std::size_t m = inc.size();
    int run = 0;
    for (std::size_t j = 1; j < m; ++j) {
        double q = inc[j] / inc[j - 1];
        run = q >= kIncRatioDivergent ? run + 1 : 0;
    }
    double q = m >= 2 ? inc[m - 1] / inc[m - 2] : 0.5;
    out.inc_ratio = q;
    for (std::size_t j = m >= 3 ? m - 3 : 1; j < m; ++j) out.growth = std::max(out.growth, totals[j] / totals[j - 1]);
    if (run >= kDivergentRun) {
        out.divergent = true;
        out.V = kInf;
        out.tail = kInf;
        return out;
    }
    // geometric continuation of the shell increments
    double qc = std::clamp(q, 0.0, 0.95);
    out.tail = inc.back() * qc / (1 - qc);
    out.V = alpha * (total + out.tail);
    out.tail *= alpha;
    return out;
}

}  // namespace

PotentialProfile potential_profile(const StableModel& m, const std::vector<Vec>& dirs, PotentialOptions opt) {
    require_transient(m.d, m.alpha);
    RidgeEvaluator r(m, opt.angular_nodes);
    DensityGrid g;
    g.ridge = std::shared_ptr<RidgeEvaluator>(&r, [](RidgeEvaluator*) {});
    return potential_profile(m, g, dirs, opt);
}

PotentialProfile potential_profile(const StableModel& m, const DensityGrid& grid, const std::vector<Vec>& dirs,
                                   PotentialOptions opt) {
    require_transient(m.d, m.alpha);
    std::shared_ptr<RidgeEvaluator> r = grid.ridge;
    if (!r) r = std::make_shared<RidgeEvaluator>(m, opt.angular_nodes);
    ExponentEvaluator ev(m);
    auto range = ev.sphere_range();
    const double L = std::pow(range.max, -1 / m.alpha);  // smallest spatial scale of p_1

    PotentialProfile prof;
    prof.d = m.d;
    prof.alpha = m.alpha;
    prof.dirs.reserve(dirs.size());
    for (auto& v : dirs) prof.dirs.push_back(normalized(v));
    const std::size_t n = prof.dirs.size();
    prof.V.assign(n, 0);
    prof.tail.assign(n, 0);
    prof.inc_ratio.assign(n, 0);
    prof.growth.assign(n, 1);
    prof.divergent.assign(n, 0);
    prof.smax = L * std::ldexp(1.0, opt.doublings);

    // Equally spaced circle from angle 0 with even n: compute half, mirror the rest.
    bool circle = m.d == 2 && n % 2 == 0 && n >= 4;
    for (std::size_t i = 0; circle && i < n; ++i) {
        double t = 2 * kPi * static_cast<double>(i) / static_cast<double>(n);
        if (std::abs(prof.dirs[i][0] - std::cos(t)) > 1e-12 || std::abs(prof.dirs[i][1] - std::sin(t)) > 1e-12)
            circle = false;
    }
    prof.uniform_circle = circle;
    std::size_t todo = circle ? n / 2 : n;
    parallel_for(todo, [&](std::size_t i) {
        auto res = integrate_ray(*r, prof.dirs[i], m.alpha, m.d, L, opt.doublings);
        prof.V[i] = res.V;
        prof.tail[i] = res.tail;
        prof.inc_ratio[i] = res.inc_ratio;
        prof.growth[i] = res.growth;
        prof.divergent[i] = res.divergent;
    });
    if (circle) {
        for (std::size_t i = n / 2; i < n; ++i) {
            std::size_t j = i - n / 2;
            prof.V[i] = prof.V[j];
            prof.tail[i] = prof.tail[j];
            prof.inc_ratio[i] = prof.inc_ratio[j];
            prof.growth[i] = prof.growth[j];
            prof.divergent[i] = prof.divergent[j];
        }
    }
    return prof;
}

double vmass_ball(const Vec& x, double rho, const PotentialProfile& prof) {
    require_transient(prof.d, prof.alpha);
    if (!(rho > 0)) return 0;
    const double a = prof.alpha;
    const double X = norm(x);
    const bool origin_inside = X < rho;
    // radial factor (s_+^α - s_-^α)/α for a direction at angle φ from x
    auto radial = [&](double phi) {
        double c = std::cos(phi), s = std::sin(phi);
        double disc = rho * rho - X * X * s * s;
        if (disc <= 0) return 0.0;
        double sq = std::sqrt(disc);
        double hi = X * c + sq;
        if (hi <= 0) return 0.0;
        if (origin_inside) return std::pow(hi, a) / a;
        double lo = X * c - sq;
        if (lo <= 0) return std::pow(hi, a) / a;
        return (std::pow(hi, a) - std::pow(lo, a)) / a;
    };
    if (prof.d == 1) {
        double s = 0;
        for (double sgn : {1.0, -1.0}) {
            double y = sgn * x[0];
            double lo = std::max(0.0, y - rho), hi = y + rho;
            if (hi > 0) s += prof.at({sgn, 0, 0}) * (std::pow(hi, a) - std::pow(lo, a)) / a;
        }
        return s;
    }
    const double beta = origin_inside ? kPi : std::asin(std::min(1.0, rho / X));
    Vec xh = X > 0 ? (1.0 / X) * x : Vec{1, 0, 0};
    if (prof.d == 2) {
        double t0 = std::atan2(xh[1], xh[0]);
        auto f = [&](double t) {
            double v = prof.at({std::cos(t0 + t), std::sin(t0 + t), 0});
            return v * radial(std::abs(t));
        };
        // split at profile nodes so every piece is smooth
        std::vector<double> cuts{-beta, beta};
        if (prof.uniform_circle) {
            double step = 2 * kPi / static_cast<double>(prof.V.size());
            double first = std::ceil((t0 - beta) / step) * step;
            for (double c = first; c < t0 + beta; c += step) cuts.push_back(c - t0);
        }
        std::sort(cuts.begin(), cuts.end());
        double s = 0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            double a0 = cuts[i], b0 = cuts[i + 1];
            if (b0 - a0 < 1e-13) continue;
            // only the two outermost pieces carry the square-root edge of the chord
            bool edge = !origin_inside && (i == 0 || i + 2 == cuts.size());
            double piece = edge ? quad::ts(f, a0, b0, 1e-9) : G16::integrate(f, a0, b0);
            if (!std::isfinite(piece)) return kInf;
            s += piece;
        }
        return s;
    }
    Vec e1, e2;
    tangent_frame(xh, e1, e2);
    constexpr int naz = 32;
    auto f = [&](double phi) {
        double r = radial(phi);
        if (r == 0) return 0.0;
        double sp = std::sin(phi), cp = std::cos(phi), acc = 0;
        for (int k = 0; k < naz; ++k) {
            double psi = 2 * kPi * (k + 0.5) / naz;
            acc += prof.at(cp * xh + sp * (std::cos(psi) * e1 + std::sin(psi) * e2));
        }
        return sp * r * acc * 2 * kPi / naz;
    };
    double s = quad::ts(f, 0.0, beta, 1e-7);
    return std::isfinite(s) ? s : kInf;
}

namespace {

double modulus(const PotentialProfile& p) {
    double m = 0;
    const std::size_t n = p.V.size();
    if (p.d == 2 && p.uniform_circle) {
        for (std::size_t i = 0; i < n; ++i) {
            double a = p.V[i], b = p.V[(i + 1) % n];
            if (std::isfinite(a) && std::isfinite(b)) m = std::max(m, std::abs(a - b));
        }
        return m;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double best = kInf;
        std::size_t bj = i;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            Vec dv = p.dirs[i] - p.dirs[j];
            double dd = dot(dv, dv);
            if (dd > 1e-20 && dd < best) {
                best = dd;
                bj = j;
            }
        }
        if (bj != i && std::isfinite(p.V[i]) && std::isfinite(p.V[bj])) m = std::max(m, std::abs(p.V[i] - p.V[bj]));
    }
    return m;
}

}  // namespace

ContinuityReport check_v_continuity(const PotentialProfile& coarse, const PotentialProfile& fine, double gamma) {
    ContinuityReport r{};
    r.gamma = gamma;
    r.threshold = fine.d - 2 * fine.alpha;
    r.gamma_above = gamma > r.threshold;
    r.modulus_coarse = modulus(coarse);
    r.modulus_fine = modulus(fine);
    r.modulus_ratio = r.modulus_coarse > 0 ? r.modulus_fine / r.modulus_coarse : 0;
    r.divergent = fine.divergent_count() + coarse.divergent_count();
    r.max_growth = 1;
    for (std::size_t i = 0; i < fine.V.size(); ++i)
        if (fine.divergent[i]) r.max_growth = std::max(r.max_growth, fine.growth[i]);
    r.min_V = fine.min_finite();
    double mean = 0;
    std::size_t cnt = 0;
    for (double v : fine.V)
        if (std::isfinite(v)) {
            mean += v;
            ++cnt;
        }
    mean = cnt ? mean / cnt : 0;
    if (r.divergent > 0)
        r.verdict = "unbounded";
    else if (r.modulus_fine <= 1e-3 * mean || r.modulus_ratio <= 0.75)
        r.verdict = "continuous";
    else
        r.verdict = "inconclusive";
    return r;
}

NuVBoundReport check_nu_v_bound(const PotentialProfile& prof, const LevyMeasureView& levy, int scan_points) {
    const auto& m = levy.model();
    require_transient(m.d, m.alpha);
    std::vector<Vec> xs = sphere_grid(m.d, scan_points, false);
    for (auto& f : m.mu.feature_directions(4)) xs.push_back(f);
    NuVBoundReport r;
    r.radii = {0.5, 0.25, 0.125, 0.0625};
    for (double rad : r.radii) {
        std::vector<double> ratio(xs.size(), 0);
        parallel_for(xs.size(), [&](std::size_t i) {
            double num = levy.nu_ball_mass(xs[i], rad / 12);
            if (num == 0) return;
            double den = std::pow(rad, -2 * m.alpha) * vmass_ball(xs[i], rad / 2, prof);
            ratio[i] = num / den;
        });
        std::size_t arg = static_cast<std::size_t>(std::max_element(ratio.begin(), ratio.end()) - ratio.begin());
        r.sup_ratio.push_back(ratio[arg]);
        r.witness.push_back(xs[arg]);
    }
    r.bounded = true;
    for (std::size_t k = 1; k < r.sup_ratio.size(); ++k)
        if (!(r.sup_ratio[k] <= 1.2 * r.sup_ratio[k - 1])) r.bounded = false;
    return r;
}

void write_profile_csv(const PotentialProfile& p, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw NumericalError("cannot write " + path);
    const char* names[3] = {"theta1", "theta2", "theta3"};
    for (int k = 0; k < p.d; ++k) f << names[k] << ',';
    f << "V,tail_bound,divergent\n";
    f.precision(12);
    for (std::size_t i = 0; i < p.V.size(); ++i) {
        for (int k = 0; k < p.d; ++k) f << p.dirs[i][k] << ',';
        if (std::isfinite(p.V[i]))
            f << p.V[i];
        else
            f << "inf";
        f << ',';
        if (std::isfinite(p.tail[i]))
            f << p.tail[i];
        else
            f << "inf";
        f << ',' << int(p.divergent[i]) << '\n';
    }
}

}  // namespace anisostable
