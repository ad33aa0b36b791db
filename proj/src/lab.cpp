#include "anisostable/lab.hpp"

#include <algorithm>
#include <memory>
#include <numeric>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "anisostable/exponent.hpp"
#include "anisostable/parallel.hpp"
#include "anisostable/quad.hpp"

namespace anisostable {

namespace {

double sphere_area(int d) { return d == 1 ? 2 : d == 2 ? 2 * kPi : 4 * kPi; }

bool is_isotropic(const SpectralMeasure& mu) {
    return mu.atoms().empty() && mu.caps().empty() && mu.uniform_mass() > 0;
}

// Point of the cell at mid-radius (1.5 × inner edge for the unbounded shell) and mid-angle.
Vec cell_point(const ExteriorPartition& p, std::size_t c) {
    std::size_t shell, sector, band;
    p.split(c, shell, sector, band);
    double r0 = p.radii[shell], r1 = p.radii[shell + 1];
    double r = std::isfinite(r1) ? 0.5 * (r0 + r1) : 1.5 * r0;
    double az = 2 * kPi * (sector + 0.5) / p.sectors;
    if (p.d == 1) return {sector == 0 ? r : -r, 0, 0};
    if (p.d == 2) return {r * std::cos(az), r * std::sin(az), 0};
    double u = -1 + 2 * (band + 0.5) / p.bands, s = std::sqrt(1 - u * u);
    return {r * s * std::cos(az), r * s * std::sin(az), r * u};
}

}  // namespace

IsotropicOracle::IsotropicOracle(const StableModel& m) : d_(m.d), alpha_(m.alpha) {
    if (!is_isotropic(m.mu)) throw ModelError("closed-form oracles need an isotropic (uniform) spectral measure");
    c_ = m.phi_constant() * m.mu.uniform_mass() * uniform_abs_moment(m.d, m.alpha);
    // x = 0, r = 1/sin(φ): ∫_1^∞ (r²-1)^{-α/2} r^{-1} dr = ∫_0^{π/2} sin^{α-1}φ cos^{1-α}φ dφ
    double a = alpha_;
    double radial = quad::ts([a](double t) { return std::pow(std::sin(t), a - 1) * std::pow(std::cos(t), 1 - a); },
                             0.0, kPi / 2, 1e-13);
    norm_ = sphere_area(d_) * radial;
}

double IsotropicOracle::poisson_kernel(const Vec& x, const Vec& y) const {
    double x2 = dot(x, x), y2 = dot(y, y);
    if (!(x2 < 1) || !(y2 > 1)) return 0;
    return std::pow((1 - x2) / (y2 - 1), alpha_ / 2) * std::pow(norm(x - y), -d_) / norm_;
}

double IsotropicOracle::poisson_mass(const Vec& x, const ExteriorPartition& p, std::size_t cell) const {
    std::size_t shell, sector, band;
    p.split(cell, shell, sector, band);
    const double r0 = p.radii[shell], r1 = p.radii[shell + 1];
    const double a0 = 2 * kPi * sector / p.sectors, a1 = 2 * kPi * (sector + 1) / p.sectors;
    const double u0 = -1 + 2.0 * band / p.bands, u1 = -1 + 2.0 * (band + 1) / p.bands;
    // angular integral at radius r, times r^{d-1}
    auto shell_at = [&](double r) {
        if (d_ == 1) return poisson_kernel(x, {sector == 0 ? r : -r, 0, 0});
        if (d_ == 2)
            return r * quad::gk([&](double t) { return poisson_kernel(x, {r * std::cos(t), r * std::sin(t), 0}); }, a0,
                                a1, 1e-10);
        return r * r * quad::gk([&](double t) {
            return quad::gk([&](double u) {
                double s = std::sqrt(std::max(0.0, 1 - u * u));
                return poisson_kernel(x, {r * s * std::cos(t), r * s * std::sin(t), r * u});
            }, u0, u1, 1e-10);
        }, a0, a1, 1e-10);
    };
    if (std::isfinite(r1)) return quad::ts(shell_at, r0, r1, 1e-9);
    // r = r0/t
    return quad::ts([&](double t) {
        double r = r0 / t;
        return std::isfinite(r) && r < 1e150 ? shell_at(r) * r0 / (t * t) : 0.0;
    }, 0.0, 1.0, 1e-9);
}

double IsotropicOracle::green(const Vec& x, const Vec& v) const {
    if (!(d_ > alpha_)) throw RegimeError("ball Green function closed form needs d > alpha");
    double x2 = dot(x, x), v2 = dot(v, v);
    if (!(x2 < 1) || !(v2 < 1)) return 0;
    double r = norm(x - v);
    if (r == 0) return kInf;
    double a = alpha_ / 2, b = (d_ - alpha_) / 2;
    double w = (1 - x2) * (1 - v2) / (r * r);
    double kappa = std::exp(std::lgamma(d_ / 2.0) - alpha_ * std::log(2.0) - d_ / 2.0 * std::log(kPi) -
                            2 * std::lgamma(a));
    // ∫_0^w r^{a-1}(1+r)^{-d/2} dr = B(a, b) I_{w/(1+w)}(a, b)
    double inc = boost::math::beta(a, b) * boost::math::ibeta(a, b, w / (1 + w));
    return kappa * std::pow(r, alpha_ - d_) * inc / c_;
}

double IsotropicOracle::green_cell_average(const Vec& x, const Vec& center, double side, int sub) const {
    // finer sampling next to the pole
    if (norm(center - x) < 2 * side) sub = std::max(sub, 64);
    double sum = 0;
    int n = 0;
    int ny = d_ >= 2 ? sub : 1, nz = d_ == 3 ? sub : 1;
    for (int i = 0; i < sub; ++i)
        for (int j = 0; j < ny; ++j)
            for (int k = 0; k < nz; ++k) {
                Vec p = center;
                p[0] += side * ((i + 0.5) / sub - 0.5);
                if (d_ >= 2) p[1] += side * ((j + 0.5) / sub - 0.5);
                if (d_ == 3) p[2] += side * ((k + 0.5) / sub - 0.5);
                if (!(dot(p, p) < 1)) continue;
                sum += green(x, p);
                ++n;
            }
    return n ? sum / n : 0;
}

double IsotropicOracle::exit_time(const Vec& x) const {
    double x2 = dot(x, x);
    if (!(x2 < 1)) return 0;
    double lc = std::lgamma(d_ / 2.0) - alpha_ * std::log(2.0) - std::lgamma(1 + alpha_ / 2) -
                std::lgamma((d_ + alpha_) / 2);
    return std::exp(lc) * std::pow(1 - x2, alpha_ / 2) / c_;
}

double isotropic_poisson_kernel(const StableModel& m, const Vec& x, const Vec& y) {
    thread_local std::uint64_t key = 0;
    thread_local std::unique_ptr<IsotropicOracle> cached;
    if (!cached || key != m.checksum()) {
        cached = std::make_unique<IsotropicOracle>(m);
        key = m.checksum();
    }
    return cached->poisson_kernel(x, y);
}

std::vector<std::pair<Vec, double>> mu_nodes(const SpectralMeasure& mu, int n, Rng* jitter) {
    std::vector<std::pair<Vec, double>> out;
    const int d = mu.dim();
    std::uniform_real_distribution<double> U(0, 1);
    // stratified: with a jitter stream every node is uniform on its stratum
    auto off = [&] { return jitter ? U(*jitter) : 0.5; };
    for (auto& a : mu.atoms()) out.push_back({a.dir, a.mass});
    double M = mu.uniform_mass();
    if (M > 0) {
        if (d == 1) {
            out.push_back({{1, 0, 0}, M / 2});
            out.push_back({{-1, 0, 0}, M / 2});
        } else if (d == 2) {
            double u = off();
            for (int k = 0; k < n; ++k) {
                double t = 2 * kPi * (k + u) / n;
                out.push_back({{std::cos(t), std::sin(t), 0}, M / n});
            }
        } else {
            const double golden = kPi * (3 - std::sqrt(5.0));
            double spin = jitter ? 2 * kPi * U(*jitter) : 0;
            for (int i = 0; i < n; ++i) {
                double z = 1 - 2 * (i + off()) / n, r = std::sqrt(std::max(0.0, 1 - z * z));
                double t = golden * i + spin;
                out.push_back({{r * std::cos(t), r * std::sin(t), z}, M / n});
            }
        }
    }
    // caps() already holds the shrinking-ball caps
    for (auto& c : mu.caps()) {
        double mass = mu.cap_mass(c);
        if (d == 2) {
            int m = std::max(8, static_cast<int>(std::ceil(n * c.radius / kPi)));
            double t0 = std::atan2(c.center[1], c.center[0]), u = off();
            for (int k = 0; k < m; ++k) {
                double t = t0 - c.radius + 2 * c.radius * (k + u) / m;
                out.push_back({{std::cos(t), std::sin(t), 0}, mass / m});
            }
        } else {
            // rings uniform in cos(polar angle) carry equal area
            int nr = std::max(2, static_cast<int>(std::ceil(std::sqrt(n * (1 - std::cos(c.radius)) / 2))));
            int na = std::max(6, 2 * nr);
            Vec e1, e2;
            tangent_frame(c.center, e1, e2);
            for (int i = 0; i < nr; ++i) {
                double cp = 1 - (1 - std::cos(c.radius)) * (i + off()) / nr, sp = std::sqrt(1 - cp * cp);
                double u = off();
                for (int j = 0; j < na; ++j) {
                    double psi = 2 * kPi * (j + u) / na;
                    out.push_back({cp * c.center + (sp * std::cos(psi)) * e1 + (sp * std::sin(psi)) * e2,
                                   mass / (nr * na)});
                }
            }
        }
    }
    return out;
}

void nu_partition_masses(double alpha, const std::vector<std::pair<Vec, double>>& nodes, const Vec& v,
                         const ExteriorPartition& p, double weight, std::vector<double>& out, double min_r) {
    nu_partition_visit(alpha, nodes, v, p, min_r, [&](long c, double m) { out[c] += weight * m; });
}

void nu_partition_visit(double alpha, const std::vector<std::pair<Vec, double>>& nodes, const Vec& v,
                        const ExteriorPartition& p, double min_r, const std::function<void(long, double)>& fn) {
    std::vector<double> cut;
    const double vv = dot(v, v);
    if (!(vv < 1)) throw ModelError("nu_partition_masses: need |v| < 1");
    const double width = 2 * kPi / p.sectors;
    for (auto& [th, w] : nodes) {
        const double b = dot(v, th);
        // the ray v + rθ leaves the unit ball at r_out; cells only meet r > r_out
        const double start = std::max(-b + std::sqrt(b * b + 1 - vv), min_r);
        auto at = [&](double r) { return v + r * th; };
        cut.clear();
        for (double R : p.radii) {
            if (!std::isfinite(R) || R <= 1) continue;
            double r = -b + std::sqrt(b * b + R * R - vv);
            if (r > start) cut.push_back(r);
        }
        const double thxy = std::hypot(th[0], th[1]);
        if (p.d >= 2 && p.sectors > 1 && thxy > 0) {
            // the azimuth moves monotonically along the ray, by less than π
            Vec y0 = at(start);
            double a0 = std::atan2(y0[1], y0[0]), a1 = std::atan2(th[1], th[0]);
            double sweep = std::remainder(a1 - a0, 2 * kPi);
            double lo = std::min(a0, a0 + sweep), hi = std::max(a0, a0 + sweep);
            for (long k = static_cast<long>(std::ceil(lo / width)); k * width <= hi; ++k) {
                double a = k * width, ca = std::cos(a), sa = std::sin(a);
                double den = th[0] * sa - th[1] * ca;
                // parallel to the boundary (atoms on the axes); cos(π/2) is not 0 in floating point
                if (std::abs(den) < 1e-12) continue;
                double r = -(v[0] * sa - v[1] * ca) / den;
                if (r > start) cut.push_back(r);
            }
        }
        if (p.d == 3 && p.bands > 1) {
            // u = cos(polar angle) has at most one critical point along a line
            auto u_at = [&](double r) {
                Vec y = at(r);
                return y[2] / norm(y);
            };
            double ulo = std::min(u_at(start), th[2]), uhi = std::max(u_at(start), th[2]);
            double den = b * th[2] - v[2];
            if (den != 0) {
                double rc = (v[2] * b - th[2] * vv) / den;
                if (rc > start) {
                    ulo = std::min(ulo, u_at(rc));
                    uhi = std::max(uhi, u_at(rc));
                }
            }
            for (int k = 1; k < p.bands; ++k) {
                double u = -1 + 2.0 * k / p.bands;
                if (u < ulo || u > uhi) continue;
                double u2 = u * u;
                double A = th[2] * th[2] - u2, B = 2 * (v[2] * th[2] - u2 * b), C = v[2] * v[2] - u2 * vv;
                if (std::abs(A) < 1e-300) {
                    if (B != 0 && -C / B > start) cut.push_back(-C / B);
                    continue;
                }
                double disc = B * B - 4 * A * C;
                if (disc < 0) continue;
                double s = std::sqrt(disc);
                for (double r : {(-B - s) / (2 * A), (-B + s) / (2 * A)}) {
                    // the quadratic also holds on the mirror cone -u
                    if (r > start && std::abs(u_at(r) - u) < 1e-9) cut.push_back(r);
                }
            }
        }
        std::sort(cut.begin(), cut.end());
        cut.push_back(kInf);
        double lo = start, plo = std::pow(lo, -alpha);
        for (double hi : cut) {
            if (hi <= lo) continue;
            // any point strictly inside the segment will do; far points lose the azimuth to rounding
            double mid = lo + 0.5 * std::min(hi - lo, lo + 1);
            double phi = std::isfinite(hi) ? std::pow(hi, -alpha) : 0;
            long c = p.cell(at(mid));
            if (c >= 0) fn(c, w * (plo - phi) / alpha);
            lo = hi;
            plo = phi;
        }
    }
}

double green_at(const GreenField& g, const Vec& v) {
    if (!(dot(v, v) < 1)) return 0;
    const Lattice& L = g.lattice;
    const int d = L.d, n = L.n;
    double f[3], t[3];
    int i0[3];
    for (int k = 0; k < d; ++k) {
        f[k] = (v[k] + 1) / L.side() - 0.5;
        i0[k] = static_cast<int>(std::floor(f[k]));
        t[k] = f[k] - i0[k];
    }
    double sum = 0;
    for (int corner = 0; corner < (1 << d); ++corner) {
        double w = 1;
        long idx = 0;
        bool ok = true;
        for (int k = d - 1; k >= 0; --k) {
            int bit = (corner >> k) & 1;
            int i = i0[k] + bit;
            if (i < 0 || i >= n) ok = false;
            w *= bit ? t[k] : 1 - t[k];
            idx = idx * n + i;
        }
        if (ok && w > 0) sum += w * g.G[idx];
    }
    return sum;
}

IwValue poisson_kernel_iw(const StableModel& m, const Vec& y, const GreenField& g, int mu_nodes_n) {
    IwValue out{0, 0, false};
    if (!(dot(y, y) > 1)) throw ModelError("poisson_kernel_iw: need |y| > 1");
    using G32 = boost::math::quadrature::gauss<double, 32>;
    const auto nodes = mu_nodes(m.mu, mu_nodes_n);
    const double a = m.alpha;
    double low = 0, var = 0;
    const double yy = dot(y, y);
    for (auto& [th, w] : nodes) {
        // chord {r : |y - rθ| < 1}
        double b = dot(y, th), disc = b * b - (yy - 1);
        if (disc <= 0) continue;
        double s = std::sqrt(disc), r0 = b - s, r1 = b + s;
        if (r1 <= 0) continue;
        r0 = std::max(r0, 0.0);
        double val = G32::integrate([&](double r) { return green_at(g, y - r * th) * std::pow(r, -1 - a); }, r0, r1);
        out.value += w * val;
        // error and confidence from the cells the chord passes through
        double se = 0, lowpart = 0;
        const int k = 16;
        for (int i = 0; i < k; ++i) {
            double r = r0 + (r1 - r0) * (i + 0.5) / k;
            long c = g.lattice.cell(y - r * th);
            if (c < 0) continue;
            double piece = (r1 - r0) / k * std::pow(r, -1 - a);
            se += piece * g.se[c];
            if (g.low_confidence[c]) lowpart += piece * g.G[c];
        }
        var += (w * se) * (w * se);
        low += w * lowpart;
    }
    out.se = std::sqrt(var);
    out.low_confidence_dominated = low > 0.1 * out.value;
    return out;
}

std::vector<double> iw_harmonic_masses(const StableModel& m, const GreenField& g, const ExteriorPartition& p,
                                       int sub, int boundary_sub, int mu_nodes_n) {
    const auto nodes = mu_nodes(m.mu, mu_nodes_n);
    const Lattice& L = g.lattice;
    ExteriorPartition part = p;
    part.d = L.d;
    std::vector<std::size_t> cells;
    for (std::size_t c = 0; c < L.size(); ++c)
        if (g.mass[c] > 0) cells.push_back(c);
    const double reach = L.side() * std::sqrt(static_cast<double>(L.d));
    // per-cell contributions, summed in cell order afterwards
    std::vector<std::vector<double>> per(cells.size());
    parallel_for(cells.size(), [&](std::size_t i) {
        std::size_t c = cells[i];
        Vec ctr = L.center(c);
        bool edge = norm(ctr) > 1 - reach;
        int k = edge ? boundary_sub : sub;
        std::vector<Vec> pts;
        std::vector<double> w;
        int ny = L.d >= 2 ? k : 1, nz = L.d == 3 ? k : 1;
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < ny; ++b)
                for (int e = 0; e < nz; ++e) {
                    Vec q = ctr;
                    q[0] += L.side() * ((a + 0.5) / k - 0.5);
                    if (L.d >= 2) q[1] += L.side() * ((b + 0.5) / k - 0.5);
                    if (L.d == 3) q[2] += L.side() * ((e + 0.5) / k - 0.5);
                    double qq = dot(q, q);
                    if (qq < 1) {
                        pts.push_back(q);
                        w.push_back(edge ? std::pow(1 - qq, m.alpha / 2) : 1.0);
                    }
                }
        per[i].assign(part.size(), 0);
        if (pts.empty()) return;  // sliver below the subgrid resolution
        double wsum = std::accumulate(w.begin(), w.end(), 0.0);
        for (std::size_t j = 0; j < pts.size(); ++j)
            nu_partition_masses(m.alpha, nodes, pts[j], part, g.mass[c] * w[j] / wsum, per[i]);
    });
    std::vector<double> out(part.size(), 0);
    for (auto& v : per)
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += v[k];
    return out;
}

std::string harnack_verdict(const std::vector<double>& r) {
    if (r.size() < 3) return "inconclusive";
    std::size_t n = r.size();
    bool grow = r[n - 1] >= 1.10 * r[n - 2] && r[n - 2] >= 1.10 * r[n - 3] && r[n - 1] >= 1.25 * r[0];
    return grow ? "violating" : "consistent";
}

SoftHarmonicMeasure conditional_harmonic_measure(const StableModel& m, const ExitBatch& b, const ExteriorPartition& p,
                                                 int nodes, std::uint64_t salt) {
    SoftHarmonicMeasure out;
    out.partition = p;
    out.partition.d = m.d;
    const ExteriorPartition& part = out.partition;
    const std::size_t nc = part.size(), n = b.size();
    const double eps = b.config.eps, a = m.alpha;
    const std::size_t chunk = 1024, nchunks = (n + chunk - 1) / chunk;
    std::vector<std::vector<double>> s1(nchunks), s2(nchunks);
    parallel_for(nchunks, [&](std::size_t k) {
        std::vector<double> q(nc, 0), acc(nc, 0), acc2(nc, 0);
        std::vector<long> touched;
        auto add = [&](long c, double v) {
            if (q[c] == 0) touched.push_back(c);
            q[c] += v;
        };
        for (std::size_t i = k * chunk; i < std::min(n, (k + 1) * chunk); ++i) {
            if (b.censored[i]) continue;
            if (b.jump_exit[i]) {
                Rng rng = path_rng(b.config.seed ^ (0x6a09e667f3bcc909ULL + salt), i);
                auto nd = mu_nodes(m.mu, nodes, &rng);
                const Vec& v = b.pre_exit[i];
                double vv = dot(v, v), total = 0;
                for (auto& [th, w] : nd) {
                    double bt = dot(v, th);
                    total += w * std::pow(std::max(-bt + std::sqrt(bt * bt + 1 - vv), eps), -a) / a;
                }
                if (total > 0) nu_partition_visit(a, nd, v, part, eps, [&](long c, double mass) { add(c, mass / total); });
            } else {
                long c = part.cell(b.exit[i]);
                if (c >= 0) add(c, 1);
            }
            for (long c : touched) {
                acc[c] += q[c];
                acc2[c] += q[c] * q[c];
                q[c] = 0;
            }
            touched.clear();
        }
        s1[k] = std::move(acc);
        s2[k] = std::move(acc2);
    });
    std::vector<double> sum(nc, 0), sum2(nc, 0);
    for (std::size_t k = 0; k < nchunks; ++k)
        for (std::size_t c = 0; c < nc; ++c) {
            sum[c] += s1[k][c];
            sum2[c] += s2[k][c];
        }
    out.paths = n;
    out.freq.resize(nc);
    out.se.resize(nc);
    out.n_eff.resize(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        double f = n ? sum[c] / n : 0;
        out.freq[c] = f;
        out.se[c] = n ? std::sqrt(std::max(0.0, sum2[c] / n - f * f) / n) : 0;
        out.n_eff[c] = sum2[c] > 0 ? sum[c] * sum[c] / sum2[c] : 0;
    }
    return out;
}

HarnackReport harnack_from_batches(const StableModel& m, const ExitBatch& b1, const ExitBatch& b2,
                                   const HarnackConfig& cfg) {
    HarnackReport rep;
    rep.x1 = b1.x0;
    rep.x2 = b2.x0;
    rep.paths = std::min(b1.size(), b2.size());
    const int d = m.d;
    bool conditional = cfg.estimator == HarnackEstimator::Conditional ||
                       (cfg.estimator == HarnackEstimator::Auto && d == 3);
    rep.estimator = conditional ? "conditional" : "counts";
    std::vector<double> sups;
    for (int s : cfg.sectors) {
        ExteriorPartition p;
        p.d = d;
        p.radii = cfg.radii;
        p.sectors = d == 1 ? 2 : s;
        p.bands = d == 3 ? std::max(1, s / 2) : 1;
        // per cell: frequency, interval, whether it is populated enough
        std::vector<double> f1, f2;
        std::vector<Interval> c1, c2;
        std::vector<char> ok;
        if (conditional) {
            auto h1 = conditional_harmonic_measure(m, b1, p, cfg.nodes, 1);
            auto h2 = conditional_harmonic_measure(m, b2, p, cfg.nodes, 2);
            for (std::size_t c = 0; c < p.size(); ++c) {
                f1.push_back(h1.freq[c]);
                f2.push_back(h2.freq[c]);
                c1.push_back({std::max(0.0, h1.freq[c] - 1.96 * h1.se[c]), h1.freq[c] + 1.96 * h1.se[c]});
                c2.push_back({std::max(0.0, h2.freq[c] - 1.96 * h2.se[c]), h2.freq[c] + 1.96 * h2.se[c]});
                ok.push_back(h1.n_eff[c] >= cfg.conditional_floor && h2.n_eff[c] >= cfg.conditional_floor);
            }
        } else {
            auto h1 = harmonic_measure(b1, p), h2 = harmonic_measure(b2, p);
            f1 = h1.freq;
            f2 = h2.freq;
            c1 = h1.ci;
            c2 = h2.ci;
            for (std::size_t c = 0; c < p.size(); ++c)
                ok.push_back(h1.counts[c] >= cfg.count_floor && h2.counts[c] >= cfg.count_floor);
        }
        HarnackLevel lv;
        lv.sectors = p.sectors;
        lv.bands = p.bands;
        for (std::size_t c = 0; c < p.size(); ++c) {
            if (!ok[c]) continue;
            ++lv.cells_used;
            double r = f1[c] / f2[c];
            if (r > lv.sup_ratio) {
                lv.sup_ratio = r;
                lv.ci = {c1[c].lo / c2[c].hi, c2[c].lo > 0 ? c1[c].hi / c2[c].lo : kInf};
                lv.witness = cell_point(p, c);
            }
        }
        if (lv.cells_used == 0) {
            rep.skipped.push_back("sectors=" + std::to_string(s) + ": no cell above the floor");
            continue;
        }
        rep.levels.push_back(lv);
        sups.push_back(lv.sup_ratio);
    }
    rep.verdict = harnack_verdict(sups);
    return rep;
}

HarnackReport harnack_test(const StableModel& m, const Vec& x1, const Vec& x2, const HarnackConfig& cfg) {
    ExitOptions o1, o2;
    o2.first_path = cfg.sim.paths;  // disjoint streams for the two starting points
    auto b1 = simulate_exit(m, x1, cfg.sim, o1);
    auto b2 = simulate_exit(m, x2, cfg.sim, o2);
    return harnack_from_batches(m, b1, b2, cfg);
}

nlohmann::json HarnackReport::to_json() const {
    using nlohmann::json;
    json lv = json::array();
    for (auto& l : levels)
        lv.push_back({{"sectors", l.sectors},
                      {"bands", l.bands},
                      {"cells_used", l.cells_used},
                      {"sup_ratio", l.sup_ratio},
                      {"ci", {l.ci.lo, l.ci.hi}},
                      {"witness", {l.witness[0], l.witness[1], l.witness[2]}}});
    return {{"x1", {x1[0], x1[1], x1[2]}},
            {"x2", {x2[0], x2[1], x2[2]}},
            {"paths", paths},
            {"levels", lv},
            {"skipped", skipped},
            {"estimator", estimator},
            {"verdict", verdict}};
}

double ExitTimeProfile::at(const Vec& v) const {
    double r = norm(v);
    if (!(r < 1)) return 0;
    const std::size_t nr = radii.size();
    auto along = [&](std::size_t k) {
        // q = s/(1-r²)^{α/2} is smooth up to the boundary
        auto q = [&](std::size_t i) { return s[k * nr + i] / std::pow(1 - radii[i] * radii[i], alpha / 2); };
        double val;
        if (r <= radii.front()) {
            val = q(0);
        } else if (r >= radii.back()) {
            val = q(nr - 1);
        } else {
            std::size_t i = std::upper_bound(radii.begin(), radii.end(), r) - radii.begin() - 1;
            double t = (r - radii[i]) / (radii[i + 1] - radii[i]);
            val = (1 - t) * q(i) + t * q(i + 1);
        }
        return val * std::pow(1 - r * r, alpha / 2);
    };
    if (dirs.size() == 1 || r == 0) return along(0);
    Vec u = (1 / r) * v;
    if (d == 2) {
        // dirs are equally spaced angles from 0
        double a = std::atan2(u[1], u[0]);
        if (a < 0) a += 2 * kPi;
        double f = a / (2 * kPi) * dirs.size();
        std::size_t i = static_cast<std::size_t>(f) % dirs.size(), j = (i + 1) % dirs.size();
        double t = f - std::floor(f);
        return (1 - t) * along(i) + t * along(j);
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < dirs.size(); ++k)
        if (dot(u, dirs[k]) > dot(u, dirs[best])) best = k;
    return along(best);
}

ExitTimeProfile exit_time_profile(const StableModel& m, const SimulatorConfig& cfg, std::vector<double> radii,
                                  int ndirs) {
    ExitTimeProfile p;
    p.d = m.d;
    p.alpha = m.alpha;
    p.radii = radii.empty() ? std::vector<double>{0, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95, 0.98} : radii;
    if (m.d == 1) {
        p.dirs = {{1, 0, 0}, {-1, 0, 0}};
    } else if (m.d == 2) {
        int n = ndirs > 0 ? ndirs : 8;
        for (int k = 0; k < n; ++k) p.dirs.push_back({std::cos(2 * kPi * k / n), std::sin(2 * kPi * k / n), 0});
    } else {
        for (int k = 0; k < 3; ++k) {
            Vec e{0, 0, 0};
            e[k] = 1;
            p.dirs.push_back(e);
            p.dirs.push_back(-e);
        }
        for (int sx : {-1, 1})
            for (int sy : {-1, 1})
                for (int sz : {-1, 1}) p.dirs.push_back(normalized(Vec{double(sx), double(sy), double(sz)}));
    }
    const std::size_t nr = p.radii.size();
    p.s.assign(p.dirs.size() * nr, 0);
    p.se.assign(p.dirs.size() * nr, 0);
    double s0 = -1, se0 = 0;
    for (std::size_t k = 0; k < p.dirs.size(); ++k)
        for (std::size_t i = 0; i < nr; ++i) {
            double r = p.radii[i];
            if (r == 0 && s0 >= 0) {
                p.s[k * nr + i] = s0;
                p.se[k * nr + i] = se0;
                continue;
            }
            ExitOptions o;
            o.first_path = (k * nr + i) * cfg.paths;
            auto b = simulate_exit(m, r * p.dirs[k], cfg, o);
            p.s[k * nr + i] = b.mean_tau();
            p.se[k * nr + i] = b.mean_tau_se();
            if (r == 0) {
                s0 = p.s[k * nr + i];
                se0 = p.se[k * nr + i];
            }
        }
    return p;
}

namespace {

// cell average of |v - x|^{α-d} over cell ∩ ball
double kernel_cell_average(const Vec& x, const Vec& c, double side, int d, double alpha) {
    int sub = norm(c - x) < 2 * side ? 64 : 8;
    int ny = d >= 2 ? sub : 1, nz = d == 3 ? sub : 1;
    double sum = 0;
    int n = 0;
    for (int i = 0; i < sub; ++i)
        for (int j = 0; j < ny; ++j)
            for (int k = 0; k < nz; ++k) {
                Vec p = c;
                p[0] += side * ((i + 0.5) / sub - 0.5);
                if (d >= 2) p[1] += side * ((j + 0.5) / sub - 0.5);
                if (d == 3) p[2] += side * ((k + 0.5) / sub - 0.5);
                if (!(dot(p, p) < 1)) continue;
                sum += std::pow(norm(p - x), alpha - d);
                ++n;
            }
    return n ? sum / n : 0;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0;
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
}

double band_of(const std::vector<double>& r, double scale) {
    double b = 0;
    for (double x : r) {
        double q = x / scale;
        b = std::max(b, std::max(q, 1 / q));
    }
    return b;
}

}  // namespace

GreenComparison green_ratio_test(const StableModel& m, const Vec& x, const SimulatorConfig& cfg, GreenTestOptions opt) {
    if (!(norm(x) < 0.5)) throw ModelError("green_ratio_test: need |x| < 1/2");
    GreenComparison out;
    out.x = x;
    ExitOptions eo;
    eo.occupation = true;
    eo.lattice.n = opt.lattice_n;
    auto b = simulate_exit(m, x, cfg, eo);
    out.field = green_estimate(b);
    SimulatorConfig pc = cfg;
    pc.paths = opt.profile_paths;
    pc.seed = cfg.seed + 0x5eed;
    out.s = exit_time_profile(m, pc);

    const auto& g = out.field;
    const Lattice& L = g.lattice;
    const std::size_t nc = L.size();
    out.ratio.assign(nc, std::nan(""));
    out.confident.assign(nc, 0);
    std::unique_ptr<IsotropicOracle> iso;
    if (is_isotropic(m.mu) && m.d > m.alpha) iso = std::make_unique<IsotropicOracle>(m);
    out.classical_available = iso != nullptr;
    std::vector<double> ratios, refined;
    for (std::size_t c = 0; c < nc; ++c) {
        Vec v = L.center(c);
        if (norm(v) > opt.rmax) continue;
        bool conf = !g.low_confidence[c] && g.G[c] > 0 && g.se[c] <= opt.max_rel_se * g.G[c];
        out.confident[c] = conf;
        if (!conf) continue;
        double k = kernel_cell_average(x, v, L.side(), m.d, m.alpha);
        double sv = out.s.at(v);
        if (!(sv > 0) || !(k > 0)) continue;
        double r = g.G[c] / (sv * k);
        out.ratio[c] = r;
        ratios.push_back(r);
        refined.push_back(g.G[c] / (std::pow(1 - dot(v, v), m.alpha / 2) * k));
    }
    if (iso) {
        GreenField cg = opt.classical_coarse && L.n % 2 == 0 ? coarsen(g) : g;
        for (std::size_t c = 0; c < cg.lattice.size(); ++c) {
            Vec v = cg.lattice.center(c);
            if (norm(v) > opt.classical_rmax || cg.low_confidence[c] || !(cg.G[c] > 0)) continue;
            double ref = iso->green_cell_average(x, v, cg.lattice.side());
            out.classical_max_rel = std::max(out.classical_max_rel, std::abs(cg.G[c] / ref - 1));
            ++out.classical_cells;
        }
    }
    if (!ratios.empty()) {
        out.ratio_min = *std::min_element(ratios.begin(), ratios.end());
        out.ratio_max = *std::max_element(ratios.begin(), ratios.end());
        out.ratio_median = median(ratios);
        out.band = band_of(ratios, 1.0);
        out.normalized_band = band_of(ratios, out.ratio_median);
        out.refined_band = band_of(refined, median(refined));
    }
    return out;
}

nlohmann::json GreenComparison::to_json() const {
    nlohmann::json j;
    j["x"] = {x[0], x[1], x[2]};
    j["lattice_n"] = field.lattice.n;
    j["paths"] = field.paths;
    std::size_t nconf = 0;
    for (char c : confident) nconf += c;
    j["confident_cells"] = nconf;
    j["ratio"] = {{"min", ratio_min}, {"max", ratio_max}, {"median", ratio_median}};
    j["band"] = band;
    j["normalized_band"] = normalized_band;
    j["refined_band"] = refined_band;
    if (classical_available)
        j["classical"] = {{"max_rel_err", classical_max_rel}, {"cells", classical_cells}};
    nlohmann::json sp = nlohmann::json::array();
    for (std::size_t k = 0; k < s.dirs.size(); ++k)
        for (std::size_t i = 0; i < s.radii.size(); ++i)
            sp.push_back({{"dir", {s.dirs[k][0], s.dirs[k][1], s.dirs[k][2]}},
                          {"r", s.radii[i]},
                          {"s", s.s[k * s.radii.size() + i]},
                          {"se", s.se[k * s.radii.size() + i]}});
    j["exit_time_profile"] = sp;
    return j;
}

ClosureReport oracle_closure(const StableModel& m, const Vec& x, const ExteriorPartition& p, const SimulatorConfig& cfg,
                             int batches, int lattice_n, double z) {
    IsotropicOracle iso(m);
    ClosureReport rep;
    rep.x = x;
    rep.partition = p;
    rep.partition.d = m.d;
    const std::size_t nc = rep.partition.size();
    const std::size_t per = std::max<std::size_t>(1, cfg.paths / batches);
    SimulatorConfig bc = cfg;
    bc.paths = per;
    std::vector<std::vector<double>> iw_b;
    std::vector<std::size_t> counts(nc, 0);
    std::size_t total = 0;
    std::vector<double> occ, occ_sq;
    std::vector<std::uint64_t> visits;
    ExitBatch pooled;
    for (int k = 0; k < batches; ++k) {
        ExitOptions o;
        o.occupation = true;
        o.lattice.n = lattice_n;
        o.first_path = k * per;
        auto b = simulate_exit(m, x, bc, o);
        auto hm = harmonic_measure(b, rep.partition);
        for (std::size_t c = 0; c < nc; ++c) counts[c] += hm.counts[c];
        total += b.size();
        iw_b.push_back(iw_harmonic_masses(m, green_estimate(b), rep.partition));
        if (k == 0) {
            pooled = b;
        } else {
            for (std::size_t i = 0; i < b.occupation.size(); ++i) {
                pooled.occupation[i] += b.occupation[i];
                pooled.occupation_sq[i] += b.occupation_sq[i];
                pooled.visits[i] += b.visits[i];
            }
            pooled.tau.insert(pooled.tau.end(), b.tau.begin(), b.tau.end());
        }
    }
    auto field = green_estimate(pooled);
    auto fine = iw_harmonic_masses(m, field, rep.partition);
    auto coarse = iw_harmonic_masses(m, coarsen(field), rep.partition);
    for (std::size_t c = 0; c < nc; ++c) {
        double f = static_cast<double>(counts[c]) / total;
        rep.direct.push_back(f);
        rep.direct_se.push_back(std::sqrt(std::max(f * (1 - f), 1.0 / total) / total));
        double mean = 0, var = 0;
        for (auto& v : iw_b) mean += v[c];
        mean /= iw_b.size();
        for (auto& v : iw_b) var += (v[c] - mean) * (v[c] - mean);
        var /= std::max<std::size_t>(1, iw_b.size() - 1);
        rep.iw.push_back(fine[c]);
        rep.iw_se.push_back(std::sqrt(var / iw_b.size()));
        rep.iw_quad.push_back(std::abs(fine[c] - coarse[c]));
        double e = iso.poisson_mass(x, rep.partition, c);
        rep.exact.push_back(e);
        rep.exact_quad.push_back(1e-6 * e + 1e-9);
    }
    rep.worst_z = 0;
    for (std::size_t c = 0; c < nc; ++c) {
        auto zz = [&](double a, double sa, double qa, double b, double sb, double qb) {
            return std::abs(a - b) / (z * std::sqrt(sa * sa + sb * sb) + qa + qb) * z;
        };
        rep.worst_z = std::max({rep.worst_z,
                                zz(rep.direct[c], rep.direct_se[c], 0, rep.iw[c], rep.iw_se[c], rep.iw_quad[c]),
                                zz(rep.direct[c], rep.direct_se[c], 0, rep.exact[c], 0, rep.exact_quad[c]),
                                zz(rep.iw[c], rep.iw_se[c], rep.iw_quad[c], rep.exact[c], 0, rep.exact_quad[c])});
    }
    rep.agree = rep.worst_z <= z;
    return rep;
}

nlohmann::json ClosureReport::to_json() const {
    nlohmann::json cells = nlohmann::json::array();
    for (std::size_t c = 0; c < direct.size(); ++c)
        cells.push_back({{"cell", c},
                         {"direct", direct[c]},
                         {"direct_se", direct_se[c]},
                         {"iw", iw[c]},
                         {"iw_se", iw_se[c]},
                         {"iw_quad", iw_quad[c]},
                         {"exact", exact[c]}});
    return {{"x", {x[0], x[1], x[2]}},
            {"radii", partition.radii},
            {"sectors", partition.sectors},
            {"cells", cells},
            {"worst_z", worst_z},
            {"agree", agree}};
}

}  // namespace anisostable
