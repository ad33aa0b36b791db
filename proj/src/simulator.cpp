#include "anisostable/simulator.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>

#include <Eigen/Dense>
#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "anisostable/parallel.hpp"

namespace anisostable {

void SimulatorConfig::validate() const {
    if (!(eps > 0)) throw ModelError("simulator: eps must be > 0");
    if (!(h > 0)) throw ModelError("simulator: time step h must be > 0");
    if (!(t_max > 0)) throw ModelError("simulator: T_max must be > 0");
    if (paths == 0) throw ModelError("simulator: need at least one path");
}

nlohmann::json SimulatorConfig::to_json() const {
    return {{"eps", eps}, {"h", h}, {"t_max", t_max}, {"paths", paths}, {"seed", seed}, {"small_jumps", to_string(small)}};
}

SmallJumps small_jumps_from_string(const std::string& s) {
    if (s == "gaussian" || s == "gaussian_surrogate") return SmallJumps::GaussianSurrogate;
    if (s == "drop") return SmallJumps::Drop;
    throw ModelError("small-jump mode must be gaussian_surrogate or drop, got " + s);
}

const char* to_string(SmallJumps s) { return s == SmallJumps::Drop ? "drop" : "gaussian_surrogate"; }

Rng path_rng(std::uint64_t seed, std::uint64_t i) {
    // two splitmix64 rounds mixing seed and index into the seed sequence
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t a = mix(seed), b = mix(a ^ mix(i + 0x632be59bd9b4e019ULL));
    std::seed_seq sq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b),
                     static_cast<std::uint32_t>(b >> 32)};
    return Rng(sq);
}

IncrementSampler::IncrementSampler(const StableModel& m, double eps, SmallJumps small)
    : m_(&m), eps_(eps), rate_(m.large_jump_rate(eps)), small_(small) {
    if (!(eps > 0)) throw ModelError("simulator: eps must be > 0");
    if (small_ == SmallJumps::Drop) return;
    auto cov = m.small_jump_covariance(eps);
    Eigen::MatrixXd S(m.d, m.d);
    for (int i = 0; i < m.d; ++i)
        for (int j = 0; j < m.d; ++j) S(i, j) = cov[3 * i + j];
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success) throw NumericalError("small-jump covariance is not positive definite");
    Eigen::MatrixXd L = llt.matrixL();
    for (int i = 0; i < m.d; ++i)
        for (int j = 0; j <= i; ++j) chol_[3 * i + j] = L(i, j);
}

Vec IncrementSampler::large_jump(Rng& rng) const {
    boost::random::uniform_01<double> U;
    double u = 1 - U(rng);  // (0, 1]
    double r = eps_ * std::pow(u, -1 / m_->alpha);
    return r * m_->mu.sample_direction(rng);
}

Vec IncrementSampler::gaussian(double t, Rng& rng) const {
    Vec out{0, 0, 0};
    if (small_ == SmallJumps::Drop) return out;
    boost::random::normal_distribution<double> N;
    double z[3] = {0, 0, 0};
    const int d = m_->d;
    for (int i = 0; i < d; ++i) z[i] = N(rng);
    double st = std::sqrt(t);
    for (int i = 0; i < d; ++i) {
        double s = 0;
        for (int j = 0; j <= i; ++j) s += chol_[3 * i + j] * z[j];
        out[i] = st * s;
    }
    return out;
}

Vec IncrementSampler::sample(double t, Rng& rng) const {
    Vec x = gaussian(t, rng);
    // arrival times of the compound Poisson part on [0, t]
    boost::random::exponential_distribution<double> E(rate_);
    for (double s = E(rng); s <= t; s += E(rng)) x = x + large_jump(rng);
    return x;
}

Vec sample_increment(const StableModel& m, double t, const SimulatorConfig& cfg, Rng& rng) {
    IncrementSampler s(m, cfg.eps, cfg.small);
    return s.sample(t, rng);
}

std::size_t Lattice::size() const {
    std::size_t s = 1;
    for (int i = 0; i < d; ++i) s *= n;
    return s;
}

long Lattice::cell(const Vec& x) const {
    long idx = 0;
    for (int i = d - 1; i >= 0; --i) {
        double f = (x[i] + 1) * 0.5 * n;
        if (!(f >= 0 && f < n)) return -1;
        idx = idx * n + static_cast<long>(f);
    }
    return idx;
}

Vec Lattice::center(std::size_t i) const {
    Vec c{0, 0, 0};
    for (int k = 0; k < d; ++k) {
        c[k] = -1 + side() * (static_cast<double>(i % n) + 0.5);
        i /= n;
    }
    return c;
}

double ExitBatch::censored_fraction() const { return tau.empty() ? 0 : static_cast<double>(censored_count) / tau.size(); }

double ExitBatch::mean_tau() const {
    double s = 0;
    for (double t : tau) s += t;
    return tau.empty() ? 0 : s / tau.size();
}

double ExitBatch::mean_tau_se() const {
    if (tau.size() < 2) return kInf;
    double m = mean_tau(), v = 0;
    for (double t : tau) v += (t - m) * (t - m);
    return std::sqrt(v / (tau.size() - 1) / tau.size());
}

ExitBatch simulate_exit(const StableModel& m, const Vec& x0, const SimulatorConfig& cfg, ExitOptions opt) {
    cfg.validate();
    m.validate();
    ExitBatch b;
    b.x0 = x0;
    b.config = cfg;
    b.tau.assign(cfg.paths, 0);
    b.exit.assign(cfg.paths, x0);
    b.censored.assign(cfg.paths, 0);
    b.pre_exit.assign(cfg.paths, x0);
    b.jump_exit.assign(cfg.paths, 0);
    b.lattice = opt.lattice;
    b.lattice.d = m.d;
    const std::size_t ncell = opt.occupation ? b.lattice.size() : 0;
    // integer step counts, so the reduction is exact in any order
    std::vector<std::uint64_t> visits(ncell, 0), visits_sq(ncell, 0);
    std::mutex merge;

    IncrementSampler inc(m, cfg.eps, cfg.small);
    const double h = cfg.h;
    const auto kmax = static_cast<std::uint64_t>(std::ceil(cfg.t_max / h));
    const std::size_t chunk = 256;
    const std::size_t nchunks = (cfg.paths + chunk - 1) / chunk;
    const bool inside0 = dot(x0, x0) < 1;

    parallel_for(nchunks, [&](std::size_t c) {
        std::vector<std::uint64_t> lv(ncell, 0), lsq(ncell, 0), path(ncell, 0);
        std::vector<long> touched;
        boost::random::exponential_distribution<double> E(inc.rate());
        std::size_t end = std::min(cfg.paths, (c + 1) * chunk);
        for (std::size_t p = c * chunk; p < end; ++p) {
            if (!inside0) continue;  // τ = 0, X_τ = x0
            Rng rng = path_rng(cfg.seed, opt.first_path + p);
            Vec x = x0;
            double clock = E(rng);  // time to the next large jump, measured from the current grid time
            std::uint64_t k = 0;
            bool out = false;
            long run_cell = -1;
            std::uint64_t run = 0;
            auto flush = [&] {
                if (run_cell >= 0) {
                    if (path[run_cell] == 0) touched.push_back(run_cell);
                    path[run_cell] += run;
                }
                run = 0;
            };
            while (k < kmax) {
                if (ncell) {
                    long cell = b.lattice.cell(x);
                    if (cell != run_cell) {
                        flush();
                        run_cell = cell;
                    }
                    ++run;
                }
                Vec y = x + inc.gaussian(h, rng), before = y;
                while (clock <= h) {
                    before = y;
                    y = y + inc.large_jump(rng);
                    clock += E(rng);
                }
                clock -= h;
                x = y;
                ++k;
                if (dot(x, x) >= 1) {
                    out = true;
                    b.pre_exit[p] = before;
                    b.jump_exit[p] = dot(before, before) < 1;
                    break;
                }
            }
            if (ncell) {
                flush();
                for (long t : touched) {
                    lv[t] += path[t];
                    lsq[t] += path[t] * path[t];
                    path[t] = 0;
                }
                touched.clear();
            }
            b.tau[p] = k * h;
            b.exit[p] = x;
            b.censored[p] = !out;
        }
        if (ncell) {
            std::lock_guard<std::mutex> lock(merge);
            for (std::size_t i = 0; i < ncell; ++i) {
                visits[i] += lv[i];
                visits_sq[i] += lsq[i];
            }
        }
    });
    for (char f : b.censored) b.censored_count += f;
    if (ncell) {
        b.visits = visits;
        b.occupation.resize(ncell);
        b.occupation_sq.resize(ncell);
        for (std::size_t i = 0; i < ncell; ++i) {
            b.occupation[i] = h * static_cast<double>(visits[i]);
            b.occupation_sq[i] = h * h * static_cast<double>(visits_sq[i]);
        }
    }
    return b;
}

long ExteriorPartition::cell(const Vec& y) const {
    double r = norm(y);
    if (!(r >= 1)) return -1;
    auto it = std::upper_bound(radii.begin(), radii.end(), r);
    if (it == radii.begin() || it == radii.end()) return -1;
    std::size_t shell = (it - radii.begin()) - 1;
    double az = std::atan2(y[1], y[0]);
    if (az < 0) az += 2 * kPi;
    auto sector = std::min<std::size_t>(sectors - 1, static_cast<std::size_t>(az / (2 * kPi) * sectors));
    std::size_t band = 0;
    if (d == 3) {
        double u = std::clamp(y[2] / r, -1.0, 1.0);
        band = std::min<std::size_t>(bands - 1, static_cast<std::size_t>((u + 1) / 2 * bands));
    }
    return static_cast<long>((shell * sectors + sector) * (d == 3 ? bands : 1) + band);
}

void ExteriorPartition::split(std::size_t c, std::size_t& shell, std::size_t& sector, std::size_t& band) const {
    std::size_t nb = d == 3 ? bands : 1;
    band = c % nb;
    c /= nb;
    sector = c % sectors;
    shell = c / sectors;
}

double ExteriorPartition::volume(std::size_t c) const {
    std::size_t shell, sector, band;
    split(c, shell, sector, band);
    double r0 = radii[shell], r1 = radii[shell + 1];
    if (!std::isfinite(r1)) return kInf;
    if (d == 2) return 0.5 * (r1 * r1 - r0 * r0) * 2 * kPi / sectors;
    if (d == 3) return (r1 * r1 * r1 - r0 * r0 * r0) / 3 * 4 * kPi / (sectors * bands);
    return r1 - r0;
}

Interval wilson(std::size_t k, std::size_t n, double z) {
    if (n == 0) return {0, 1};
    double p = static_cast<double>(k) / n, z2 = z * z, den = 1 + z2 / n;
    double mid = (p + z2 / (2 * n)) / den;
    double half = z * std::sqrt(p * (1 - p) / n + z2 / (4.0 * n * n)) / den;
    return {std::max(0.0, mid - half), std::min(1.0, mid + half)};
}

double HarmonicMeasure::total() const {
    double s = 0;
    for (double f : freq) s += f;
    return s;
}

HarmonicMeasure harmonic_measure(const ExitBatch& b, const ExteriorPartition& p) {
    HarmonicMeasure hm;
    hm.partition = p;
    hm.partition.d = b.lattice.d;
    hm.counts.assign(p.size(), 0);
    hm.paths = b.size();
    hm.censored = b.censored_count;
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (b.censored[i]) continue;
        double r2 = dot(b.exit[i], b.exit[i]);
        if (r2 == 1) ++hm.on_sphere;
        long c = hm.partition.cell(b.exit[i]);
        if (c >= 0) ++hm.counts[c];
    }
    for (auto k : hm.counts) {
        hm.freq.push_back(hm.paths ? static_cast<double>(k) / hm.paths : 0);
        hm.ci.push_back(wilson(k, hm.paths));
    }
    return hm;
}

namespace {

std::vector<double> inside_fractions(const Lattice& L) {
    const int sub = 8;
    std::vector<double> f(L.size());
    const double side = L.side();
    for (std::size_t i = 0; i < f.size(); ++i) {
        Vec c = L.center(i);
        int in = 0, tot = 0;
        int nz = L.d == 3 ? sub : 1, ny = L.d >= 2 ? sub : 1;
        for (int a = 0; a < sub; ++a)
            for (int b = 0; b < ny; ++b)
                for (int e = 0; e < nz; ++e) {
                    Vec p = c;
                    p[0] += side * ((a + 0.5) / sub - 0.5);
                    if (L.d >= 2) p[1] += side * ((b + 0.5) / sub - 0.5);
                    if (L.d == 3) p[2] += side * ((e + 0.5) / sub - 0.5);
                    in += dot(p, p) < 1;
                    ++tot;
                }
        f[i] = static_cast<double>(in) / tot;
    }
    return f;
}

void fill_green(GreenField& g, const std::vector<double>& sum, const std::vector<double>& sum_sq, double n) {
    const double vol = g.lattice.volume();
    const std::size_t nc = g.lattice.size();
    g.inside = inside_fractions(g.lattice);
    g.G.assign(nc, 0);
    g.se.assign(nc, 0);
    g.mass.assign(nc, 0);
    g.low_confidence.assign(nc, 1);
    for (std::size_t i = 0; i < nc; ++i) {
        double mean = sum[i] / n;
        double var = std::max(0.0, sum_sq[i] / n - mean * mean);
        g.mass[i] = mean;
        double v = vol * g.inside[i];
        if (v > 0) {
            g.G[i] = mean / v;
            g.se[i] = std::sqrt(var / n) / v;
        }
        g.low_confidence[i] = g.visits[i] < 10;
    }
}

}  // namespace

GreenField green_estimate(const ExitBatch& b) {
    if (b.occupation.empty()) throw ModelError("green_estimate: batch was simulated without occupation");
    GreenField g;
    g.lattice = b.lattice;
    g.x0 = b.x0;
    g.paths = b.size();
    g.visits = b.visits;
    fill_green(g, b.occupation, b.occupation_sq, static_cast<double>(b.size()));
    return g;
}

GreenField coarsen(const GreenField& g) {
    if (g.lattice.n % 2) throw ModelError("coarsen: lattice size must be even");
    GreenField c;
    c.lattice = g.lattice;
    c.lattice.n /= 2;
    c.x0 = g.x0;
    c.paths = g.paths;
    const std::size_t nc = c.lattice.size();
    std::vector<double> sum(nc, 0), sq(nc, 0);
    c.visits.assign(nc, 0);
    const double n = static_cast<double>(g.paths);
    for (std::size_t i = 0; i < g.lattice.size(); ++i) {
        long j = c.lattice.cell(g.lattice.center(i));
        sum[j] += g.mass[i] * n;
        // block variance taken as the sum of the member variances
        double var_i = g.se[i] * g.se[i] * std::pow(g.lattice.volume() * g.inside[i], 2) * n;
        sq[j] += (var_i + g.mass[i] * g.mass[i]) * n;
        c.visits[j] += g.visits[i];
    }
    fill_green(c, sum, sq, n);
    return c;
}

void write_exit_csv(const ExitBatch& b, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ModelError("cannot write " + path);
    nlohmann::json hdr = b.config.to_json();
    hdr["x0"] = {b.x0[0], b.x0[1], b.x0[2]};
    f << "# " << hdr.dump() << "\n";
    const int d = b.lattice.d;
    f << "tau";
    for (int i = 0; i < d; ++i) f << ",x" << i + 1;
    f << ",censored\n";
    f.precision(17);
    for (std::size_t i = 0; i < b.size(); ++i) {
        f << b.tau[i];
        for (int k = 0; k < d; ++k) f << ',' << b.exit[i][k];
        f << ',' << int(b.censored[i]) << '\n';
    }
}

void write_occupation_csv(const ExitBatch& b, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ModelError("cannot write " + path);
    f << "# lattice n=" << b.lattice.n << " d=" << b.lattice.d << " paths=" << b.size() << "\n";
    f << "cell,mass,visits\n";
    f.precision(17);
    for (std::size_t i = 0; i < b.occupation.size(); ++i)
        if (b.visits[i]) f << i << ',' << b.occupation[i] << ',' << b.visits[i] << '\n';
}

}  // namespace anisostable
