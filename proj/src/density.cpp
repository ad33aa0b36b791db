#include "anisostable/density.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "anisostable/parallel.hpp"
#include "anisostable/simd.hpp"

namespace anisostable {

namespace {

constexpr int kDefaultNodes2 = 2048;
constexpr int kDefaultAzimuths3 = 128;

// Maps [0,1] onto itself with vanishing slope at both ends, so nodes pile up
// next to kinks of Φ at the interval ends.
double graded(double s) {
    double a = s * s, b = (1 - s) * (1 - s);
    return a / (a + b);
}

double wrap_pi(double t) {
    t = std::fmod(t, kPi);
    return t < 0 ? t + kPi : t;
}

struct Scratch {
    std::vector<double> w, J, K, acc;
    void resize(std::size_t n) {
        if (w.size() < n) {
            w.resize(n);
            J.resize(n);
            K.resize(n);
            acc.resize(n);
        }
    }
};

}  // namespace

RidgeEvaluator::RidgeEvaluator(const StableModel& m, int angular_nodes)
    : d_(m.d), alpha_(m.alpha), nodes_(angular_nodes), table_(&ridge_table(m.alpha, m.d)) {
    ExponentEvaluator ev(m);
    prefactor_ = 2 / std::pow(2 * kPi, d_);
    if (d_ == 1) {
        sigma1_ = std::pow(ev.phi({1, 0, 0}), -1 / alpha_);
        nodes_ = 1;
    } else if (d_ == 2) {
        if (nodes_ <= 0) nodes_ = kDefaultNodes2;
        build_d2(ev);
    } else {
        if (nodes_ <= 0) nodes_ = kDefaultAzimuths3;
        for (int k = 0; k < 3; ++k) {
            Vec p{0, 0, 0};
            p[k] = 1;
            sets_.push_back(build_d3(ev, p));
        }
    }
}

RidgeEvaluator::RidgeEvaluator(const StableModel& m, int angular_nodes, const Vec& pole)
    : d_(m.d), alpha_(m.alpha), nodes_(angular_nodes), table_(&ridge_table(m.alpha, m.d)) {
    if (d_ != 3) throw ModelError("a pole-specific ridge rule is only used in d = 3");
    if (nodes_ <= 0) nodes_ = kDefaultAzimuths3;
    prefactor_ = 2 / std::pow(2 * kPi, d_);
    ExponentEvaluator ev(m);
    sets_.push_back(build_d3(ev, normalized(pole)));
}

void RidgeEvaluator::build_d2(const ExponentEvaluator& ev) {
    const auto& mu = ev.model().mu;
    std::vector<double> br;
    for (auto& a : mu.atoms()) br.push_back(wrap_pi(std::atan2(a.dir[1], a.dir[0]) + kPi / 2));
    for (auto& c : mu.caps()) {
        double t = std::atan2(c.center[1], c.center[0]);
        br.push_back(wrap_pi(t + c.radius + kPi / 2));
        br.push_back(wrap_pi(t - c.radius + kPi / 2));
    }
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end(), [](double a, double b) { return b - a < 1e-12; }), br.end());

    std::vector<double> th;
    if (br.empty()) {
        for (int i = 0; i < nodes_; ++i) th.push_back(kPi * i / nodes_);
    } else {
        std::size_t nb = br.size();
        for (std::size_t k = 0; k < nb; ++k) {
            double a = br[k], b = k + 1 < nb ? br[k + 1] : br[0] + kPi;
            int m = std::max(8, static_cast<int>(std::ceil(nodes_ * (b - a) / kPi)));
            for (int j = 0; j < m; ++j) th.push_back(a + (b - a) * graded(static_cast<double>(j) / m));
        }
    }
    const double t0 = th.front();
    NodeSet s;
    s.pole = {0, 0, 1};
    std::vector<double> g;
    for (double t : th) {
        Vec u{std::cos(t), std::sin(t), 0};
        double p = ev.phi(u);
        double sig = std::pow(p, -1 / alpha_);
        s.ux.push_back(sig * u[0]);
        s.uy.push_back(sig * u[1]);
        s.uz.push_back(0);
        g.push_back(sig * sig);
    }
    // closing node: the antipode of the first, same σ
    s.ux.push_back(-s.ux[0]);
    s.uy.push_back(-s.uy[0]);
    s.uz.push_back(0);
    g.push_back(g[0]);
    th.push_back(t0 + kPi);
    for (std::size_t i = 0; i + 1 < th.size(); ++i) s.wt.push_back((th[i + 1] - th[i]) * 0.5 * (g[i] + g[i + 1]));
    nodes_ = static_cast<int>(th.size()) - 1;
    sets_.push_back(std::move(s));
}

RidgeEvaluator::NodeSet RidgeEvaluator::build_d3(const ExponentEvaluator& ev, const Vec& pole) const {
    NodeSet s;
    s.pole = pole;
    Vec e1, e2;
    tangent_frame(pole, e1, e2);
    const int naz = nodes_;
    const int npol = std::max(8, naz / 2);
    const double dpsi = 2 * kPi / naz;
    std::vector<double> c(npol + 1);
    for (int k = 0; k <= npol; ++k) c[k] = std::cos(0.5 * kPi * k / npol);
    c[npol] = 0;
    for (int j = 0; j < naz; ++j) {
        double psi = dpsi * j;
        Vec t = std::cos(psi) * e1 + std::sin(psi) * e2;
        double gprev = 0;
        for (int k = 0; k <= npol; ++k) {
            double sk = std::sqrt(std::max(0.0, 1 - c[k] * c[k]));
            Vec u = c[k] * pole + sk * t;
            double p = ev.phi(u);
            double sig = std::pow(p, -1 / alpha_);
            double g = sig * sig * sig;
            s.ux.push_back(sig * u[0]);
            s.uy.push_back(sig * u[1]);
            s.uz.push_back(sig * u[2]);
            if (k > 0) s.wt.push_back((c[k - 1] - c[k]) * 0.5 * (gprev + g) * dpsi);
            gprev = g;
        }
        s.wt.push_back(0);  // seam to the next meridian
    }
    s.wt.pop_back();
    return s;
}

double RidgeEvaluator::eval(const Vec& x) const {
    if (d_ == 1) {
        double J, K;
        table_->lookup(sigma1_ * x[0], J, K);
        return sigma1_ * J / kPi;
    }
    const NodeSet* s = &sets_[0];
    if (sets_.size() > 1) {
        double best = -1;
        for (auto& c : sets_) {
            double a = std::abs(dot(c.pole, x));
            if (a > best) {
                best = a;
                s = &c;
            }
        }
    }
    const std::size_t n = s->ux.size();
    thread_local Scratch sc;
    sc.resize(n);
    double* w = sc.w.data();
    for (std::size_t i = 0; i < n; ++i) w[i] = s->ux[i] * x[0] + s->uy[i] * x[1] + s->uz[i] * x[2];
    const auto& k = simd::active();
    auto view = table_->view();
    k.ridge_lookup(view, w, n, 1.0, 0.0, w, sc.J.data(), sc.K.data());
    std::fill(sc.acc.begin(), sc.acc.begin() + (n - 1), 0.0);
    k.ridge_panel(n - 1, w, sc.J.data(), sc.K.data(), w + 1, sc.J.data() + 1, sc.K.data() + 1, 1.0, 1e-9,
                  sc.acc.data());
    double sum = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) sum += s->wt[i] * sc.acc[i];
    return prefactor_ * sum;
}

bool DensityGrid::inside(const Vec& x) const {
    for (int k = 0; k < d; ++k)
        if (std::abs(x[k]) > extent) return false;
    return true;
}

double DensityGrid::interpolate(const Vec& x) const {
    std::size_t i0[3] = {0, 0, 0};
    double f[3] = {0, 0, 0};
    for (int k = 0; k < d; ++k) {
        double u = (x[k] + extent) / h;
        u = std::clamp(u, 0.0, static_cast<double>(n - 1));
        std::size_t i = std::min(static_cast<std::size_t>(u), n - 2);
        i0[k] = i;
        f[k] = u - static_cast<double>(i);
    }
    double s = 0;
    int corners = 1 << d;
    for (int c = 0; c < corners; ++c) {
        double w = 1;
        std::size_t ii[3] = {0, 0, 0};
        for (int k = 0; k < d; ++k) {
            int b = (c >> k) & 1;
            ii[k] = i0[k] + b;
            w *= b ? f[k] : 1 - f[k];
        }
        if (w != 0) s += w * at(ii[0], ii[1], ii[2]);
    }
    return s;
}

namespace {

double stable_tail_constant(double alpha) {
    // P(|X| > R) ~ (2/π) Γ(α) sin(πα/2) c R^{-α} for a 1-D symmetric stable law with exponent c|u|^α
    return 2 / kPi * std::tgamma(alpha) * std::sin(kPi * alpha / 2);
}

}  // namespace

DensityGrid build_density_grid(const StableModel& m, double extent, double spacing, DensityOptions opt) {
    m.validate();
    if (m.d > 3) throw ModelError("density grids support d <= 3");
    if (!(extent > 0) || !(spacing > 0) || spacing > extent) throw ModelError("density grid needs 0 < spacing <= extent");
    DensityGrid g;
    g.d = m.d;
    g.alpha = m.alpha;
    g.extent = extent;
    std::size_t half = static_cast<std::size_t>(std::llround(extent / spacing));
    g.h = extent / static_cast<double>(half);
    g.n = 2 * half + 1;
    double total = std::pow(static_cast<double>(g.n), g.d);
    if (total > 4e8) throw ModelError("density grid too large (" + std::to_string(total) + " points)");
    g.values.assign(static_cast<std::size_t>(total), 0.0);
    g.model_checksum = m.checksum();
    auto ridge = std::make_shared<RidgeEvaluator>(m, opt.angular_nodes);
    g.angular_nodes = ridge->nodes();
    const std::size_t n = g.n;

    // Points with a nonnegative last coordinate; the rest follow from p(x) = p(-x).
    std::size_t rows = g.d == 1 ? 1 : g.d == 2 ? half + 1 : (half + 1) * n;
    parallel_for(rows, [&](std::size_t r) {
        std::size_t j = 0, k = 0;
        if (g.d == 2) j = half + r;
        if (g.d == 3) {
            k = half + r / n;
            j = r % n;
        }
        for (std::size_t i = 0; i < n; ++i) {
            Vec x{g.coord(i), g.d >= 2 ? g.coord(j) : 0, g.d == 3 ? g.coord(k) : 0};
            g.values[g.index(i, j, k)] = ridge->eval(x);
        }
    });
    auto mirror = [&](std::size_t i) { return n - 1 - i; };
    if (g.d == 1) {
        for (std::size_t i = 0; i < half; ++i) g.values[i] = g.values[mirror(i)];
    } else if (g.d == 2) {
        for (std::size_t j = 0; j < half; ++j)
            for (std::size_t i = 0; i < n; ++i) g.values[g.index(i, j)] = g.values[g.index(mirror(i), mirror(j))];
    } else {
        for (std::size_t k = 0; k < half; ++k)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t i = 0; i < n; ++i)
                    g.values[g.index(i, j, k)] = g.values[g.index(mirror(i), mirror(j), mirror(k))];
    }
    // The k = half plane was filled for all j; symmetrize it exactly.
    if (g.d == 2) {
        for (std::size_t i = 0; i < half; ++i) g.values[g.index(i, half)] = g.values[g.index(mirror(i), half)];
    } else if (g.d == 3) {
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i)
                if (j < half || (j == half && i < half))
                    g.values[g.index(i, j, half)] = g.values[g.index(mirror(i), mirror(j), half)];
    }

    if (opt.check_positive) {
        for (std::size_t q = 0; q < g.values.size(); ++q) {
            if (!(g.values[q] > 0)) {
                std::size_t i = q % n, j = (q / n) % n, k = q / (n * n);
                std::ostringstream os;
                os << "density not certified positive at x = (" << g.coord(i);
                if (g.d >= 2) os << ", " << g.coord(j);
                if (g.d == 3) os << ", " << g.coord(k);
                os << "): value " << g.values[q] << "; increase angular nodes or reduce the extent";
                throw NumericalError(os.str());
            }
        }
    }

    double hd = std::pow(g.h, g.d), sum = 0;
    for (double v : g.values) sum += v;
    g.riemann_mass = sum * hd;
    ExponentEvaluator ev(m);
    double tail = 0;
    for (int k = 0; k < g.d; ++k) {
        Vec e{0, 0, 0};
        e[k] = 1;
        tail += stable_tail_constant(m.alpha) * ev.phi(e) * std::pow(extent, -m.alpha);
    }
    g.tail_mass_bound = std::min(1.0, tail);

    // Inversion error: compare against a rule with half the angular nodes at a few probes.
    RidgeEvaluator coarse(m, std::max(8, g.d == 2 ? g.angular_nodes / 2 : ridge->nodes() / 2));
    double p0 = ridge->eval({0, 0, 0}), err = 0;
    std::vector<Vec> probes{{0, 0, 0}, {extent / 2, 0, 0}, {extent, 0, 0}};
    if (g.d >= 2) {
        probes.push_back({0, extent / 2, 0});
        probes.push_back({extent / 3, extent / 3, 0});
        probes.push_back({extent / 8, -extent / 5, 0});
    }
    if (g.d == 3) {
        probes.push_back({extent / 3, extent / 3, extent / 3});
        probes.push_back({0.1, -0.7, 1.3});
    }
    for (auto& x : probes) err = std::max(err, std::abs(ridge->eval(x) - coarse.eval(x)));
    g.inversion_error = err / p0;
    g.ridge = ridge;
    return g;
}

DensityGrid cached_density_grid(const StableModel& m, double extent, double spacing, DensityOptions opt) {
    const char* dir = std::getenv("ANISOSTABLE_CACHE");
    if (!dir || !*dir) return build_density_grid(m, extent, spacing, opt);
    std::ostringstream name;
    name << std::hex << m.checksum() << std::dec << "_d" << m.d << "_R" << extent << "_h" << spacing << "_n"
         << opt.angular_nodes << ".grid";
    auto path = (std::filesystem::path(dir) / name.str()).string();
    DensityGrid g;
    std::size_t half = static_cast<std::size_t>(std::llround(extent / spacing));
    double h = extent / static_cast<double>(half);
    if (read_density_cache(path, m.checksum(), m.alpha, m.d, h, extent, opt.angular_nodes, g)) {
        g.ridge = std::make_shared<RidgeEvaluator>(m, opt.angular_nodes);
        return g;
    }
    g = build_density_grid(m, extent, spacing, opt);
    std::filesystem::create_directories(dir);
    write_density_cache(g, path);
    return g;
}

DensityValue density_at(double t, const Vec& x, const DensityGrid& g, OutOfRange mode) {
    if (!(t > 0)) throw ModelError("density_at needs t > 0");
    double s = std::pow(t, -1 / g.alpha);
    Vec y = s * x;
    double scale = std::pow(s, g.d);
    if (g.inside(y)) return {scale * g.interpolate(y), false};
    if (mode == OutOfRange::Error) throw NumericalError("density_at: point outside the grid extent");
    double inf = 0;
    for (int k = 0; k < g.d; ++k) inf = std::max(inf, std::abs(y[k]));
    Vec yb = (g.extent / inf) * y;
    double v = g.interpolate(yb) * std::pow((1 + norm(yb)) / (1 + norm(y)), 1 + g.alpha);
    return {scale * v, true};
}

DecayReport check_decay_bound(const DensityGrid& g, double gamma, double tol) {
    DecayReport r{gamma, 0, {0, 0, 0}, {}, 0, true};
    // dyadic shells [0,1), [1,2), [2,4), ... inside the inscribed ball
    int nshell = 1;
    while (std::ldexp(1.0, nshell) <= g.extent) ++nshell;
    std::vector<double> smax(nshell, 0.0);
    const std::size_t n = g.n;
    std::size_t nj = g.d >= 2 ? n : 1, nk = g.d == 3 ? n : 1;
    for (std::size_t k = 0; k < nk; ++k)
        for (std::size_t j = 0; j < nj; ++j)
            for (std::size_t i = 0; i < n; ++i) {
                Vec y{g.coord(i), g.d >= 2 ? g.coord(j) : 0, g.d == 3 ? g.coord(k) : 0};
                double ry = norm(y);
                double q = g.at(i, j, k) * std::pow(1 + ry, gamma + g.alpha);
                if (q > r.sup) {
                    r.sup = q;
                    r.argsup = y;
                }
                if (ry >= g.extent) continue;
                int sh = ry < 1 ? 0 : 1 + static_cast<int>(std::floor(std::log2(ry)));
                if (sh < nshell) smax[sh] = std::max(smax[sh], q);
            }
    std::vector<double> lx, ly;
    for (int s = 0; s < nshell; ++s) {
        double lo = s == 0 ? 0 : std::ldexp(1.0, s - 1), hi = std::min(std::ldexp(1.0, s), g.extent);
        r.shells.push_back({hi, smax[s]});
        if (s >= 1 && smax[s] > 0) {
            lx.push_back(std::log(0.5 * (lo + hi)));
            ly.push_back(std::log(smax[s]));
        }
    }
    // slope over the outer shells (those with radius >= 1)
    if (lx.size() >= 2) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i];
            my += ly[i];
        }
        mx /= lx.size();
        my /= ly.size();
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxy += (lx[i] - mx) * (ly[i] - my);
            sxx += (lx[i] - mx) * (lx[i] - mx);
        }
        r.slope = sxy / sxx;
    }
    r.bounded = r.slope <= tol;
    return r;
}

double lattice_characteristic(const DensityGrid& g, const Vec& u) {
    const std::size_t n = g.n;
    std::size_t nj = g.d >= 2 ? n : 1, nk = g.d == 3 ? n : 1;
    double s = 0;
    for (std::size_t k = 0; k < nk; ++k)
        for (std::size_t j = 0; j < nj; ++j) {
            double b = (g.d >= 2 ? u[1] * g.coord(j) : 0) + (g.d == 3 ? u[2] * g.coord(k) : 0);
            for (std::size_t i = 0; i < n; ++i) s += std::cos(u[0] * g.coord(i) + b) * g.at(i, j, k);
        }
    return s * std::pow(g.h, g.d);
}

void write_density_csv(const DensityGrid& g, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw NumericalError("cannot write " + path);
    const char* names[3] = {"x1", "x2", "x3"};
    for (int k = 0; k < g.d; ++k) f << names[k] << ',';
    f << "p\n";
    f.precision(12);
    const std::size_t n = g.n;
    std::size_t nj = g.d >= 2 ? n : 1, nk = g.d == 3 ? n : 1;
    for (std::size_t k = 0; k < nk; ++k)
        for (std::size_t j = 0; j < nj; ++j)
            for (std::size_t i = 0; i < n; ++i) {
                f << g.coord(i) << ',';
                if (g.d >= 2) f << g.coord(j) << ',';
                if (g.d == 3) f << g.coord(k) << ',';
                f << g.at(i, j, k) << '\n';
            }
}

namespace {

struct CacheHeader {
    char magic[8];
    std::int32_t version, d, nodes, pad;
    double alpha, h, extent;
    std::uint64_t checksum, n;
    double inversion_error, riemann_mass, tail_mass_bound;
};

constexpr char kMagic[8] = {'A', 'S', 'D', 'G', 'R', 'I', 'D', '1'};

}  // namespace

void write_density_cache(const DensityGrid& g, const std::string& path) {
    CacheHeader hd{};
    std::memcpy(hd.magic, kMagic, 8);
    hd.version = 1;
    hd.d = g.d;
    hd.nodes = g.angular_nodes;
    hd.alpha = g.alpha;
    hd.h = g.h;
    hd.extent = g.extent;
    hd.checksum = g.model_checksum;
    hd.n = g.n;
    hd.inversion_error = g.inversion_error;
    hd.riemann_mass = g.riemann_mass;
    hd.tail_mass_bound = g.tail_mass_bound;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw NumericalError("cannot write " + path);
    f.write(reinterpret_cast<const char*>(&hd), sizeof hd);
    f.write(reinterpret_cast<const char*>(g.values.data()), static_cast<std::streamsize>(g.values.size() * sizeof(double)));
}

bool read_density_cache(const std::string& path, std::uint64_t checksum, double alpha, int d, double h, double extent,
                        int nodes, DensityGrid& out) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return false;
    CacheHeader hd{};
    if (!f.read(reinterpret_cast<char*>(&hd), sizeof hd)) return false;
    if (std::memcmp(hd.magic, kMagic, 8) != 0 || hd.version != 1) return false;
    // nodes == 0 in the request means "default", which the header records resolved
    if (hd.checksum != checksum || hd.alpha != alpha || hd.d != d || std::abs(hd.h - h) > 1e-15 ||
        hd.extent != extent || (nodes > 0 && hd.nodes != nodes))
        return false;
    DensityGrid g;
    g.d = hd.d;
    g.alpha = hd.alpha;
    g.h = hd.h;
    g.extent = hd.extent;
    g.n = hd.n;
    g.model_checksum = hd.checksum;
    g.angular_nodes = hd.nodes;
    g.inversion_error = hd.inversion_error;
    g.riemann_mass = hd.riemann_mass;
    g.tail_mass_bound = hd.tail_mass_bound;
    g.values.resize(static_cast<std::size_t>(std::pow(static_cast<double>(g.n), g.d)));
    if (!f.read(reinterpret_cast<char*>(g.values.data()), static_cast<std::streamsize>(g.values.size() * sizeof(double))))
        return false;
    out = std::move(g);
    return true;
}

}  // namespace anisostable
