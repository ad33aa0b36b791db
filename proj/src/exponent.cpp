#include "anisostable/exponent.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include "anisostable/angular.hpp"
#include "anisostable/simd.hpp"

namespace anisostable {

double uniform_abs_moment(int d, double alpha) {
    return std::exp(std::lgamma(d / 2.0) + std::lgamma((alpha + 1) / 2) - 0.5 * std::log(kPi) -
                    std::lgamma((d + alpha) / 2));
}

std::vector<Vec> sphere_grid(int d, int n, bool half) {
    std::vector<Vec> out;
    if (d == 1) {
        out.push_back({1, 0, 0});
        if (!half) out.push_back({-1, 0, 0});
        return out;
    }
    if (d == 2) {
        double span = half ? kPi : 2 * kPi;
        for (int i = 0; i < n; ++i) {
            double t = span * i / n;
            out.push_back({std::cos(t), std::sin(t), 0});
        }
        return out;
    }
    const double golden = kPi * (3 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        double z = 1 - (2 * i + 1.0) / n;
        if (half && z < 0) break;
        double r = std::sqrt(std::max(0.0, 1 - z * z));
        out.push_back({r * std::cos(golden * i), r * std::sin(golden * i), z});
    }
    return out;
}

ExponentEvaluator::ExponentEvaluator(const StableModel& m) : m_(&m), c_(m.phi_constant()) {
    const auto& mu = m.mu;
    uniform_factor_ = mu.uniform_mass() * uniform_abs_moment(m.d, m.alpha);
    caps_ = SpectralMeasure(m.d);
    for (std::size_t i = 0; i < mu.caps().size(); i += 2)
        caps_.add_cap(mu.caps()[i].center, mu.caps()[i].radius, mu.caps()[i].density);
    auto push = [&](const Vec& v, double w) {
        nx_.push_back(v[0]);
        ny_.push_back(v[1]);
        nz_.push_back(v[2]);
        nw_.push_back(w);
    };
    for (auto& a : mu.atoms()) push(a.dir, a.mass);
    using G8 = boost::math::quadrature::gauss<double, 8>;
    // G8 stores nonnegative abscissae; expand to the full symmetric rule.
    std::vector<double> xs, ws;
    for (std::size_t i = 0; i < G8::abscissa().size(); ++i) {
        double x = G8::abscissa()[i], w = G8::weights()[i];
        xs.push_back(x);
        ws.push_back(w);
        if (x != 0) {
            xs.push_back(-x);
            ws.push_back(w);
        }
    }
    auto rule = [&](double a, double b, int panels, auto&& emit) {
        double h = (b - a) / panels;
        for (int p = 0; p < panels; ++p)
            for (std::size_t i = 0; i < xs.size(); ++i) emit(a + h * (p + 0.5 * (xs[i] + 1)), 0.5 * h * ws[i]);
    };
    for (auto& c : mu.caps()) {
        if (m.d == 2) {
            double t0 = std::atan2(c.center[1], c.center[0]);
            rule(-c.radius, c.radius, 8, [&](double t, double w) {
                push({std::cos(t0 + t), std::sin(t0 + t), 0}, w * c.density);
            });
        } else {
            Vec e1, e2;
            tangent_frame(c.center, e1, e2);
            const int nazi = 32;
            rule(std::cos(c.radius), 1.0, 2, [&](double ct, double w) {
                double st = std::sqrt(std::max(0.0, 1 - ct * ct));
                for (int k = 0; k < nazi; ++k) {
                    double psi = 2 * kPi * (k + 0.5) / nazi;
                    push(ct * c.center + st * (std::cos(psi) * e1 + std::sin(psi) * e2),
                         w * c.density * 2 * kPi / nazi);
                }
            });
        }
    }
}

double ExponentEvaluator::phi(const Vec& u) const {
    double r = norm(u);
    if (r == 0) return 0;
    const auto& mu = m_->mu;
    const double a = m_->alpha;
    double s = 0;
    for (auto& at : mu.atoms()) {
        double p = std::abs(dot(u, at.dir));
        if (p > 0) s += at.mass * std::pow(p, a);
    }
    double ra = std::pow(r, a);
    s += uniform_factor_ * ra;
    if (!mu.caps().empty()) {
        AngularProfile prof(caps_, u);
        auto f = [a](double phi) { return std::pow(std::abs(std::cos(phi)), a); };
        s += ra * (prof.integrate(f, 0, kPi / 2, 1e-11) + prof.integrate(f, kPi / 2, kPi, 1e-11));
    }
    return c_ * s;
}

double ExponentEvaluator::phi_fast(const Vec& u) const {
    double r = norm(u);
    if (r == 0) return 0;
    double s = simd::active().abs_dot_pow_sum(nx_.data(), ny_.data(), nz_.data(), nw_.data(), nw_.size(), u[0], u[1],
                                              u[2], m_->alpha);
    return c_ * (s + uniform_factor_ * std::pow(r, m_->alpha));
}

ExponentEvaluator::Range ExponentEvaluator::sphere_range(int n) const {
    int d = m_->d;
    if (n <= 0) n = d == 2 ? 4096 : 20000;
    auto grid = sphere_grid(d, n, true);
    // Feature normals are where Φ has kinks and often its extremes.
    for (auto& f : m_->mu.feature_directions()) {
        grid.push_back(f);
        if (d == 2) grid.push_back({-f[1], f[0], 0});
    }
    Range r{kInf, 0, {}, {}};
    for (auto& v : grid) {
        double p = phi_fast(v);
        if (p < r.min) {
            r.min = p;
            r.argmin = v;
        }
        if (p > r.max) {
            r.max = p;
            r.argmax = v;
        }
    }
    r.min = phi(r.argmin);
    r.max = phi(r.argmax);
    return r;
}

}  // namespace anisostable
