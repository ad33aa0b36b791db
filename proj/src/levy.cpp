#include "anisostable/levy.hpp"

#include "anisostable/angular.hpp"

#include <boost/math/quadrature/gauss.hpp>

namespace anisostable {

namespace {

using G20 = boost::math::quadrature::gauss<double, 20>;

// Chord {s > 0 : |sθ - y| < ρ} for θ at angle φ from y, |y| = Y > ρ.
bool chord(double Y, double phi, double rho, double& lo, double& hi) {
    double h = Y * std::sin(phi);
    double disc = rho * rho - h * h;
    if (disc <= 0) return false;
    double r = std::sqrt(disc), s0 = Y * std::cos(phi);
    hi = s0 + r;
    // s0 - r computed without cancellation: (s0² - r²)/(s0 + r) = (Y² - ρ²)/(s0 + r).
    lo = (Y * Y - rho * rho) / hi;
    return lo > 0;
}

// ∫_lo^hi s^{-1-α} ds = (lo^{-α} - hi^{-α})/α, written to keep precision when lo ≈ hi.
double radial_mass(double lo, double hi, double alpha) {
    return -std::pow(lo, -alpha) * std::expm1(-alpha * std::log1p((hi - lo) / lo)) / alpha;
}

}  // namespace

double LevyMeasureView::nu_ball_mass(const Vec& x, double rho, double rel_tol) const {
    if (!(rho > 0)) return 0;
    double Y = norm(x);
    if (rho >= Y) return kInf;
    const double a = m_->alpha;
    AngularProfile prof(m_->mu, x);
    double phimax = std::asin(rho / Y);
    return prof.integrate([&](double phi) {
        double lo, hi;
        if (!chord(Y, phi, rho, lo, hi)) return 0.0;
        return radial_mass(lo, hi, a);
    }, 0.0, phimax, rel_tol);
}

double LevyMeasureView::riesz_ray(double Y, double phi, double rho) const {
    const double a = m_->alpha;
    const double kappa = a - m_->d;
    double lo, hi;
    if (!chord(Y, phi, rho, lo, hi)) return 0.0;
    if (kappa == 0) return radial_mass(lo, hi, a);
    double h = Y * std::sin(phi);
    if (kappa < -1 && h < 1e-8 * rho) {
        // Leading term of the sinh form below: ∫ cosh^{-q} over the line; the
        // neglected pieces are O((h/ρ)^q) relative.
        double q = -(kappa + 1);
        double line = std::sqrt(kPi) * std::exp(std::lgamma(q / 2) - std::lgamma((q + 1) / 2));
        return std::pow(h, kappa + 1) * std::pow(Y * std::cos(phi), -1 - a) * line;
    }
    if (h < 1e-13 * Y) {
        // The ray runs through y: ∫ |s - Y|^κ s^{-1-α} ds, finite only for κ > -1.
        if (kappa <= -1) return kInf;
        // u = |s - Y|^{κ+1} removes the endpoint singularity.
        double p = 1 / (kappa + 1);
        double umax = std::pow(rho, kappa + 1);
        auto side = [&](double sign) {
            return quad::gk([&](double u) { return p * std::pow(Y + sign * std::pow(u, p), -1 - a); }, 0.0, umax);
        };
        return side(1) + side(-1);
    }
    // s = s0 + h sinh t turns |y - sθ| into h cosh t.
    double s0 = Y * std::cos(phi);
    double T = std::asinh(std::sqrt(rho * rho - h * h) / h);
    auto f = [&](double t) {
        double s = s0 + h * std::sinh(t);
        return std::exp((kappa + 1) * std::log(h * std::cosh(t))) * std::pow(s, -1 - a);
    };
    // smooth in t; fixed Gauss panels of width <= 1.5
    int panels = std::max(1, static_cast<int>(std::ceil(2 * T / 1.5)));
    double w = 2 * T / panels, sum = 0;
    for (int k = 0; k < panels; ++k) sum += G20::integrate(f, -T + k * w, -T + (k + 1) * w);
    return sum;
}

double LevyMeasureView::riesz_ball_integral(const Vec& y, double rho, double rel_tol) const {
    if (!(rho > 0)) return 0;
    double Y = norm(y);
    if (!(Y > 0)) throw ModelError("riesz_ball_integral needs y != 0");
    if (rho >= Y) return kInf;
    AngularProfile prof(m_->mu, y);
    double phimax = std::asin(rho / Y);
    return prof.integrate([&](double phi) { return riesz_ray(Y, phi, rho); }, 0.0, phimax, rel_tol);
}

}  // namespace anisostable
