#include "anisostable/ridge.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <map>
#include <memory>
#include <mutex>

#include "anisostable/quad.hpp"
#include "anisostable/types.hpp"

namespace anisostable {

namespace {

constexpr double kTableWmax = 1e4;
using G30 = boost::math::quadrature::gauss<double, 30>;
constexpr double kDirectBelow = 0.1;  // Ooura's rule loses accuracy as w -> 0

}  // namespace

RidgeTable::RidgeTable(double alpha, int d) : alpha_(alpha), d_(d) {
    if (d < 1 || d > 3) throw ModelError("ridge table needs d in {1,2,3}");
    // r^{d-1} e^{-r^α} is negligible beyond rcut
    rcut_ = std::pow(50.0, 1 / alpha);
    double j0 = std::tgamma(d / alpha) / alpha;
    while (std::pow(rcut_, d - 1) * std::exp(-std::pow(rcut_, alpha)) > 1e-18 * j0) rcut_ *= 1.2;
    // J varies on the scale sqrt(J(0)/|J''(0)|) near the origin
    double s0 = std::exp(0.5 * (std::lgamma(d / alpha) - std::lgamma((d + 2) / alpha)));
    scale_ = 0.05 * s0;
    dz_ = 1.0 / 64;
    std::size_t n = static_cast<std::size_t>(std::ceil(std::asinh(kTableWmax / scale_) / dz_)) + 4;
    J_.resize(n);
    K_.resize(n);
    boost::math::quadrature::ooura_fourier_cos<double> oc(1e-13, 8);
    boost::math::quadrature::ooura_fourier_sin<double> os(1e-13, 8);
    auto fj = [&](double r) { return std::pow(r, d - 1) * std::exp(-std::pow(r, alpha)); };
    auto fk = [&](double r) { return std::pow(r, d - 2) * std::exp(-std::pow(r, alpha)); };
    for (std::size_t k = 0; k < n; ++k) {
        double w = scale_ * std::sinh((static_cast<double>(k) - 1) * dz_);
        double aw = std::abs(w);
        if (aw < kDirectBelow) {
            J_[k] = J_direct(aw);
            K_[k] = d >= 2 ? K_direct(aw) : 0;
        } else {
            J_[k] = oc.integrate(fj, aw).first;
            K_[k] = d >= 2 ? os.integrate(fk, aw).first : 0;
        }
        if (w < 0) K_[k] = -K_[k];
    }
    wmax_ = scale_ * std::sinh((static_cast<double>(n) - 4) * dz_);
}

// Fixed 30-point Gauss rules between half-period nodes of the trigonometric factor.
double RidgeTable::J_direct(double w) const {
    w = std::abs(w);
    const double a = alpha_;
    const int d = d_;
    auto f = [&](double r) { return std::pow(r, d - 1) * std::cos(r * w) * std::exp(-std::pow(r, a)); };
    double step = w > 0 ? std::min(kPi / w, 1.0) : 1.0;
    double first = std::min(step, 1.0);
    double s = quad::ts(f, 0.0, first, 1e-13);
    double lo = first;
    while (lo < rcut_) {
        double hi = std::min(rcut_, w > 0 ? lo + std::min(kPi / w, std::max(1.0, lo)) : 2 * lo);
        s += G30::integrate(f, lo, hi);
        lo = hi;
    }
    return s;
}

double RidgeTable::K_direct(double w) const {
    if (d_ < 2) throw ModelError("K is only tabulated for d >= 2");
    double sgn = w < 0 ? -1 : 1;
    w = std::abs(w);
    if (w == 0) return 0;
    const double a = alpha_;
    const int d = d_;
    auto f = [&](double r) { return std::pow(r, d - 2) * std::sin(r * w) * std::exp(-std::pow(r, a)); };
    double first = std::min(kPi / w, 1.0);
    double s = quad::ts(f, 0.0, first, 1e-13);
    double lo = first;
    while (lo < rcut_) {
        double hi = std::min(rcut_, lo + std::min(kPi / w, std::max(1.0, lo)));
        s += G30::integrate(f, lo, hi);
        lo = hi;
    }
    return sgn * s;
}

double RidgeTable::J_asymptotic(double w) const {
    w = std::abs(w);
    double s = 0, prev = kInf, fact = 1;
    for (int n = 0; n < 60; ++n) {
        if (n > 0) fact *= n;
        double p = d_ + n * alpha_;
        double t = (n % 2 ? -1 : 1) / fact * std::tgamma(p) * std::cos(kPi * p / 2) * std::pow(w, -p);
        if (std::abs(t) > prev && n > 2) break;
        s += t;
        if (t != 0) prev = std::abs(t);
        if (std::abs(t) < 1e-17 * std::abs(s)) break;
    }
    return s;
}

double RidgeTable::K_asymptotic(double w) const {
    double sgn = w < 0 ? -1 : 1;
    w = std::abs(w);
    double s = 0, prev = kInf, fact = 1;
    for (int n = 0; n < 60; ++n) {
        if (n > 0) fact *= n;
        double p = d_ - 1 + n * alpha_;
        if (p <= 0) continue;
        double t = (n % 2 ? -1 : 1) / fact * std::tgamma(p) * std::sin(kPi * p / 2) * std::pow(w, -p);
        if (std::abs(t) > prev && n > 2) break;
        s += t;
        if (t != 0) prev = std::abs(t);
        if (std::abs(t) < 1e-17 * std::abs(s)) break;
    }
    return sgn * s;
}

void RidgeTable::tail(const void* ctx, double w, double* J, double* K) {
    auto* self = static_cast<const RidgeTable*>(ctx);
    *J = self->J_asymptotic(w);
    *K = self->d_ >= 2 ? self->K_asymptotic(w) : 0;
}

simd::RidgeTableView RidgeTable::view() const {
    return {J_.data(), K_.data(), J_.size(), scale_, 1 / dz_, wmax_, &RidgeTable::tail, this};
}

void RidgeTable::lookup(double w, double& J, double& K) const {
    double x = 1;
    simd::scalar_kernels().ridge_lookup(view(), &x, 1, w, 0, &x, &J, &K);
}

const RidgeTable& ridge_table(double alpha, int d) {
    static std::mutex mu;
    static std::map<std::pair<double, int>, std::unique_ptr<RidgeTable>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{alpha, d}];
    if (!slot) slot = std::make_unique<RidgeTable>(alpha, d);
    return *slot;
}

}  // namespace anisostable
