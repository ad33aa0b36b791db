#pragma once

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace anisostable::quad {

// Adaptive Gauss–Kronrod (15 points); smooth integrands on finite intervals.
template <class F>
double gk(F f, double a, double b, double rel_tol = 1e-9, unsigned depth = 12) {
    if (!(b > a)) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, depth, rel_tol);
}

// tanh-sinh; tolerates integrable endpoint singularities.
template <class F>
double ts(F f, double a, double b, double rel_tol = 1e-8) {
    if (!(b > a)) return 0.0;
    if (b - a < 1e-12 * std::max(1.0, std::abs(a))) return (b - a) * f(0.5 * (a + b));
    thread_local boost::math::quadrature::tanh_sinh<double> integrator(12);
    if (a == 0) return integrator.integrate(f, a, b, rel_tol);
    // shifted so that abscissae near a do not round onto a
    return integrator.integrate([&](double u) { return f(a + u); }, 0.0, b - a, rel_tol);
}

}  // namespace anisostable::quad
