#pragma once

#include <vector>

#include "anisostable/measure.hpp"
#include "anisostable/quad.hpp"

namespace anisostable {

// Push-forward of μ under θ ↦ angle(θ, axis), as atoms plus a piecewise smooth
// density on [0, π]. Every μ-integral of a function of that angle reduces to
// one 1-D integral against this profile.
class AngularProfile {
public:
    AngularProfile(const SpectralMeasure& mu, const Vec& axis);

    const std::vector<std::pair<double, double>>& atoms() const { return atoms_; }
    const std::vector<double>& breaks() const { return breaks_; }
    double density(double phi) const;

    // ∫_{[lo,hi]} f(φ) μ_axis(dφ). Atoms on the interval are summed exactly; the
    // continuous part uses tanh-sinh between breakpoints. f may return +inf.
    template <class F>
    double integrate(F f, double lo, double hi, double rel_tol = 1e-8) const {
        double sum = 0;
        for (auto& [phi, m] : atoms_)
            if (phi >= lo && phi <= hi) {
                double v = f(phi);
                if (v != 0) sum += m * v;
            }
        if (!has_continuous_) return sum;
        double a = lo;
        auto piece = [&](double x0, double x1) {
            if (x1 - x0 < 1e-15) return 0.0;
            double mid = 0.5 * (x0 + x1);
            if (density(mid) == 0 && density(x0 + 0.25 * (x1 - x0)) == 0) return 0.0;
            // An infinite value at a single angle is a null set for the density part
            // (tanh-sinh probes points within 1e-300 of the ends).
            return quad::ts([&](double p) {
                double dm = density(p);
                if (dm == 0) return 0.0;
                double v = f(p);
                return std::isfinite(v) ? v * dm : 0.0;
            }, x0, x1, rel_tol);
        };
        for (double b : breaks_) {
            if (b <= a) continue;
            if (b >= hi) break;
            sum += piece(a, b);
            a = b;
        }
        sum += piece(a, hi);
        return sum;
    }

private:
    struct CapView {
        double beta;  // angle between axis and cap center
        double radius;
        double density;
    };
    int d_;
    double uniform_;
    bool has_continuous_;
    std::vector<std::pair<double, double>> atoms_;
    std::vector<CapView> caps_;
    std::vector<double> breaks_;
};

}  // namespace anisostable
