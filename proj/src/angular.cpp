#include "anisostable/angular.hpp"

#include <algorithm>

namespace anisostable {

AngularProfile::AngularProfile(const SpectralMeasure& mu, const Vec& axis) : d_(mu.dim()) {
    Vec w = normalized(axis);
    uniform_ = mu.uniform_mass();
    for (auto& a : mu.atoms()) atoms_.push_back({angle_between(w, a.dir), a.mass});
    for (auto& c : mu.caps()) {
        double beta = angle_between(w, c.center);
        caps_.push_back({beta, c.radius, c.density});
        for (double b : {beta - c.radius, beta + c.radius, c.radius - beta, 2 * kPi - beta - c.radius})
            if (b > 0 && b < kPi) breaks_.push_back(b);
    }
    std::sort(breaks_.begin(), breaks_.end());
    has_continuous_ = uniform_ > 0 || !caps_.empty();
}

double AngularProfile::density(double phi) const {
    double m = 0;
    double s = std::sin(phi), c = std::cos(phi);
    if (uniform_ > 0) m += d_ == 2 ? uniform_ / kPi : 0.5 * uniform_ * s;
    for (auto& cap : caps_) {
        if (d_ == 2) {
            // The two unit vectors at angle φ from the axis sit at |φ-β| and
            // min(φ+β, 2π-φ-β) from the cap center.
            int n = 0;
            if (std::abs(phi - cap.beta) <= cap.radius) ++n;
            if (std::min(phi + cap.beta, 2 * kPi - phi - cap.beta) <= cap.radius) ++n;
            m += n * cap.density;
        } else {
            // Azimuthal length of the circle {angle = φ} inside the cap, times sin φ.
            double sb = std::sin(cap.beta), cb = std::cos(cap.beta);
            double len;
            if (s < 1e-14) {
                // the circle shrinks to the axis or its antipode
                double to_center = phi < 1 ? cap.beta : kPi - cap.beta;
                len = to_center < cap.radius ? 2 * kPi : 0;
            } else if (sb < 1e-14) {
                len = std::abs(phi - cap.beta) <= cap.radius ? 2 * kPi : 0;
            } else {
                double q = (std::cos(cap.radius) - c * cb) / (s * sb);
                len = q >= 1 ? 0 : q <= -1 ? 2 * kPi : 2 * std::acos(q);
            }
            m += cap.density * len * s;
        }
    }
    return m;
}

}  // namespace anisostable
