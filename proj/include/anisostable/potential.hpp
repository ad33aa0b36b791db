#pragma once

#include <string>
#include <vector>

#include "anisostable/density.hpp"
#include "anisostable/levy.hpp"

namespace anisostable {

// V on the unit sphere, V(θ) = α ∫_0^∞ s^{d-α-1} p_1(sθ) ds.
// V(x) = |x|^{α-d} V(x/|x|) gives the rest of the space.
struct PotentialProfile {
    int d = 2;
    double alpha = 1;
    std::vector<Vec> dirs;
    std::vector<double> V;          // kInf marks a divergent direction
    std::vector<double> tail;       // extrapolated contribution beyond the truncation radius
    std::vector<double> inc_ratio;  // last increment ratio over a doubling of the truncation radius
    std::vector<double> growth;     // largest truncated-value growth factor over the last doublings
    std::vector<char> divergent;
    double smax = 0;                // truncation radius of the s-integral
    bool uniform_circle = false;    // d = 2 directions at equally spaced angles from 0

    double min_finite() const;
    std::size_t divergent_count() const;
    // Piecewise linear in angle (d = 2) or inverse-distance weighted (d = 3).
    double at(const Vec& theta) const;
};

struct PotentialOptions {
    int angular_nodes = 0;
    int doublings = 8;  // dyadic shells [L 2^k, L 2^{k+1}] beyond the first, L = min spatial scale
};

// Equally spaced angles (d = 2, n points from angle 0) or a Fibonacci lattice
// enriched with the measure's feature directions (d = 3, n points).
std::vector<Vec> profile_directions(const StableModel& m, int n);

PotentialProfile potential_profile(const StableModel& m, const std::vector<Vec>& dirs, PotentialOptions opt = {});
PotentialProfile potential_profile(const StableModel& m, const DensityGrid& grid, const std::vector<Vec>& dirs,
                                   PotentialOptions opt = {});

// Potential measure of B(x, ρ): ∫ V(θ) (s_+^α - s_-^α)/α dθ over the directions
// meeting the ball.
double vmass_ball(const Vec& x, double rho, const PotentialProfile& prof);

struct ContinuityReport {
    double gamma;
    double threshold;        // d - 2α
    bool gamma_above;        // γ > d - 2α
    double modulus_coarse, modulus_fine, modulus_ratio;
    std::size_t divergent;   // directions marked +inf in the fine profile
    double max_growth;       // growth factor per doubling at divergent directions
    double min_V;
    std::string verdict;     // "continuous", "unbounded" or "inconclusive"
};

// coarse and fine must cover the sphere with the fine spacing half the coarse one.
ContinuityReport check_v_continuity(const PotentialProfile& coarse, const PotentialProfile& fine, double gamma);

struct NuVBoundReport {
    std::vector<double> radii;
    std::vector<double> sup_ratio;
    std::vector<Vec> witness;
    bool bounded;
};

// sup over |x| = 1 scan points of ν(B(x, r/12)) / (r^{-2α} 𝕍(B(x, r/2))), r = 1/2 .. 1/16.
NuVBoundReport check_nu_v_bound(const PotentialProfile& prof, const LevyMeasureView& levy, int scan_points = 64);

void write_profile_csv(const PotentialProfile& p, const std::string& path);

}  // namespace anisostable
