#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "anisostable/levy.hpp"

namespace anisostable {

// x ∈ supp μ, decided from the generators.
bool in_support(const SpectralMeasure& mu, const Vec& x, double slack = 1e-12);

struct GammaEstimate {
    double gamma;
    double fit_error;                  // standard error of the slope
    std::vector<double> radii;
    std::vector<double> sup_mass;      // sup_x ν(B(x, r)) over the scan grid
    std::vector<Vec> argsup;
    double min_pointwise_slope;        // smallest per-x slope, for reference
};

// Slope of log sup_x ν(B(x,r)) against log r, r = 2^{-3} .. 2^{-9}, x on the
// unit sphere inside the support (grid enriched with atoms, cap centres, cap edges).
GammaEstimate gamma_estimate(const LevyMeasureView& levy, int grid_points = 0);

struct StrictGamma {
    double gamma;
    double lower, upper;   // extremes of ν(B(x,r)) / r^γ over support points and radii
    double constant;       // upper / lower
    Vec worst_low, worst_high;
    bool strict;
};

StrictGamma strict_gamma_check(const LevyMeasureView& levy, double gamma, int grid_points = 0,
                               double max_constant = 50);

struct RkWitness {
    Vec y;
    double ratio;
    std::string tag;  // "scan" or "feature n=<k>"
};

struct RkScan {
    std::vector<double> radii;
    std::vector<double> sup_by_radius;
    double sup;
    std::vector<RkWitness> witnesses;       // largest ratios
    std::vector<RkWitness> feature_sequence;  // shrinking-ball centres, in order of n
    bool infinite;
    std::string verdict;  // "holds", "fails", "inconclusive"
};

// R(y) = ∫_{B(y,1/2)} |y-v|^{α-d} ν(dv) / ν(B(y,1/2)) over |y| ∈ radii and a
// direction grid refined five-fold within two angular radii of every feature.
RkScan rk_scan(const LevyMeasureView& levy, std::vector<double> radii = {1, 2, 4, 8}, int grid_points = 0);

// Ratio at the shrinking-ball witnesses y_n = 2^{n-1} c_n (c_n the centre of
// the n-th cap): the ball B(y_n, 1/2) has angular size ~ 2^{-n}, the scale of
// the neighbourhoods separating the caps.
std::vector<RkWitness> shrinking_ball_witnesses(const LevyMeasureView& levy);

struct SpectralCheck {
    std::string criterion;  // "power-kernel", "log-kernel", "automatic", "none"
    std::vector<double> radii;
    std::vector<double> sup_by_radius;
    std::vector<Vec> argsup;
    bool infinite;
    std::string verdict;  // "holds", "fails", "inconclusive"
    std::string note;
};

SpectralCheck rk_spectral_check(const SpectralMeasure& mu, double alpha, int d, int grid_points = 0);

struct ConditionReport {
    std::string model;
    GammaEstimate gamma;
    StrictGamma strict;
    RkScan rk;
    SpectralCheck spectral;
    bool cross_check_agree;  // ν-form and spectral verdicts agree where both apply
    std::string rk_verdict;  // combined

    nlohmann::json to_json() const;
};

struct ClassifyOptions {
    int grid_points = 0;  // 0: defaults (512 on the circle, 1500 on the sphere)
    std::vector<double> radii{1, 2, 4, 8};
};

ConditionReport classify(const StableModel& m, ClassifyOptions opt = {});

}  // namespace anisostable
