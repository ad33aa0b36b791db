#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "anisostable/simulator.hpp"

namespace anisostable {

// Closed forms for the isotropic process with Φ(u) = c|u|^α in the unit ball.
// Only models whose spectral measure is a multiple of the uniform one qualify.
class IsotropicOracle {
public:
    explicit IsotropicOracle(const StableModel& m);

    double scale() const { return c_; }  // Φ(e_1)
    // ∫_{|y|>1} ((1-|x|²)/(|y|²-1))^{α/2} |x-y|^{-d} dy at x = 0, by quadrature;
    // its inverse normalizes the Poisson kernel.
    double normalization() const { return norm_; }
    double poisson_kernel(const Vec& x, const Vec& y) const;
    // ∫_cell P(x, y) dy for a cell of an exterior partition
    double poisson_mass(const Vec& x, const ExteriorPartition& p, std::size_t cell) const;
    // G(x, v) = κ |x-v|^{α-d} ∫_0^w r^{α/2-1}(r+1)^{-d/2} dr, w = (1-|x|²)(1-|v|²)/|x-v|²
    double green(const Vec& x, const Vec& v) const;
    double green_cell_average(const Vec& x, const Vec& center, double side, int sub = 8) const;
    // E^x τ = Γ(d/2) (1-|x|²)^{α/2} / (2^α Γ(1+α/2) Γ((d+α)/2)), divided by c
    double exit_time(const Vec& x) const;

private:
    int d_;
    double alpha_, c_, norm_;
};

// Throws ModelError for non-isotropic models.
double isotropic_poisson_kernel(const StableModel& m, const Vec& x, const Vec& y);

// μ as weighted directions: atoms as they are, continuous parts on about n
// nodes. With a jitter stream the nodes are stratified random, so sums over
// them are unbiased for integrals against μ.
std::vector<std::pair<Vec, double>> mu_nodes(const SpectralMeasure& mu, int n, Rng* jitter = nullptr);

// ν(A - v) for every cell A of an exterior partition, |v| < 1: exact radial
// integrals along each node direction of μ, accumulated into `out`. Jumps
// shorter than min_r are left out.
void nu_partition_masses(double alpha, const std::vector<std::pair<Vec, double>>& nodes, const Vec& v,
                         const ExteriorPartition& p, double weight, std::vector<double>& out, double min_r = 0);
// Same, reporting (cell, mass) per ray segment instead of accumulating.
void nu_partition_visit(double alpha, const std::vector<std::pair<Vec, double>>& nodes, const Vec& v,
                        const ExteriorPartition& p, double min_r, const std::function<void(long, double)>& fn);

// Bilinear (trilinear) interpolation of the Green field, 0 outside the ball.
double green_at(const GreenField& g, const Vec& v);

struct IwValue {
    double value;
    double se;
    bool low_confidence_dominated;  // low-confidence cells carry > 10% of the value
};

// P(x, y) = ∫ μ(dθ) ∫ G(x, y - rθ) r^{-1-α} dr over the chord of the ball.
IwValue poisson_kernel_iw(const StableModel& m, const Vec& y, const GreenField& g, int mu_nodes_n = 720);

// ω^x(A) = Σ_cells Ĝ vol ν(A - v) with sub^d points per lattice cell. Cells at
// the sphere use boundary_sub^d points, weighted by (1-|v|²)^{α/2} inside the cell,
// since ν(A - v) blows up like dist(v, ∂B)^{-α} there.
std::vector<double> iw_harmonic_masses(const StableModel& m, const GreenField& g, const ExteriorPartition& p,
                                       int sub = 2, int boundary_sub = 8, int mu_nodes_n = 512);

enum class HarnackEstimator { Auto, Counts, Conditional };

struct HarnackConfig {
    SimulatorConfig sim;
    std::vector<double> radii{1, 1.25, 1.5, 2, 3, kInf};
    std::vector<int> sectors{16, 32, 64};  // one refinement level each; d = 3 uses sectors/2 bands
    std::size_t count_floor = 50;
    // Counts: exit points per cell. Conditional: each jump exit replaced by the
    // law of its landing point given the pre-exit position (ν restricted to the
    // complement, over a random node set of μ), which keeps fine cells in d = 3
    // populated. Auto picks Conditional for d = 3 only.
    HarnackEstimator estimator = HarnackEstimator::Auto;
    int nodes = 64;
    std::size_t conditional_floor = 200;  // effective sample size per cell
};

// ω^x(A) per cell from the conditional estimator; n_eff = (Σq)²/Σq² over paths.
struct SoftHarmonicMeasure {
    ExteriorPartition partition;
    std::vector<double> freq, se, n_eff;
    std::size_t paths = 0;
};

SoftHarmonicMeasure conditional_harmonic_measure(const StableModel& m, const ExitBatch& b, const ExteriorPartition& p,
                                                 int nodes = 64, std::uint64_t salt = 0);

struct HarnackLevel {
    int sectors = 0, bands = 1;
    std::size_t cells_used = 0;
    double sup_ratio = 0;
    Interval ci{0, 0};
    Vec witness{};  // a point of the maximizing cell
};

struct HarnackReport {
    Vec x1{}, x2{};
    std::size_t paths = 0;
    std::vector<HarnackLevel> levels;
    std::vector<std::string> skipped;  // levels with no cell above the count floor
    std::string verdict;               // "consistent", "violating", "inconclusive"
    std::string estimator;

    nlohmann::json to_json() const;
};

// sup over cells of ω^{x1}(A)/ω^{x2}(A) per refinement level.
HarnackReport harnack_from_batches(const StableModel& m, const ExitBatch& b1, const ExitBatch& b2,
                                   const HarnackConfig& cfg);
HarnackReport harnack_test(const StableModel& m, const Vec& x1, const Vec& x2, const HarnackConfig& cfg);

// Verdict from the sup ratios of successive levels: violating when each of the
// last two growth factors is at least 1.10 and the last ratio is at least 1.25
// times the first; consistent otherwise. Fewer than three levels: inconclusive.
std::string harnack_verdict(const std::vector<double>& sup_ratios);

// ŝ(v) from exit times started on a grid of radii along a few directions,
// interpolated in radius through s/(1-|v|²)^{α/2}.
struct ExitTimeProfile {
    int d = 2;
    double alpha = 1;
    std::vector<Vec> dirs;
    std::vector<double> radii;
    std::vector<double> s, se;  // dirs.size() × radii.size(), direction-major

    double at(const Vec& v) const;
};

ExitTimeProfile exit_time_profile(const StableModel& m, const SimulatorConfig& cfg, std::vector<double> radii = {},
                                  int ndirs = 0);

struct GreenTestOptions {
    int lattice_n = 40;
    double rmax = 0.95;            // cells compared, by centre radius
    double classical_rmax = 0.8;   // cross-check against the closed form (isotropic only)
    double max_rel_se = 0.2;       // confidence: relative standard error of Ĝ
    bool classical_coarse = true;  // cross-check on the two-fold coarsened lattice, which halves the noise
    std::size_t profile_paths = 4000;
};

struct GreenComparison {
    Vec x{};
    GreenField field;
    ExitTimeProfile s;
    std::vector<double> ratio;   // Ĝ / (ŝ(v) |v-x|^{α-d}), NaN where not compared
    std::vector<char> confident;
    double ratio_min = 0, ratio_max = 0, ratio_median = 0;
    double band = 0;             // smallest c with all ratios in [1/c, c]
    double normalized_band = 0;  // same after dividing by the median ratio
    double refined_band = 0;     // against (1-|v|²)^{α/2}|v-x|^{α-d}, median-normalized
    bool classical_available = false;
    double classical_max_rel = 0;  // max |Ĝ/G - 1| over confident cells with |v| <= classical_rmax
    std::size_t classical_cells = 0;

    nlohmann::json to_json() const;
};

GreenComparison green_ratio_test(const StableModel& m, const Vec& x, const SimulatorConfig& cfg,
                                 GreenTestOptions opt = {});

// Three routes to ω^x(A) on one partition: direct exits, Ikeda–Watanabe sums over
// the simulated Green field, and the normalized closed-form kernel.
struct ClosureReport {
    Vec x{};
    ExteriorPartition partition;
    std::vector<double> direct, direct_se;
    std::vector<double> iw, iw_se, iw_quad;  // iw_quad: change when the lattice is coarsened two-fold
    std::vector<double> exact, exact_quad;
    double worst_z = 0;  // largest |difference| / combined error over cells and pairs
    bool agree = false;

    nlohmann::json to_json() const;
};

ClosureReport oracle_closure(const StableModel& m, const Vec& x, const ExteriorPartition& p, const SimulatorConfig& cfg,
                             int batches = 10, int lattice_n = 40, double z = 3);

}  // namespace anisostable
