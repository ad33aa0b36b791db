#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "anisostable/measure.hpp"

namespace anisostable {

enum class SmallJumps { GaussianSurrogate, Drop };

struct SimulatorConfig {
    double eps = 0.02;   // jumps shorter than eps go to the small-jump part
    double h = 1e-3;     // Euler step
    double t_max = 50;   // censoring time
    std::size_t paths = 100000;
    std::uint64_t seed = 1;
    SmallJumps small = SmallJumps::GaussianSurrogate;

    void validate() const;
    nlohmann::json to_json() const;
};

SmallJumps small_jumps_from_string(const std::string& s);
const char* to_string(SmallJumps s);

// Independent stream for path i of a run seeded with `seed`.
Rng path_rng(std::uint64_t seed, std::uint64_t i);

// X_t for the truncated process: compound Poisson jumps of size >= eps plus
// either a Gaussian with covariance t Σ_eps or nothing.
class IncrementSampler {
public:
    IncrementSampler(const StableModel& m, double eps, SmallJumps small);

    const StableModel& model() const { return *m_; }
    double eps() const { return eps_; }
    double rate() const { return rate_; }  // |μ| eps^{-α}/α

    Vec sample(double t, Rng& rng) const;
    // One large jump: radius with P(R > s) = (eps/s)^α, direction from μ/|μ|.
    Vec large_jump(Rng& rng) const;
    // t^{1/2} L z for z standard normal, L L^T = Σ_eps.
    Vec gaussian(double t, Rng& rng) const;

private:
    const StableModel* m_;
    double eps_, rate_;
    SmallJumps small_;
    std::array<double, 9> chol_{};  // lower triangular, row-major
};

Vec sample_increment(const StableModel& m, double t, const SimulatorConfig& cfg, Rng& rng);

// Cubic cells of side 2/n covering [-1, 1]^d.
struct Lattice {
    int d = 2;
    int n = 40;

    std::size_t size() const;
    double side() const { return 2.0 / n; }
    double volume() const { return std::pow(side(), d); }
    // -1 outside [-1, 1)^d
    long cell(const Vec& x) const;
    Vec center(std::size_t i) const;
};

struct ExitBatch {
    Vec x0{};
    SimulatorConfig config;
    std::vector<double> tau;
    std::vector<Vec> exit;
    std::vector<char> censored;
    std::size_t censored_count = 0;
    // Position just before the jump that left the ball, and whether the exit
    // came from a large jump taken inside the ball (else from the Gaussian part).
    std::vector<Vec> pre_exit;
    std::vector<char> jump_exit;
    // Summed over paths. occupation[c] is time spent in cell c before exit,
    // visits[c] the number of pre-exit grid times that fell in it.
    Lattice lattice;
    std::vector<double> occupation;
    std::vector<double> occupation_sq;  // Σ over paths of (per-path occupation)²
    std::vector<std::uint64_t> visits;

    std::size_t size() const { return tau.size(); }
    double censored_fraction() const;
    // Mean of min(τ, T_max) and its standard error.
    double mean_tau() const;
    double mean_tau_se() const;
};

struct ExitOptions {
    bool occupation = false;
    Lattice lattice{};
    std::size_t first_path = 0;  // stream offset, so batches from one seed can be split
};

// Euler walk from x0 until |X| >= 1 with the post-jump position kept as the
// exit point. Paths run in parallel; results do not depend on the thread count.
ExitBatch simulate_exit(const StableModel& m, const Vec& x0, const SimulatorConfig& cfg, ExitOptions opt = {});

// Cells of the complement of the unit ball: radial shells × angular sectors
// (d = 2) or shells × azimuth sectors × bands in cos(polar angle) (d = 3).
struct ExteriorPartition {
    int d = 2;
    std::vector<double> radii{1, kInf};  // shell edges, from 1 upward
    int sectors = 8;
    int bands = 1;

    std::size_t size() const { return (radii.size() - 1) * sectors * bands; }
    long cell(const Vec& y) const;
    // Lebesgue measure of cell c (inf for an unbounded shell).
    double volume(std::size_t c) const;
    // Shell index, sector index, band index of cell c.
    void split(std::size_t c, std::size_t& shell, std::size_t& sector, std::size_t& band) const;
};

struct Interval {
    double lo, hi;
};

// Wilson score interval for k successes in n trials.
Interval wilson(std::size_t k, std::size_t n, double z = 1.959964);

struct HarmonicMeasure {
    ExteriorPartition partition;
    std::vector<std::size_t> counts;
    std::vector<double> freq;
    std::vector<Interval> ci;
    std::size_t paths = 0;
    std::size_t censored = 0;
    std::size_t on_sphere = 0;  // exit points with |X_τ| = 1 exactly
    double total() const;
};

HarmonicMeasure harmonic_measure(const ExitBatch& b, const ExteriorPartition& p);

struct GreenField {
    Lattice lattice;
    Vec x0{};
    std::size_t paths = 0;
    std::vector<double> G;
    std::vector<double> se;
    std::vector<double> mass;    // mean occupation time per path
    std::vector<double> inside;  // fraction of the cell inside the ball
    std::vector<std::uint64_t> visits;
    std::vector<char> low_confidence;  // fewer than 10 visits
};

// Mean occupation time per path divided by the volume of cell ∩ ball.
GreenField green_estimate(const ExitBatch& b);
// Merge 2^d blocks of cells (n must be even).
GreenField coarsen(const GreenField& g);

// ExitBatch as CSV: one row per path (tau, exit coordinates, censored) under a
// '#' line holding the configuration JSON.
void write_exit_csv(const ExitBatch& b, const std::string& path);
void write_occupation_csv(const ExitBatch& b, const std::string& path);

}  // namespace anisostable
