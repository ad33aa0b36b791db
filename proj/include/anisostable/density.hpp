#pragma once

#include <memory>
#include <string>
#include <vector>

#include "anisostable/exponent.hpp"
#include "anisostable/ridge.hpp"

namespace anisostable {

// Angular rule for p_1(x) = (2π)^{-d} ∫_S Φ(θ)^{-d/α} J(θ·x Φ(θ)^{-1/α}) dθ.
// d = 2: nodes on a half circle graded toward the kinks of Φ (normals of atoms
// and cap edges); the closing panel wraps onto the antipode of the first node.
// d = 3: meridians of a hemisphere around a pole, panels uniform in polar angle,
// trapezoid in azimuth. Each meridian is integrated by product integration in
// cos β, which resolves the narrow spike of J wherever the meridians cross
// {θ·x = 0} transversally; three poles (the axes) are kept and the one closest
// to x̂ is used. J is even, so half the sphere suffices.
class RidgeEvaluator {
public:
    // angular_nodes: nodes on the half circle (d = 2) or azimuths (d = 3); 0 picks the default.
    RidgeEvaluator(const StableModel& m, int angular_nodes = 0);
    // d = 3 only: a single node set with the given pole, exact along the ray through it.
    RidgeEvaluator(const StableModel& m, int angular_nodes, const Vec& pole);

    int dim() const { return d_; }
    double alpha() const { return alpha_; }
    int nodes() const { return nodes_; }
    double eval(const Vec& x) const;

private:
    struct NodeSet {
        Vec pole;
        std::vector<double> ux, uy, uz;  // σ(θ)θ, σ = Φ(θ)^{-1/α}
        std::vector<double> wt;          // weight of the panel from node i to i+1 (0 across seams)
    };
    void build_d2(const ExponentEvaluator& ev);
    NodeSet build_d3(const ExponentEvaluator& ev, const Vec& pole) const;

    int d_;
    double alpha_;
    int nodes_;
    const RidgeTable* table_;
    std::vector<NodeSet> sets_;
    double prefactor_;
    double sigma1_ = 0;  // d = 1
};

struct DensityGrid {
    int d = 2;
    double alpha = 1;
    double h = 1.0 / 32;
    double extent = 8;
    std::size_t n = 0;  // points per axis, odd; index n/2 is the origin
    std::vector<double> values;
    std::uint64_t model_checksum = 0;
    int angular_nodes = 0;
    double inversion_error = 0;  // max |p - p_half| / p(0) over probe points
    double riemann_mass = 0;
    double tail_mass_bound = 0;
    std::shared_ptr<RidgeEvaluator> ridge;  // exact off-lattice evaluation; may be null after loading from cache

    double coord(std::size_t i) const { return -extent + h * static_cast<double>(i); }
    std::size_t index(std::size_t i, std::size_t j = 0, std::size_t k = 0) const {
        return d == 1 ? i : d == 2 ? i + n * j : i + n * (j + n * k);
    }
    double at(std::size_t i, std::size_t j = 0, std::size_t k = 0) const { return values[index(i, j, k)]; }
    // Multilinear interpolation; x must lie in the box.
    double interpolate(const Vec& x) const;
    bool inside(const Vec& x) const;
};

struct DensityOptions {
    int angular_nodes = 0;  // 0: 2048 (d = 2), 96 rings (d = 3)
    bool check_positive = true;
};

DensityGrid build_density_grid(const StableModel& m, double extent, double spacing, DensityOptions opt = {});

// Same, reusing a binary cache in $ANISOSTABLE_CACHE when present.
DensityGrid cached_density_grid(const StableModel& m, double extent, double spacing, DensityOptions opt = {});

enum class OutOfRange { Error, DecayBound };

struct DensityValue {
    double value;
    bool extrapolated;
};

// p_t(x) = t^{-d/α} p_1(t^{-1/α} x). Outside the box the value is continued
// along the ray with the weakest decay (1+|y|)^{-1-α} any model can have; the
// result is flagged.
DensityValue density_at(double t, const Vec& x, const DensityGrid& g, OutOfRange mode = OutOfRange::DecayBound);

struct DecayReport {
    double gamma;
    double sup;          // sup of p_1(y)(1+|y|)^{γ+α}
    Vec argsup;
    std::vector<std::pair<double, double>> shells;  // (shell radius, max statistic)
    double slope;        // log-log slope of shell maxima over the outer shells
    bool bounded;
};

DecayReport check_decay_bound(const DensityGrid& g, double gamma, double tol = 0.1);

// Lattice sum of cos(u·x) p_1(x) h^d.
double lattice_characteristic(const DensityGrid& g, const Vec& u);

void write_density_csv(const DensityGrid& g, const std::string& path);
void write_density_cache(const DensityGrid& g, const std::string& path);
// Returns false when the file is missing or its header does not match.
bool read_density_cache(const std::string& path, std::uint64_t checksum, double alpha, int d, double h, double extent,
                        int nodes, DensityGrid& out);

}  // namespace anisostable
