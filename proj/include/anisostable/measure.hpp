#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "anisostable/types.hpp"

namespace anisostable {

using Rng = std::mt19937_64;

struct Atom {
    Vec dir;
    double mass;
};

// Constant surface density on a geodesic ball of the sphere (an arc when d = 2).
struct Cap {
    Vec center;
    double radius;  // angular
    double density;
};

struct ShrinkingBalls {
    Vec base{1, 0, 0};
    Vec toward{0, 1, 0};
    int n0 = 2;
    int count = 6;
    double density = 1.0;
};

// Symmetric finite measure on S^{d-1}. Atoms and caps are stored together with
// their antipodes, so every generator list is closed under x -> -x.
class SpectralMeasure {
public:
    SpectralMeasure() = default;
    explicit SpectralMeasure(int d) : d_(d) {}

    int dim() const { return d_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<Cap>& caps() const { return caps_; }
    double uniform_mass() const { return uniform_mass_; }
    const std::optional<ShrinkingBalls>& shrinking() const { return shrinking_; }

    // Each call adds the generator and its antipode.
    void add_atom(Vec dir, double mass);
    void add_cap(Vec center, double angular_radius, double density);
    void add_uniform(double mass);
    void add_shrinking_balls(const ShrinkingBalls& sb);

    double total_mass() const;
    double cap_mass(const Cap& c) const;
    // ∫ θθᵀ μ(dθ), row-major 3x3 (zero outside the leading d×d block).
    std::array<double, 9> gram() const;
    // Throws ModelError unless the Gram matrix has full rank d and |μ| > 0.
    void validate() const;

    // Directions of the shrinking-ball caps and their chord radii, in order of n.
    std::vector<Cap> shrinking_caps() const;

    // Direction drawn from μ/|μ|.
    Vec sample_direction(Rng& rng) const;

    // Feature directions used to enrich scan grids: atoms, cap centers, points on cap edges.
    std::vector<Vec> feature_directions(int edge_points = 8) const;
    // Angular length scale attached to each feature (0 for atoms).
    std::vector<std::pair<Vec, double>> features() const;

    nlohmann::json to_json() const;

private:
    void build_sampler() const;

    int d_ = 2;
    std::vector<Atom> atoms_;
    std::vector<Cap> caps_;
    double uniform_mass_ = 0;
    std::optional<ShrinkingBalls> shrinking_;
    std::vector<Cap> shrinking_caps_;

    mutable std::vector<double> cum_;  // cumulative component masses for sampling
};

struct StableModel {
    std::string name;
    int d = 2;
    double alpha = 1.0;
    SpectralMeasure mu;

    // π / (2 sin(πα/2) Γ(1+α))
    double phi_constant() const;
    // Covariance of the jumps of size < eps: gram · eps^{2-α}/(2-α).
    std::array<double, 9> small_jump_covariance(double eps) const;
    // Rate of jumps of size >= eps: |μ| eps^{-α}/α.
    double large_jump_rate(double eps) const { return mu.total_mass() * std::pow(eps, -alpha) / alpha; }

    void validate() const;
    nlohmann::json to_json() const;
    // FNV-1a hash of the canonical JSON, used in cache headers and manifests.
    std::uint64_t checksum() const;
};

StableModel model_from_json(const nlohmann::json& j);
StableModel load_model(const std::string& path);

// Builders for the bundled examples.
StableModel make_isotropic(int d, double alpha, double uniform_mass);
StableModel make_atomic_axes(int d, double alpha, double mass_per_atom = 0.25);
StableModel make_nu2(int d, double alpha, double cap_radius = 0.3);
StableModel make_nu3(double alpha = 0.5, int n0 = 2, int count = 6);

// Tangent frame: unit vectors completing w to an orthonormal basis of R^3.
void tangent_frame(const Vec& w, Vec& e1, Vec& e2);

}  // namespace anisostable
