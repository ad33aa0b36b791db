#include "anisostable/measure.hpp"

#include <algorithm>
#include <fstream>

#include <Eigen/Dense>

namespace anisostable {

namespace {

Vec vec_from_json(const nlohmann::json& j, int d) {
    if (!j.is_array() || static_cast<int>(j.size()) != d)
        throw ModelError("direction must have exactly d = " + std::to_string(d) + " components");
    Vec v{0, 0, 0};
    for (int i = 0; i < d; ++i) v[i] = j[i].get<double>();
    return normalized(v);
}

nlohmann::json vec_to_json(const Vec& v, int d) {
    auto a = nlohmann::json::array();
    for (int i = 0; i < d; ++i) a.push_back(v[i]);
    return a;
}

}  // namespace

void tangent_frame(const Vec& w, Vec& e1, Vec& e2) {
    Vec t = std::abs(w[0]) < 0.9 ? Vec{1, 0, 0} : Vec{0, 1, 0};
    e1 = normalized(t - dot(t, w) * w);
    e2 = cross(w, e1);
}

void SpectralMeasure::add_atom(Vec dir, double mass) {
    if (!(mass > 0)) throw ModelError("atom mass must be positive");
    dir = normalized(dir);
    atoms_.push_back({dir, mass});
    atoms_.push_back({-dir, mass});
    build_sampler();
}

void SpectralMeasure::add_cap(Vec center, double angular_radius, double density) {
    if (d_ < 2) throw ModelError("caps need d >= 2");
    if (!(angular_radius > 0 && angular_radius < kPi / 2))
        throw ModelError("cap angular radius must lie in (0, pi/2) so the cap and its antipode are disjoint");
    if (!(density > 0)) throw ModelError("cap density must be positive");
    center = normalized(center);
    caps_.push_back({center, angular_radius, density});
    caps_.push_back({-center, angular_radius, density});
    build_sampler();
}

void SpectralMeasure::add_uniform(double mass) {
    if (mass < 0) throw ModelError("uniform_mass must be nonnegative");
    if (mass == 0) return;
    if (d_ == 1) {
        add_atom({1, 0, 0}, mass / 2);
        return;
    }
    uniform_mass_ += mass;
    build_sampler();
}

void SpectralMeasure::add_shrinking_balls(const ShrinkingBalls& sb) {
    if (d_ < 2) throw ModelError("shrinking_balls need d >= 2");
    if (sb.n0 < 1 || sb.count < 1) throw ModelError("shrinking_balls needs n0 >= 1 and count >= 1");
    ShrinkingBalls s = sb;
    s.base = normalized(s.base);
    Vec t = s.toward - dot(s.toward, s.base) * s.base;
    s.toward = normalized(t);
    shrinking_ = s;
    // Chord radius 4^{-n} for the cap, 2^{-n} for the disjoint neighbourhood.
    auto chord_to_angle = [](double c) { return 2 * std::asin(c / 2); };
    double phi = 0;
    shrinking_caps_.clear();
    for (int n = s.n0; n < s.n0 + s.count; ++n) {
        if (n > s.n0) phi += chord_to_angle(std::ldexp(1.0, -(n - 1))) + chord_to_angle(std::ldexp(1.0, -n));
        Vec c = std::cos(phi) * s.base + std::sin(phi) * s.toward;
        double a = chord_to_angle(std::ldexp(1.0, -2 * n));
        shrinking_caps_.push_back({c, a, s.density});
        add_cap(c, a, s.density);
    }
}

std::vector<Cap> SpectralMeasure::shrinking_caps() const { return shrinking_caps_; }

double SpectralMeasure::cap_mass(const Cap& c) const {
    if (d_ == 2) return 2 * c.radius * c.density;
    return 2 * kPi * (1 - std::cos(c.radius)) * c.density;
}

double SpectralMeasure::total_mass() const {
    double m = uniform_mass_;
    for (auto& a : atoms_) m += a.mass;
    for (auto& c : caps_) m += cap_mass(c);
    return m;
}

std::array<double, 9> SpectralMeasure::gram() const {
    std::array<double, 9> g{};
    auto add_outer = [&](const Vec& v, double w) {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) g[3 * i + j] += w * v[i] * v[j];
    };
    for (auto& a : atoms_) add_outer(a.dir, a.mass);
    for (int i = 0; i < d_; ++i) g[4 * i] += uniform_mass_ / d_;
    for (auto& c : caps_) {
        double a = c.radius;
        if (d_ == 2) {
            Vec t{-c.center[1], c.center[0], 0};
            add_outer(c.center, c.density * (a + std::sin(a) * std::cos(a)));
            add_outer(t, c.density * (a - std::sin(a) * std::cos(a)));
        } else {
            double ca = std::cos(a);
            double par = 2 * kPi * (1 - ca * ca * ca) / 3;
            double perp = 2 * kPi * (2.0 / 3 - ca + ca * ca * ca / 3);
            Vec e1, e2;
            tangent_frame(c.center, e1, e2);
            add_outer(c.center, c.density * par);
            add_outer(e1, c.density * perp / 2);
            add_outer(e2, c.density * perp / 2);
        }
    }
    return g;
}

void SpectralMeasure::validate() const {
    double m = total_mass();
    if (!(m > 0) || !std::isfinite(m)) throw ModelError("spectral measure must have finite positive mass");
    auto g = gram();
    Eigen::MatrixXd G(d_, d_);
    for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j) G(i, j) = g[3 * i + j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    if (!(lo > 1e-12 * hi))
        throw ModelError("degenerate spectral measure: support does not span R^d (Gram eigenvalue ratio " +
                         std::to_string(lo / hi) + ")");
}

void SpectralMeasure::build_sampler() const {
    cum_.clear();
    double acc = 0;
    for (auto& a : atoms_) cum_.push_back(acc += a.mass);
    for (auto& c : caps_) cum_.push_back(acc += cap_mass(c));
    cum_.push_back(acc += uniform_mass_);
}

Vec SpectralMeasure::sample_direction(Rng& rng) const {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double u = U(rng) * cum_.back();
    std::size_t k = std::upper_bound(cum_.begin(), cum_.end(), u) - cum_.begin();
    k = std::min(k, cum_.size() - 1);
    if (k < atoms_.size()) return atoms_[k].dir;
    k -= atoms_.size();
    if (k < caps_.size()) {
        const Cap& c = caps_[k];
        if (d_ == 2) {
            double t = std::atan2(c.center[1], c.center[0]) + (2 * U(rng) - 1) * c.radius;
            return {std::cos(t), std::sin(t), 0};
        }
        double cphi = 1 - U(rng) * (1 - std::cos(c.radius));
        double sphi = std::sqrt(std::max(0.0, 1 - cphi * cphi));
        double psi = 2 * kPi * U(rng);
        Vec e1, e2;
        tangent_frame(c.center, e1, e2);
        return cphi * c.center + (sphi * std::cos(psi)) * e1 + (sphi * std::sin(psi)) * e2;
    }
    std::normal_distribution<double> N(0.0, 1.0);
    Vec v{0, 0, 0};
    do {
        for (int i = 0; i < d_; ++i) v[i] = N(rng);
    } while (norm(v) < 1e-12);
    return normalized(v);
}

std::vector<std::pair<Vec, double>> SpectralMeasure::features() const {
    std::vector<std::pair<Vec, double>> f;
    for (auto& a : atoms_) f.push_back({a.dir, 0.0});
    for (auto& c : caps_) f.push_back({c.center, c.radius});
    return f;
}

std::vector<Vec> SpectralMeasure::feature_directions(int edge_points) const {
    std::vector<Vec> out;
    for (auto& a : atoms_) out.push_back(a.dir);
    for (auto& c : caps_) {
        out.push_back(c.center);
        if (d_ == 2) {
            double t = std::atan2(c.center[1], c.center[0]);
            out.push_back({std::cos(t + c.radius), std::sin(t + c.radius), 0});
            out.push_back({std::cos(t - c.radius), std::sin(t - c.radius), 0});
        } else {
            Vec e1, e2;
            tangent_frame(c.center, e1, e2);
            for (int k = 0; k < edge_points; ++k) {
                double psi = 2 * kPi * k / edge_points;
                out.push_back(std::cos(c.radius) * c.center +
                              std::sin(c.radius) * (std::cos(psi) * e1 + std::sin(psi) * e2));
            }
        }
    }
    return out;
}

nlohmann::json SpectralMeasure::to_json() const {
    nlohmann::json j;
    // Only one of each antipodal pair is written; loading adds the other back.
    auto atoms = nlohmann::json::array();
    for (std::size_t i = 0; i < atoms_.size(); i += 2) atoms.push_back({vec_to_json(atoms_[i].dir, d_), atoms_[i].mass});
    j["atoms"] = atoms;
    auto caps = nlohmann::json::array();
    std::size_t skip = 2 * shrinking_caps_.size();
    for (std::size_t i = 0; i + skip < caps_.size(); i += 2)
        caps.push_back({{"center", vec_to_json(caps_[i].center, d_)},
                        {"radius", caps_[i].radius},
                        {"density", caps_[i].density}});
    j["caps"] = caps;
    j["uniform_mass"] = uniform_mass_;
    if (shrinking_) {
        j["shrinking_balls"] = {{"base", vec_to_json(shrinking_->base, d_)},
                                {"toward", vec_to_json(shrinking_->toward, d_)},
                                {"n0", shrinking_->n0},
                                {"count", shrinking_->count},
                                {"density", shrinking_->density}};
    }
    return j;
}

double StableModel::phi_constant() const {
    return kPi / (2 * std::sin(kPi * alpha / 2) * std::tgamma(1 + alpha));
}

std::array<double, 9> StableModel::small_jump_covariance(double eps) const {
    auto g = mu.gram();
    double f = std::pow(eps, 2 - alpha) / (2 - alpha);
    for (auto& x : g) x *= f;
    return g;
}

void StableModel::validate() const {
    if (d < 1 || d > 3) throw ModelError("dimension d must be 1, 2 or 3");
    if (!(alpha > 0 && alpha < 2)) throw ModelError("alpha must lie in (0, 2)");
    if (mu.dim() != d) throw ModelError("spectral measure dimension differs from model dimension");
    mu.validate();
}

nlohmann::json StableModel::to_json() const {
    nlohmann::json j;
    if (!name.empty()) j["name"] = name;
    j["d"] = d;
    j["alpha"] = alpha;
    j["spectral"] = mu.to_json();
    return j;
}

std::uint64_t StableModel::checksum() const {
    std::string s = to_json().dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

StableModel model_from_json(const nlohmann::json& j) {
    StableModel m;
    try {
        m.name = j.value("name", std::string{});
        m.d = j.at("d").get<int>();
        m.alpha = j.at("alpha").get<double>();
        if (m.d < 1 || m.d > 3) throw ModelError("dimension d must be 1, 2 or 3 (d >= 4 is not supported)");
        m.mu = SpectralMeasure(m.d);
        const auto& s = j.at("spectral");
        if (s.contains("atoms"))
            for (const auto& a : s["atoms"]) {
                if (!a.is_array() || a.size() != 2) throw ModelError("atom entries are [direction, mass]");
                m.mu.add_atom(vec_from_json(a[0], m.d), a[1].get<double>());
            }
        if (s.contains("caps"))
            for (const auto& c : s["caps"]) {
                double r = 0;
                if (c.contains("radius"))
                    r = c["radius"].get<double>();
                else if (c.contains("chord_radius"))
                    r = 2 * std::asin(c["chord_radius"].get<double>() / 2);
                else
                    throw ModelError("cap needs radius or chord_radius");
                m.mu.add_cap(vec_from_json(c.at("center"), m.d), r, c.value("density", 1.0));
            }
        if (s.contains("uniform_mass")) m.mu.add_uniform(s["uniform_mass"].get<double>());
        if (s.contains("shrinking_balls")) {
            const auto& b = s["shrinking_balls"];
            ShrinkingBalls sb;
            if (b.contains("base")) sb.base = vec_from_json(b["base"], m.d);
            if (b.contains("toward")) sb.toward = vec_from_json(b["toward"], m.d);
            sb.n0 = b.value("n0", 2);
            sb.count = b.value("count", 6);
            sb.density = b.value("density", 1.0);
            m.mu.add_shrinking_balls(sb);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("malformed model JSON: ") + e.what());
    }
    m.validate();
    return m;
}

StableModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open model file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ModelError("malformed model JSON in " + path + ": " + e.what());
    }
    return model_from_json(j);
}

StableModel make_isotropic(int d, double alpha, double uniform_mass) {
    StableModel m;
    m.name = "isotropic";
    m.d = d;
    m.alpha = alpha;
    m.mu = SpectralMeasure(d);
    m.mu.add_uniform(uniform_mass);
    m.validate();
    return m;
}

StableModel make_atomic_axes(int d, double alpha, double mass_per_atom) {
    StableModel m;
    m.name = "atomic";
    m.d = d;
    m.alpha = alpha;
    m.mu = SpectralMeasure(d);
    for (int i = 0; i < d; ++i) {
        Vec e{0, 0, 0};
        e[i] = 1;
        m.mu.add_atom(e, mass_per_atom);
    }
    m.validate();
    return m;
}

StableModel make_nu2(int d, double alpha, double cap_radius) {
    StableModel m;
    m.name = "nu2";
    m.d = d;
    m.alpha = alpha;
    m.mu = SpectralMeasure(d);
    m.mu.add_cap({1, 0, 0}, cap_radius, 1.0);
    m.validate();
    return m;
}

StableModel make_nu3(double alpha, int n0, int count) {
    StableModel m;
    m.name = "nu3";
    m.d = 3;
    m.alpha = alpha;
    m.mu = SpectralMeasure(3);
    ShrinkingBalls sb;
    sb.n0 = n0;
    sb.count = count;
    // density chosen so |μ| = 1; a constant factor is only a time change
    SpectralMeasure probe(3);
    probe.add_shrinking_balls(sb);
    sb.density = 1 / probe.total_mass();
    m.mu.add_shrinking_balls(sb);
    m.validate();
    return m;
}

}  // namespace anisostable
