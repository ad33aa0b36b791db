#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "anisostable/lab.hpp"

namespace anisostable {

// One expected verdict and the fact it rests on, in plain words.
struct Expectation {
    std::string column;  // "strict", "rk_nu", "rk_spectral", "harnack", "v_continuity"
    std::string value;
    std::string basis;
};

struct ExampleModel {
    StableModel model;
    std::vector<Expectation> expected;
    Vec x1{0, -0.45, 0}, x2{0.45, 0, 0};  // Harnack pair

    // Throws ModelError when an expectation has no basis.
    void validate() const;
};

std::vector<ExampleModel> example_models();

enum class Budget { Quick, Full };
Budget budget_from_string(const std::string& s);
const char* to_string(Budget b);

struct CatalogSettings {
    std::size_t paths_2d = 0, paths_3d = 0;
    std::vector<int> sectors_2d, sectors_3d;
    std::vector<double> radii;
    int kato_grid_3d = 0;  // 0: module default
    int v_dirs = 0;        // coarse V profile; the fine one has twice as many
    bool v_in_3d = false;

    static CatalogSettings for_budget(Budget b);
};

struct CatalogCheck {
    Expectation expected;
    std::string observed;
    bool pass;
};

struct CatalogRow {
    std::string name;
    int d = 2;
    double alpha = 1;
    double gamma = 0;
    std::string strict, rk_nu, rk_spectral, harnack, v_continuity;
    std::vector<double> harnack_sups;
    std::vector<CatalogCheck> checks;
    double seconds = 0;
    nlohmann::json detail;  // full reports

    bool pass() const;
};

struct CatalogReport {
    Budget budget = Budget::Quick;
    std::uint64_t seed = 1;
    std::vector<CatalogRow> rows;
    double seconds = 0;

    std::vector<std::string> mismatches() const;  // "model: column expected x, got y"
    std::string to_markdown() const;
    nlohmann::json to_json() const;
};

// Entries run concurrently when more than one worker is available.
CatalogReport run_catalog(Budget budget, std::uint64_t seed = 1, const std::vector<std::string>& only = {});

}  // namespace anisostable
