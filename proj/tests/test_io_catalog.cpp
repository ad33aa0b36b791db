#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "anisostable/catalog.hpp"
#include "anisostable/io.hpp"

using namespace anisostable;

TEST_CASE("file checksum and manifest round trip") {
    auto dir = std::filesystem::temp_directory_path() / "anisostable_io_test";
    std::filesystem::create_directories(dir);
    auto f = (dir / "a.csv").string();
    write_csv(f, {"x", "y"}, {{1, 2}, {3, 4.5}});
    RunManifest m;
    m.subcommand = "simulate";
    m.seed = 7;
    m.config = {{"argv", {"anisostable", "simulate"}}};
    m.add_output(f);
    auto back = RunManifest::from_json(m.to_json());
    CHECK(back.outputs.size() == 1);
    CHECK(back.outputs[0].checksum == m.outputs[0].checksum);
    CHECK(back.verify().empty());
    {
        std::ofstream o(f, std::ios::app);
        o << "5,6\n";
    }
    CHECK(back.verify().size() == 1);
    std::filesystem::remove_all(dir);
}

TEST_CASE("every catalog expectation has a basis") {
    auto ms = example_models();
    CHECK(ms.size() == 6);
    for (auto& e : ms) {
        CHECK(!e.expected.empty());
        for (auto& x : e.expected) CHECK(!x.basis.empty());
    }
    ExampleModel bad{make_isotropic(2, 1, 1), {{"harnack", "consistent", ""}}};
    CHECK_THROWS_AS(bad.validate(), ModelError);
}

TEST_CASE("bundled model files load") {
    for (auto name : {"iso_cauchy", "nu1", "nu2", "nu3", "atomic_a1", "atomic_a1.5", "atomic_a0.75", "atomic_a0.4",
                      "d1_atoms"}) {
        auto m = load_model(std::string(ANISOSTABLE_MODEL_DIR) + "/" + name + ".json");
        CHECK(m.mu.total_mass() > 0);
    }
    CHECK_THROWS_AS(load_model(std::string(ANISOSTABLE_MODEL_DIR) + "/missing.json"), ModelError);
}
