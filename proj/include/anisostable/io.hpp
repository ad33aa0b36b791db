#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace anisostable {

// FNV-1a over the bytes of a file, as 16 hex digits.
std::string file_checksum(const std::string& path);

void write_json(const nlohmann::json& j, const std::string& path);
nlohmann::json read_json(const std::string& path);

// One row per entry of `rows`, header first; values printed with 17 significant digits.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

struct OutputFile {
    std::string path;
    std::string checksum;
};

// Enough to rerun a CLI invocation and check that its outputs come back identical.
struct RunManifest {
    std::string subcommand;
    nlohmann::json config;  // resolved options, including the model
    std::uint64_t seed = 0;
    std::string version;
    double wall_seconds = 0;
    std::vector<OutputFile> outputs;

    void add_output(const std::string& path);
    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
    // Recomputes each checksum; returns the paths that differ or are missing.
    std::vector<std::string> verify() const;
};

const char* version_string();

}  // namespace anisostable
