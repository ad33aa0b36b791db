#include "anisostable/io.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "anisostable/types.hpp"

namespace anisostable {

std::string file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("cannot read " + path);
    std::uint64_t h = 1469598103934665603ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    char s[17];
    std::snprintf(s, sizeof s, "%016llx", static_cast<unsigned long long>(h));
    return s;
}

void write_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ModelError("cannot write " + path);
    out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot read " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(path + ": " + e.what());
    }
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw ModelError("cannot write " + path);
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n' << std::setprecision(17);
    for (auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
        out << '\n';
    }
}

void RunManifest::add_output(const std::string& path) { outputs.push_back({path, file_checksum(path)}); }

nlohmann::json RunManifest::to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (auto& o : outputs) out.push_back({{"path", o.path}, {"checksum", o.checksum}});
    return {{"subcommand", subcommand}, {"config", config},       {"seed", seed},
            {"version", version},       {"wall_seconds", wall_seconds}, {"outputs", out}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
    RunManifest m;
    try {
        m.subcommand = j.at("subcommand").get<std::string>();
        m.config = j.at("config");
        m.seed = j.at("seed").get<std::uint64_t>();
        m.version = j.value("version", "");
        m.wall_seconds = j.value("wall_seconds", 0.0);
        for (auto& o : j.at("outputs")) m.outputs.push_back({o.at("path"), o.at("checksum")});
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("bad manifest: ") + e.what());
    }
    return m;
}

std::vector<std::string> RunManifest::verify() const {
    std::vector<std::string> bad;
    for (auto& o : outputs) {
        std::string c;
        try {
            c = file_checksum(o.path);
        } catch (const ModelError&) {
        }
        if (c != o.checksum) bad.push_back(o.path);
    }
    return bad;
}

const char* version_string() { return "0.1.0"; }

}  // namespace anisostable
