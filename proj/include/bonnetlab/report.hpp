#pragma once

#include "bonnetlab/congruence.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bonnetlab {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "bonnetlab-report-v1";

inline Json to_json(const ResidualReport& r) {
    Json j;
    j["fixture"] = r.fixture;
    j["model"] = r.model;
    j["h"] = r.h;
    j["scale"] = r.scale;
    j["worst_gated"] = r.worst_gated();
    j["worst_gated_channel"] = r.worst_gated_name();
    Json ch = Json::array();
    for (const auto& c : r.channels)
        ch.push_back({{"name", c.name}, {"gated", c.gated}, {"sup", c.sup}, {"scaled_sup", c.sup / r.scale}, {"l2", c.l2}, {"masked", c.n_masked}});
    j["channels"] = std::move(ch);
    return j;
}

inline Json to_json(const CongruenceVerdict& v) {
    Json j;
    j["congruent"] = v.congruent;
    j["witness"] = v.witness;
    j["deviation"] = v.deviation;
    j["tolerance"] = v.tolerance;
    Json t = Json::array();
    for (const auto& [name, dev] : v.per_transform) t.push_back({{"transform", name}, {"deviation", dev}});
    j["transforms"] = std::move(t);
    return j;
}

/// Writes through a temporary file in the same directory and renames it into place.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string());
        out << text;
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

/// One row per sample: i, j, u, v, then the named columns.
inline std::string per_sample_csv(const GridSpec& grid, const std::vector<std::pair<std::string, const Field<double>*>>& columns) {
    std::string s = "i,j,u,v";
    for (const auto& c : columns) s += "," + c.first;
    s += "\n";
    const int m = grid.samples();
    char buf[96];
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g", i, j, grid.u(i), grid.v(j));
            s += buf;
            for (const auto& c : columns) {
                std::snprintf(buf, sizeof buf, ",%.17g", (*c.second)(i, j));
                s += buf;
            }
            s += "\n";
        }
    return s;
}

/// Vertex grid with quad faces, vertices in chart coordinates.
inline std::string obj_grid(const Field<Vec3>& p, const std::string& name) {
    std::string s = "o " + name + "\n";
    const int m = p.size();
    char buf[96];
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", p(i, j).x(), p(i, j).y(), p(i, j).z());
            s += buf;
        }
    for (int i = 0; i + 1 < m; ++i)
        for (int j = 0; j + 1 < m; ++j) {
            const int a = i * m + j + 1;
            std::snprintf(buf, sizeof buf, "f %d %d %d %d\n", a, a + m, a + m + 1, a + 1);
            s += buf;
        }
    return s;
}

}  // namespace bonnetlab
