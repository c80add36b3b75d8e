#pragma once

#include "bonnetlab/immersion.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace bonnetlab {

using ParamMap = std::map<std::string, double>;

struct FixtureInfo {
    std::string name;
    std::string model;
    ParamMap defaults;
    std::string description;
};

struct Fixture {
    std::string name;
    ParamMap params;
    SurfacePatch patch;
    bool constant_principal = false;  // region M3
    bool constant_gauss_map = false;
    bool minimal = false;
    bool properly_invariant = false;
    std::string expected_region;
    /// Ambient Killing field tangent to the patch, if the fixture is invariant.
    std::function<Vec3(const Vec3&)> killing;
};

struct UnknownFixture : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline const std::vector<FixtureInfo>& catalog_list() {
    static const std::vector<FixtureInfo> list{
        {"ekt_slice", "ekt", {{"kappa", -1.0}, {"tau", 0.0}, {"size", 1.0}}, "horizontal slice z = 0"},
        {"ekt_vertical_plane", "ekt", {{"kappa", -1.0}, {"tau", 0.0}, {"angle", 0.3}, {"size", 1.0}},
         "vertical plane over a geodesic through the origin"},
        {"ekt_vertical_cylinder", "ekt", {{"kappa", -1.0}, {"tau", 0.5}, {"kg", 1.5}, {"span", 1.2}, {"height", 1.0}},
         "vertical cylinder over a circle of geodesic curvature kg"},
        {"ekt_graph", "ekt",
         {{"kappa", 0.0}, {"tau", 0.0}, {"c_xx", 1.0}, {"c_xy", 0.5}, {"c_yy", 0.0}, {"c_x", 0.0}, {"c_y", 0.0}, {"size", 1.0}},
         "graph z = c_xx x^2 + c_xy x y + c_yy y^2 + c_x x + c_y y"},
        {"sol3_geodesic_plane", "sol3", {{"mu", 1.0}, {"sign", 1.0}, {"offset", 0.0}, {"size", 1.0}},
         "totally geodesic plane x - sign*y = offset"},
        {"sol3_invariant_plane", "sol3", {{"mu", 1.0}, {"c", 0.2}, {"slope", 0.5}, {"size", 1.0}},
         "plane y = c + slope*z, invariant under x-translations"},
        {"sol3_graph", "sol3",
         {{"mu", 1.0}, {"c_xx", 0.6}, {"c_xy", 0.3}, {"c_yy", -0.4}, {"c_x", 0.6}, {"c_y", 0.1}, {"size", 0.8}},
         "graph z = c_xx x^2 + c_xy x y + c_yy y^2 + c_x x + c_y y"},
    };
    return list;
}

inline const FixtureInfo& fixture_info(const std::string& name) {
    for (const auto& f : catalog_list())
        if (f.name == name) return f;
    throw UnknownFixture("unknown fixture: " + name);
}

inline Fixture make_fixture(const std::string& name, int n, const ParamMap& overrides = {}) {
    const FixtureInfo& info = fixture_info(name);
    if (n < 8) throw std::invalid_argument("grid must have at least 8 intervals");
    ParamMap p = info.defaults;
    for (const auto& [k, v] : overrides) {
        if (!p.count(k)) throw std::invalid_argument("fixture " + name + " has no parameter " + k);
        p[k] = v;
    }
    Fixture f;
    f.name = name;
    f.params = p;
    f.patch.name = name;
    f.patch.grid = GridSpec{n};
    auto quad = [p](double x, double y) {
        return p.at("c_xx") * x * x + p.at("c_xy") * x * y + p.at("c_yy") * y * y + p.at("c_x") * x + p.at("c_y") * y;
    };

    if (name == "ekt_slice") {
        f.patch.model = AmbientModel::ekt(p["kappa"], p["tau"]);
        const double s = p["size"];
        f.patch.chart = [s](double u, double v) { return Vec3(s * (u - 0.5), s * (v - 0.5), 0.0); };
        f.constant_principal = p["tau"] == 0.0;
        f.expected_region = f.constant_principal ? "M3" : "";
    } else if (name == "ekt_vertical_plane") {
        f.patch.model = AmbientModel::ekt(p["kappa"], p["tau"]);
        const double s = p["size"], c = std::cos(p["angle"]), sn = std::sin(p["angle"]);
        f.patch.chart = [s, c, sn](double u, double v) {
            const double t = s * (u - 0.5);
            return Vec3(c * t, sn * t, s * (v - 0.5));
        };
        f.minimal = true;
        f.constant_principal = p["tau"] == 0.0;
        f.expected_region = f.constant_principal ? "M3" : "";
    } else if (name == "ekt_vertical_cylinder") {
        const double kap = p["kappa"], kg = p["kg"];
        f.patch.model = AmbientModel::ekt(kap, p["tau"]);
        // Chart radius r with (1 - kappa r^2 / 4) / r = kg.
        double r;
        if (std::abs(kap) < 1e-14) {
            r = 1.0 / kg;
        } else {
            const double disc = kg * kg + kap;
            if (disc <= 0.0) throw std::invalid_argument("no circle with this geodesic curvature");
            r = (-kg + std::sqrt(disc)) / (0.5 * kap);
        }
        if (!(r > 0.0)) throw std::invalid_argument("no circle with this geodesic curvature");
        const double span = p["span"], height = p["height"];
        f.patch.chart = [r, span, height](double u, double v) {
            const double phi = span * (v - 0.5);
            return Vec3(r * std::cos(phi), r * std::sin(phi), height * (u - 0.5));
        };
        f.constant_principal = true;
        f.expected_region = "M3";
    } else if (name == "ekt_graph") {
        f.patch.model = AmbientModel::ekt(p["kappa"], p["tau"]);
        const double s = p["size"];
        f.patch.chart = [s, quad](double u, double v) {
            const double x = s * (u - 0.5), y = s * (v - 0.5);
            return Vec3(x, y, quad(x, y));
        };
        f.expected_region = "M1";
    } else if (name == "sol3_geodesic_plane") {
        f.patch.model = AmbientModel::sol3(p["mu"]);
        const double s = p["size"], sg = p["sign"] >= 0.0 ? 1.0 : -1.0, off = p["offset"];
        f.patch.chart = [s, sg, off](double u, double v) {
            const double t = s * (u - 0.5);
            return Vec3(t + 0.5 * off, sg * (t - 0.5 * off), s * (v - 0.5));
        };
        f.constant_gauss_map = true;
        f.minimal = true;
    } else if (name == "sol3_invariant_plane") {
        f.patch.model = AmbientModel::sol3(p["mu"]);
        const double s = p["size"], c = p["c"], m = p["slope"];
        f.patch.chart = [s, c, m](double u, double v) {
            const double z = s * (v - 0.5);
            return Vec3(s * (u - 0.5), c + m * z, z);
        };
        f.killing = [](const Vec3&) { return Vec3(1.0, 0.0, 0.0); };
        f.properly_invariant = m != 0.0;
    } else if (name == "sol3_graph") {
        f.patch.model = AmbientModel::sol3(p["mu"]);
        const double s = p["size"];
        f.patch.chart = [s, quad](double u, double v) {
            const double x = s * (u - 0.5), y = s * (v - 0.5);
            return Vec3(x, y, quad(x, y));
        };
    }
    return f;
}

}  // namespace bonnetlab
