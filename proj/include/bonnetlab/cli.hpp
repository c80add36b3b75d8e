#pragma once

#include "bonnetlab/bonnet_ekt.hpp"
#include "bonnetlab/bonnet_sol3.hpp"
#include "bonnetlab/fixtures.hpp"
#include "bonnetlab/reconstruct.hpp"
#include "bonnetlab/report.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

namespace bonnetlab {

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct RunConfig {
    std::string command;
    std::string fixture;
    std::string model;  // optional filter / consistency check
    std::string cls = "positive";
    std::string subcase = "auto";
    std::string out;
    int grid = 64;
    int seeds_u = 0, seeds_v = 0;
    bool reflection = false;
    ParamMap params;

    double tol = 1e-4;             // scaled compat gate
    double eps_deg = 1e-8;
    double tol_region = 1e-8;
    double newton_tol = 1e-12;
    double accept_tol = 1e-8;
    double cluster = 1e-6;
    int scan = 128;
    int margin = 4;
    int stride = 1;                // root-count sampling stride
    double theta0 = M_PI / 4.0;
    double roundtrip_tol = 1e-3;
    double spectrum_tol = 1e-12;
    double invariant_tol = 1e-10;

    void validate() const {
        if (grid < 8) throw UsageError("grid must be at least 8");
        if (seeds_u < 0 || seeds_v < 0) throw UsageError("seed grid must be non-negative");
        if (scan < 4 || margin < 0 || stride < 1) throw UsageError("scan >= 4, margin >= 0 and stride >= 1 are required");
        for (double t : {tol, eps_deg, tol_region, newton_tol, accept_tol, cluster, roundtrip_tol, spectrum_tol, invariant_tol})
            if (!(t > 0.0)) throw UsageError("tolerances must be positive");
        if (cls != "positive" && cls != "negative") throw UsageError("--class must be positive or negative");
        if (!model.empty() && model != "ekt" && model != "sol3") throw UsageError("--model must be ekt or sol3");
    }
};

inline Json to_json(const RunConfig& c) {
    Json j;
    j["command"] = c.command;
    j["fixture"] = c.fixture;
    j["model"] = c.model;
    j["class"] = c.cls;
    j["subcase"] = c.subcase;
    j["out"] = c.out;
    j["grid"] = c.grid;
    j["seeds"] = {c.seeds_u, c.seeds_v};
    j["reflection"] = c.reflection;
    Json p = Json::object();
    for (const auto& [k, v] : c.params) p[k] = v;
    j["params"] = std::move(p);
    j["tol"] = c.tol;
    j["eps_deg"] = c.eps_deg;
    j["tol_region"] = c.tol_region;
    j["newton_tol"] = c.newton_tol;
    j["accept_tol"] = c.accept_tol;
    j["cluster"] = c.cluster;
    j["scan"] = c.scan;
    j["margin"] = c.margin;
    j["stride"] = c.stride;
    j["theta0"] = c.theta0;
    j["roundtrip_tol"] = c.roundtrip_tol;
    j["spectrum_tol"] = c.spectrum_tol;
    j["invariant_tol"] = c.invariant_tol;
    return j;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw UsageError("bad number for " + key + ": " + v);
    }
}

inline int parse_int(const std::string& key, const std::string& v) {
    const double x = parse_double(key, v);
    if (x != static_cast<int>(x)) throw UsageError("bad integer for " + key + ": " + v);
    return static_cast<int>(x);
}

inline void parse_seeds(const std::string& s, RunConfig& c) {
    static const std::regex re(R"((\d+)x(\d+))");
    std::smatch m;
    if (!std::regex_match(s, m, re)) throw UsageError("--seeds expects NxM, got " + s);
    c.seeds_u = std::stoi(m[1]);
    c.seeds_v = std::stoi(m[2]);
}

/// "m3:<theta0>" sets the subcase and the initial angle.
inline void parse_subcase(const std::string& s, RunConfig& c) {
    const auto colon = s.find(':');
    const std::string head = s.substr(0, colon);
    if (head != "auto" && head != "a1" && head != "a2" && head != "b" && head != "m3") throw UsageError("unknown subcase " + s);
    if (colon != std::string::npos) {
        if (head != "m3") throw UsageError("only m3 takes an initial angle");
        c.theta0 = parse_double("subcase", s.substr(colon + 1));
    }
    c.subcase = head;
}

inline void parse_param(const std::string& kv, RunConfig& c) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--param expects name=value");
    const std::string k = trim(kv.substr(0, eq));
    c.params[k] = parse_double(k, trim(kv.substr(eq + 1)));
}

inline void apply_key(RunConfig& c, const std::string& k, const std::string& v) {
    if (k == "fixture") c.fixture = v;
    else if (k == "model") c.model = v;
    else if (k == "class") c.cls = v;
    else if (k == "subcase") parse_subcase(v, c);
    else if (k == "out") c.out = v;
    else if (k == "grid") c.grid = parse_int(k, v);
    else if (k == "seeds") parse_seeds(v, c);
    else if (k == "reflection") c.reflection = v == "true" || v == "1";
    else if (k == "tol") c.tol = parse_double(k, v);
    else if (k == "eps_deg") c.eps_deg = parse_double(k, v);
    else if (k == "tol_region") c.tol_region = parse_double(k, v);
    else if (k == "newton_tol") c.newton_tol = parse_double(k, v);
    else if (k == "accept_tol") c.accept_tol = parse_double(k, v);
    else if (k == "cluster") c.cluster = parse_double(k, v);
    else if (k == "scan") c.scan = parse_int(k, v);
    else if (k == "margin") c.margin = parse_int(k, v);
    else if (k == "stride") c.stride = parse_int(k, v);
    else if (k == "theta0") c.theta0 = parse_double(k, v);
    else if (k == "roundtrip_tol") c.roundtrip_tol = parse_double(k, v);
    else if (k == "spectrum_tol") c.spectrum_tol = parse_double(k, v);
    else if (k == "invariant_tol") c.invariant_tol = parse_double(k, v);
    else if (k.rfind("param.", 0) == 0) c.params[k.substr(6)] = parse_double(k, v);
    else throw UsageError("unknown config key " + k);
}

}  // namespace detail

/// Plain key = value lines; '#' starts a comment. Fixture parameters use "param.<name>".
inline void load_config_file(const std::string& path, RunConfig& c) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file " + path);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(n) + ": expected key = value");
        detail::apply_key(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
}

namespace detail {

struct Gates {
    Json list = Json::array();
    bool pass = true;
    void add(const std::string& name, double value, double limit) {
        const bool ok = value <= limit;
        list.push_back({{"name", name}, {"value", value}, {"limit", limit}, {"pass", ok}});
        pass = pass && ok;
    }
    void require(const std::string& name, bool ok) {
        list.push_back({{"name", name}, {"pass", ok}});
        pass = pass && ok;
    }
};

inline Fixture load_fixture(const RunConfig& c) {
    if (c.fixture.empty()) throw UsageError("--fixture is required");
    Fixture f;
    try {
        f = make_fixture(c.fixture, c.grid, c.params);
    } catch (const UnknownFixture& e) {
        throw UsageError(e.what());
    }
    if (!c.model.empty() && c.model != f.patch.model.name())
        throw UsageError("fixture " + c.fixture + " lives in " + f.patch.model.name() + ", not " + c.model);
    return f;
}

inline Json fixture_json(const Fixture& f) {
    Json j;
    j["name"] = f.name;
    j["model"] = f.patch.model.name();
    Json p = Json::object();
    for (const auto& [k, v] : f.params) p[k] = v;
    j["params"] = std::move(p);
    j["constant_principal"] = f.constant_principal;
    j["constant_gauss_map"] = f.constant_gauss_map;
    j["minimal"] = f.minimal;
    j["properly_invariant"] = f.properly_invariant;
    j["has_killing_field"] = static_cast<bool>(f.killing);
    j["expected_region"] = f.expected_region;
    return j;
}

inline MaskPolicy policy(const RunConfig& c) { return MaskPolicy{c.margin, c.eps_deg}; }

inline Sol3Options sol3_options(const RunConfig& c) {
    Sol3Options o;
    o.eps_deg = c.eps_deg;
    o.scan = c.scan;
    o.newton_tol = c.newton_tol;
    o.accept_tol = c.accept_tol;
    o.cluster = c.cluster;
    o.margin = c.margin;
    return o;
}

inline std::filesystem::path sibling(const std::string& out, const std::string& ext) {
    std::filesystem::path p(out);
    p.replace_extension(ext);
    return p;
}

inline Json sol3_candidate_json(const MateCandidateSol3& c) {
    Json j;
    j["psi0"] = c.angles.psi0;
    j["phi0"] = c.angles.phi0;
    Json ir = Json::object();
    for (const auto& [name, v] : c.angles.integrability) ir[name] = v;
    j["integrability"] = std::move(ir);
    j["verification"] = to_json(c.verification);
    j["verdict"] = to_json(c.verdict);
    j["spectrum_deviation"] = c.spectrum_deviation;
    j["nu3_deviation"] = c.nu3_deviation;
    j["nu12_deviation"] = c.nu12_deviation;
    return j;
}

inline Json cmd_check(const RunConfig& c, Gates& g) {
    const Fixture f = load_fixture(c);
    Json r;
    r["fixture"] = fixture_json(f);
    ResidualReport rep;
    if (f.patch.model.is_ekt())
        rep = residuals_ekt(fundamental_data_ekt(f.patch), policy(c));
    else
        rep = residuals_sol3(fundamental_data_sol3(f.patch), policy(c));
    r["residuals"] = to_json(rep);
    for (const auto& ch : rep.channels)
        if (ch.gated) g.add("compat." + ch.name, ch.sup / rep.scale, c.tol);
    if (!c.out.empty()) {
        std::vector<std::pair<std::string, const Field<double>*>> cols;
        for (const auto& ch : rep.channels) cols.emplace_back(ch.name, &ch.values);
        write_text_atomic(sibling(c.out, ".csv"), per_sample_csv(f.patch.grid, cols));
    }
    return r;
}

inline Json cmd_mate(const RunConfig& c, Gates& g) {
    const Fixture f = load_fixture(c);
    if (!f.patch.model.is_ekt()) throw UsageError("mate works on E(kappa,tau) fixtures; use solve-sol3 for Sol3");
    const FundamentalDataEkt d = fundamental_data_ekt(f.patch);
    EktMateRequest req;
    req.cls = c.cls == "negative" ? OrientationClass::Negative : OrientationClass::Positive;
    req.subcase = c.subcase;
    req.theta0 = c.theta0;
    req.gate = c.tol;
    req.tol_region = c.tol_region;
    const EktMateRun run = find_mates_ekt(d, req, policy(c));

    Json r;
    r["fixture"] = fixture_json(f);
    const RegionField& reg = run.regions;
    r["regions"] = {{"dominant", region_name(reg.dominant)}, {"fraction", reg.dominant_fraction}, {"mixed", reg.mixed}, {"masked", reg.masked}};
    if (run.theta) {
        r["theta"] = {{"theta0", c.theta0}, {"consistency", run.theta->consistency}, {"tolerance", run.theta->tolerance}, {"ok", run.theta->ok}};
        g.add("theta.consistency", run.theta->consistency, run.theta->tolerance);
    }
    Json cands = Json::array();
    for (std::size_t k = 0; k < run.candidates.size(); ++k) {
        const MateCandidateEkt& m = run.candidates[k];
        int masked = 0;
        for (int i = 0; i < m.angle.size(); ++i)
            for (int j = 0; j < m.angle.size(); ++j) masked += m.angle.masked(i, j);
        const double worst = m.verification.worst_gated();
        cands.push_back({{"formula", run.formulas[k]},
                         {"relation", relation_name(m.relation)},
                         {"class", m.angle.cls == OrientationClass::Positive ? "positive" : "negative"},
                         {"masked_samples", masked},
                         {"unit_defect", m.angle.unit_defect()},
                         {"is_mate", worst <= c.tol && !m.verdict.congruent},
                         {"verification", to_json(m.verification)},
                         {"verdict", to_json(m.verdict)},
                         {"spectrum_deviation", m.spectrum_deviation},
                         {"nu3_deviation", m.nu3_deviation},
                         {"T3_norm_deviation", m.T3_norm_deviation}});
        const std::string p = "candidate" + std::to_string(k) + ".";
        g.add(p + "verification", worst, c.tol);
        g.add(p + "spectrum", m.spectrum_deviation, c.spectrum_tol);
        g.add(p + "nu3", m.nu3_deviation, c.invariant_tol);
        g.add(p + "T3_norm", m.T3_norm_deviation, c.invariant_tol);
        g.add(p + "unit_defect", m.angle.unit_defect(), c.invariant_tol);
    }
    r["candidates"] = std::move(cands);
    r["verified_mates"] = run.verified_mates;
    r["notes"] = run.notes;
    if (run.candidates.empty()) g.require("candidate_available", false);

    if (!c.out.empty() && !run.candidates.empty()) {
        const MateCandidateEkt& m = run.candidates.front();
        write_text_atomic(sibling(c.out, ".csv"), per_sample_csv(f.patch.grid, {{"cos_theta", &m.angle.c}, {"sin_theta", &m.angle.s}}));
        try {
            ReconstructOptions ro;
            ro.compat_gate = c.tol;
            ro.policy = policy(c);
            const Reconstruction rec = reconstruct(m.mate, ro);
            write_text_atomic(sibling(c.out, ".obj"), obj_grid(rec.position, d.name + "_mate"));
            r["mate_reconstruction"] = {{"defect", rec.defect}, {"drift", rec.drift}};
        } catch (const CompatGateFailed& e) {
            r["mate_reconstruction"] = {{"skipped", e.what()}};
        }
    }
    return r;
}

inline Json cmd_solve_sol3(const RunConfig& c, Gates& g) {
    const Fixture f = load_fixture(c);
    if (f.patch.model.is_ekt()) throw UsageError("solve-sol3 needs a Sol3 fixture");
    const FundamentalDataSol3 d = fundamental_data_sol3(f.patch);
    const Sol3Options opt = sol3_options(c);
    Json r;
    r["fixture"] = fixture_json(f);

    const RootScan rs = scan_roots(d, opt, c.stride);
    r["roots"] = {{"constant_gauss_map", rs.constant_gauss_map}, {"unmasked", rs.unmasked},   {"max_raw", rs.max_raw},
                  {"max_nontrivial", rs.max_nontrivial},         {"trivial_found", rs.trivial_count}, {"dropped_basins", rs.dropped}};
    g.add("roots.max_raw", rs.max_raw, 32);
    g.add("roots.max_nontrivial", rs.max_nontrivial, 7);
    g.require("roots.trivial_everywhere", rs.trivial_count == rs.unmasked);

    if (rs.constant_gauss_map) {
        const MateCandidateSol3 rot = rotation_family_sol3(d, c.theta0, policy(c));
        Json j = sol3_candidate_json(rot);
        j["theta0"] = c.theta0;
        j["is_mate"] = rot.verification.worst_gated() <= c.tol && !rot.verdict.congruent;
        r["rotation_family"] = std::move(j);
    } else {
        const MateSearch s = search_mates(d, opt, policy(c));
        Json att = Json::array();
        for (const auto& a : s.attempts) {
            Json j = {{"psi0", a.angles.psi0}, {"phi0", a.angles.phi0}, {"solved", a.solved}, {"reason", a.reason},
                      {"consistency", a.consistency}, {"tolerance", a.tolerance}};
            if (a.candidate) j["candidate"] = sol3_candidate_json(*a.candidate);
            att.push_back(std::move(j));
        }
        r["search"] = {{"start_roots", s.seeds.raw}, {"attempts", std::move(att)}, {"solved_nontrivial", s.solved_nontrivial}};

        if (c.seeds_u > 0 && c.seeds_v > 0) {
            int solved = 0;
            Json found = Json::array();
            for (int a = 0; a < c.seeds_u; ++a)
                for (int b = 0; b < c.seeds_v; ++b) {
                    const double psi0 = 2.0 * M_PI * a / c.seeds_u - M_PI, phi0 = 2.0 * M_PI * b / c.seeds_v - M_PI;
                    const Sol3SolveResult sr = solve_mate_system(d, psi0, phi0, opt, policy(c));
                    if (!sr.solved) continue;
                    ++solved;
                    if (!sr.candidate->verdict.congruent)
                        found.push_back({{"psi0", psi0}, {"phi0", phi0}, {"verification", sr.candidate->verification.worst_gated()},
                                         {"deviation", sr.candidate->verdict.deviation}});
                }
            r["seed_sweep"] = {{"seeds", {c.seeds_u, c.seeds_v}}, {"solved", solved}, {"nontrivial", std::move(found)}};
        }
    }

    if (c.reflection) {
        if (!f.killing) throw UsageError("fixture " + f.name + " has no Killing field for the reflection mate");
        const MateCandidateSol3 m = reflection_mate(d, killing_coefficients(f.patch, f.killing), policy(c));
        Json j = sol3_candidate_json(m);
        j["is_mate"] = m.verification.worst_gated() <= c.tol && !m.verdict.congruent;
        r["reflection"] = std::move(j);
        g.add("reflection.verification", m.verification.worst_gated(), c.tol);
        g.add("reflection.spectrum", m.spectrum_deviation, c.spectrum_tol);
        g.add("reflection.nu3", m.nu3_deviation, c.invariant_tol);
    }

    if (!c.out.empty()) {
        const int n = rs.raw.size();
        Field<double> raw(n), cls(n), nt(n), mk(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                raw(i, j) = rs.raw(i, j);
                cls(i, j) = rs.classes(i, j);
                nt(i, j) = rs.nontrivial(i, j);
                mk(i, j) = rs.masked(i, j);
            }
        write_text_atomic(sibling(c.out, ".csv"),
                          per_sample_csv(d.grid, {{"raw", &raw}, {"classes", &cls}, {"nontrivial", &nt}, {"masked", &mk}}));
    }
    return r;
}

inline Json cmd_reconstruct(const RunConfig& c, Gates& g) {
    const Fixture f = load_fixture(c);
    ReconstructOptions ro;
    ro.policy = policy(c);
    Json r;
    r["fixture"] = fixture_json(f);
    RoundTrip rt;
    ResidualReport rep;
    try {
        if (f.patch.model.is_ekt()) {
            const FundamentalDataEkt d = fundamental_data_ekt(f.patch);
            rep = residuals_ekt(d, ro.policy);
            rt = round_trip(f.patch, d, ro);
        } else {
            const FundamentalDataSol3 d = fundamental_data_sol3(f.patch);
            rep = residuals_sol3(d, ro.policy);
            rt = round_trip(f.patch, d, ro);
        }
    } catch (const CompatGateFailed& e) {
        r["error"] = e.what();
        g.require("compat_gate", false);
        return r;
    }
    const double floor = std::max(rep.worst_gated(), 1e-12);
    r["reconstruction"] = {{"distance", rt.distance}, {"defect", rt.rec.defect}, {"drift", rt.rec.drift},
                           {"max_correction", rt.rec.max_correction}, {"base", {rt.rec.base_i, rt.rec.base_j}},
                           {"compat_worst", rep.worst_gated()}};
    g.add("distance", rt.distance, c.roundtrip_tol);
    g.add("defect", rt.rec.defect, 10.0 * floor);
    if (!c.out.empty()) {
        write_text_atomic(sibling(c.out, ".obj"), obj_grid(rt.rec.position, f.name));
        write_text_atomic(sibling(c.out, ".csv"), per_sample_csv(f.patch.grid, {{"defect", &rt.rec.defect_field}}));
    }
    return r;
}

inline Json cmd_catalog(const RunConfig& c) {
    Json list = Json::array();
    for (const auto& info : catalog_list()) {
        if (!c.model.empty() && info.model != c.model) continue;
        Json j = fixture_json(make_fixture(info.name, 16));
        j["description"] = info.description;
        list.push_back(std::move(j));
    }
    return {{"fixtures", std::move(list)}};
}

}  // namespace detail

/// Runs one subcommand. args excludes the program name. Returns 0 iff every gate passes,
/// 1 on a failed gate, 2 on usage errors and 3 on runtime failures.
inline int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"bonnetlab: Bonnet mates in homogeneous 3-manifolds"};
    app.require_subcommand(1);
    struct Flags {
        std::string fixture, model, cls, subcase, seeds, out, config;
        int grid = 0;
        bool reflection = false;
        std::vector<std::string> params;
    } fl;
    std::vector<std::pair<CLI::App*, std::vector<CLI::Option*>>> subs;
    auto add = [&](const std::string& name, const std::string& desc) {
        CLI::App* s = app.add_subcommand(name, desc);
        std::vector<CLI::Option*> o;
        o.push_back(s->add_option("--config", fl.config, "key = value configuration file"));
        o.push_back(s->add_option("--model", fl.model, "ekt or sol3"));
        if (name != "catalog") {
            o.push_back(s->add_option("--fixture", fl.fixture, "catalog fixture name"));
            o.push_back(s->add_option("--grid", fl.grid, "intervals per axis"));
            o.push_back(s->add_option("--param", fl.params, "fixture parameter override name=value"));
        }
        o.push_back(s->add_option("--out", fl.out, "JSON report path; CSV/OBJ are written alongside"));
        if (name == "mate") {
            o.push_back(s->add_option("--class", fl.cls, "positive or negative"));
            o.push_back(s->add_option("--subcase", fl.subcase, "auto, a1, a2, b or m3[:theta0]"));
        }
        if (name == "solve-sol3") {
            o.push_back(s->add_option("--seeds", fl.seeds, "NxM grid of initial (psi, phi)"));
            o.push_back(s->add_flag("--reflection", fl.reflection, "also build the reflection mate"));
        }
        subs.emplace_back(s, o);
    };
    add("check", "compatibility residuals of a fixture");
    add("mate", "Bonnet mate candidates in E(kappa,tau)");
    add("solve-sol3", "pointwise root counts and the (psi, phi) system in Sol3");
    add("reconstruct", "frame integration round trip");
    add("catalog", "list fixtures");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    RunConfig c;
    detail::Gates gates;
    Json result;
    try {
        CLI::App* s = app.get_subcommands().front();
        c.command = s->get_name();
        if (!fl.config.empty()) load_config_file(fl.config, c);
        auto given = [&](const std::string& flag) { return s->get_option_no_throw(flag) && s->count(flag) > 0; };
        if (given("--fixture")) c.fixture = fl.fixture;
        if (given("--model")) c.model = fl.model;
        if (given("--grid")) c.grid = fl.grid;
        if (given("--out")) c.out = fl.out;
        if (given("--class")) c.cls = fl.cls;
        if (given("--subcase")) detail::parse_subcase(fl.subcase, c);
        if (given("--seeds")) detail::parse_seeds(fl.seeds, c);
        if (given("--reflection")) c.reflection = fl.reflection;
        for (const auto& p : fl.params) detail::parse_param(p, c);
        c.validate();

        if (c.command == "check") result = detail::cmd_check(c, gates);
        else if (c.command == "mate") result = detail::cmd_mate(c, gates);
        else if (c.command == "solve-sol3") result = detail::cmd_solve_sol3(c, gates);
        else if (c.command == "reconstruct") result = detail::cmd_reconstruct(c, gates);
        else result = detail::cmd_catalog(c);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }

    Json report;
    report["schema"] = kReportSchema;
    report["config"] = to_json(c);
    report["result"] = std::move(result);
    report["gates"] = gates.list;
    report["pass"] = gates.pass;
    if (c.out.empty()) {
        out << report.dump(2) << "\n";
    } else {
        write_json(c.out, report);
        out << c.command << " " << (gates.pass ? "PASS" : "FAIL") << " -> " << c.out << "\n";
    }
    return gates.pass ? 0 : 1;
}

}  // namespace bonnetlab
