// Acceptance gate: one PASS/FAIL line per criterion, exit status 0 only if every selected criterion passes.
// Usage: acceptance [id...]; no ids selects all nine.
#include "bonnetlab/bonnet_ekt.hpp"
#include "bonnetlab/bonnet_sol3.hpp"
#include "bonnetlab/compat.hpp"
#include "bonnetlab/congruence.hpp"
#include "bonnetlab/fixtures.hpp"
#include "bonnetlab/reconstruct.hpp"

#include <array>
#include <chrono>
#include <cstdlib>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

using namespace bonnetlab;

namespace {

constexpr int kCoarse = 64, kFine = 128;
constexpr double kCompatTol = 1e-4;
constexpr double kMinRatio = 3.0;
constexpr double kNoiseFloor = 1e-9;  // order test applies only above this scaled residual
constexpr double kGaussTol = 1e-3;
constexpr double kAngleUnitTol = 1e-10, kAngleSystemTol = 1e-10;
constexpr int kAngleSamples = 10000;
constexpr double kThetaFactor = 10.0;
constexpr double kPrincipalTol = 1e-10;
constexpr double kRoundTripTol = 1e-3, kDefectFactor = 10.0, kCorruptFactor = 100.0, kDefectFloor = 1e-12;
constexpr double kSpectrumTol = 1e-12, kInvariantTol = 1e-10;
constexpr double kRuntimeLimit = 10.0;

int failures = 0;
std::array<bool, 10> selected{};

void report(int id, bool ok, const std::string& what, const std::string& detail) {
    if (!selected[id]) return;
    std::printf("criterion %d %s: %s | %s\n", id, ok ? "PASS" : "FAIL", what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Convergence {
    double worst = 0.0;      // fine-grid worst scaled gated residual
    double min_ratio = 1e300;  // over channels above the noise floor
    std::string worst_channel, ratio_channel;
    bool ok = true;
};

Convergence convergence(const ResidualReport& coarse, const ResidualReport& fine) {
    Convergence c;
    for (const auto& ch : fine.channels) {
        if (!ch.gated) continue;
        const double f = ch.sup / fine.scale;
        if (f > c.worst) {
            c.worst = f;
            c.worst_channel = ch.name;
        }
        if (f <= kNoiseFloor) continue;
        const double r = coarse.scaled_sup(ch.name) / f;
        if (r < c.min_ratio) {
            c.min_ratio = r;
            c.ratio_channel = ch.name;
        }
    }
    c.ok = c.worst <= kCompatTol && (c.min_ratio == 1e300 || c.min_ratio >= kMinRatio);
    return c;
}

std::string describe(const Convergence& c) {
    if (c.min_ratio == 1e300) return fmt("worst %.2e (%s), all channels below noise floor", c.worst, c.worst_channel.c_str());
    return fmt("worst %.2e (%s), min ratio %.2f (%s)", c.worst, c.worst_channel.c_str(), c.min_ratio, c.ratio_channel.c_str());
}

ResidualReport residuals_of(const Fixture& f) {
    return f.patch.model.is_ekt() ? residuals_ekt(fundamental_data_ekt(f.patch)) : residuals_sol3(fundamental_data_sol3(f.patch));
}

// Independent invariants of a mate -------------------------------------------

// Eigenvalues of the operator S from its trace and determinant; the metric only enters through S.
std::array<double, 2> eigen_principal(const Mat2& S) {
    const double h = 0.5 * S.trace(), disc = std::sqrt(std::max(0.0, h * h - S.determinant()));
    return {h + disc, h - disc};
}

struct Invariants {
    double spectrum = 0.0, nu3 = 0.0, T3 = 0.0;
};

Invariants invariants(const FundamentalDataEkt& d, const FundamentalDataEkt& t, int margin = 4) {
    Invariants v;
    const int m = d.samples();
    for (int i = margin; i < m - margin; ++i)
        for (int j = margin; j < m - margin; ++j) {
            const Mat2& g = d.metric(i, j);
            const auto a = eigen_principal(d.S(i, j)), b = eigen_principal(t.S(i, j));
            v.spectrum = std::max({v.spectrum, std::abs(a[0] - b[0]), std::abs(a[1] - b[1])});
            v.nu3 = std::max(v.nu3, std::abs(t.nu3(i, j) - d.nu3(i, j)));
            v.T3 = std::max(v.T3, std::abs(std::sqrt(t.T3(i, j).dot(g * t.T3(i, j))) - std::sqrt(d.T3(i, j).dot(g * d.T3(i, j)))));
        }
    return v;
}

Invariants invariants(const FundamentalDataSol3& d, const FundamentalDataSol3& t, int margin = 4) {
    Invariants v;
    const int m = d.samples();
    const Sol3Derived dd = derive_sol3(d, calculus(d)), dt = derive_sol3(t, calculus(t));
    for (int i = margin; i < m - margin; ++i)
        for (int j = margin; j < m - margin; ++j) {
            const Mat2& g = d.metric(i, j);
            const auto a = eigen_principal(dd.S(i, j)), b = eigen_principal(dt.S(i, j));
            v.spectrum = std::max({v.spectrum, std::abs(a[0] - b[0]), std::abs(a[1] - b[1])});
            v.nu3 = std::max(v.nu3, std::abs(t.nu[2](i, j) - d.nu[2](i, j)));
            v.T3 = std::max(v.T3, std::abs(std::sqrt(t.T[2](i, j).dot(g * t.T[2](i, j))) - std::sqrt(d.T[2](i, j).dot(g * d.T[2](i, j)))));
        }
    return v;
}

struct MateLedger {
    int count = 0, failed = 0;
    Invariants worst;
    std::vector<std::string> failing;

    void add(const std::string& label, const Invariants& v) {
        ++count;
        worst.spectrum = std::max(worst.spectrum, v.spectrum);
        worst.nu3 = std::max(worst.nu3, v.nu3);
        worst.T3 = std::max(worst.T3, v.T3);
        if (!(v.spectrum <= kSpectrumTol && v.nu3 <= kInvariantTol && v.T3 <= kInvariantTol)) {
            ++failed;
            failing.push_back(fmt("%s (kappa %.1e)", label.c_str(), v.spectrum));
        }
    }
};

MateLedger mates;

// Criterion 1 and 2 ----------------------------------------------------------

void compat_criteria() {
    bool ok1 = true, ok2 = true;
    std::string d1, d2;
    double slowest = 0.0, worst_gauss = 0.0;
    for (const auto& info : catalog_list()) {
        const ResidualReport coarse = residuals_of(make_fixture(info.name, kCoarse));
        const auto t0 = std::chrono::steady_clock::now();
        const ResidualReport fine = residuals_of(make_fixture(info.name, kFine));
        const double dt = seconds_since(t0);
        slowest = std::max(slowest, dt);
        const Convergence c = convergence(coarse, fine);
        const bool pass = c.ok && dt <= kRuntimeLimit;
        ok1 = ok1 && pass;
        if (!pass) d1 += info.name + ": " + describe(c) + fmt(", %.2fs; ", dt);
        const Channel* g = fine.find("gauss");
        const double gv = g ? std::max(g->sup, g->sup / fine.scale) : 1e300;
        worst_gauss = std::max(worst_gauss, gv);
        if (!(gv <= kGaussTol)) {
            ok2 = false;
            d2 += info.name + fmt(" gauss %.2e; ", gv);
        }
    }
    report(1, ok1, "compat residuals at grid 128 with refinement order", d1 + fmt("slowest fixture %.2fs", slowest));
    report(2, ok2, "Gauss equation in both ambients at h = 1/128", d2 + fmt("worst %.2e", worst_gauss));
}

// Criterion 3 ----------------------------------------------------------------

struct Sys {
    double m00, m01, m10, m11, r0, r1;
    double residual(const Angle& x) const {
        const double e0 = m00 * x.c + m01 * x.s - r0, e1 = m10 * x.c + m11 * x.s - r1;
        const double norm = std::sqrt(m00 * m00 + m01 * m01 + m10 * m10 + m11 * m11);
        return std::hypot(e0, e1) / std::max(1.0, norm);
    }
};

// (a~, b~) for the relation used by the positive and a2 formulas.
std::array<double, 2> relation3(double a, double b, double H, double t) {
    const double R = std::sqrt(H * H + t * t);
    return {(-H * a + t * b) / R, (H * b + t * a) / R};
}

Sys positive_sys(double k1, double k2, double t, double a, double b, double at, double bt) {
    const double P = -k1 * at + t * bt, Q = -k2 * bt - t * at;
    return {P, Q, Q, -P, -k1 * a + t * b, -k2 * b - t * a};
}

Sys negative_sys(double k1, double k2, double t, double a, double b, double at, double bt) {
    const double P = -k1 * at + t * bt, Q = -k2 * bt - t * at;
    return {P, Q, -Q, P, -k1 * a + t * b, -k2 * b - t * a};
}

void angle_criterion() {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    struct Stat {
        const char* name;
        double unit = 0.0, sys = 0.0;
        int evaluated = 0, degenerate = 0;
    };
    std::array<Stat, 6> st{{{"tau0_m1"}, {"tau0_m2"}, {"positive"}, {"negative_a1"}, {"negative_a2"}, {"negative_b"}}};
    for (int n = 0; n < kAngleSamples; ++n) {
        double k1 = u(rng), k2 = u(rng);
        const double t = u(rng), a = u(rng), b = u(rng), B1 = u(rng), B2 = u(rng);
        if (k1 < k2) std::swap(k1, k2);
        const double H = 0.5 * (k1 + k2);
        auto run = [&](Stat& s, auto&& eval, auto&& sys) {
            try {
                const Angle x = eval();
                s.unit = std::max(s.unit, std::abs(x.c * x.c + x.s * x.s - 1.0));
                s.sys = std::max(s.sys, sys().residual(x));
                ++s.evaluated;
            } catch (const NoUniqueAngle&) {
                ++s.degenerate;
            }
        };
        run(st[0], [&] { return mate_angle_tau0_M1(k1, k2, a, b); },
            [&] { return Sys{k1 * a, -k2 * b, k2 * b, k1 * a, k1 * a, -k2 * b}; });
        // M2 asks for the nontrivial unit solution of B1 c + B2 s = B1; the line's second row pins (c, s) away from (1, 0).
        run(st[1], [&] { return mate_angle_tau0_M2(B1, B2); },
            [&] { return Sys{B1, B2, B2, -B1, B1, -B2}; });
        run(st[2], [&] { return mate_angle_positive(k1, k2, t, a, b); }, [&] {
            const auto r = relation3(a, b, H, t);
            return positive_sys(k1, k2, t, a, b, r[0], r[1]);
        });
        run(st[3], [&] { return mate_angle_negative_a1(k1, k2, t, a, b); }, [&] { return negative_sys(k1, k2, t, a, b, a, b); });
        run(st[4], [&] { return mate_angle_negative_a2(H, t); }, [&] {
            const auto r = relation3(a, b, H, t);
            return negative_sys(k1, k2, t, a, b, r[0], r[1]);
        });
        run(st[5], [&] { return mate_angle_negative_b(B1, B2); }, [&] { return Sys{B1, B2, B2, -B1, B1, -B2}; });
    }
    bool ok = true;
    std::string d;
    for (const auto& s : st) {
        const bool pass = s.unit <= kAngleUnitTol && s.sys <= kAngleSystemTol && s.evaluated >= kAngleSamples - 10;
        ok = ok && pass;
        d += fmt("%s unit %.1e sys %.1e (%d/%d); ", s.name, s.unit, s.sys, s.evaluated, kAngleSamples);
    }
    const double r = 1.0 / std::sqrt(2.0);
    const Angle w = mate_angle_tau0_M1(1.0, 2.0, r, r);
    const bool worked = std::abs(w.c + 0.6) <= 1e-15 && std::abs(w.s + 0.8) <= 1e-15;
    report(3, ok && worked, "closed-form angles: unit norm, defining systems, worked value",
           d + fmt("worked (%.17g, %.17g)", w.c, w.s));
}

// Criterion 4 and 5 ----------------------------------------------------------

bool near_orbit(double theta) {
    const double r = std::remainder(theta, M_PI);
    return std::abs(r) < 1e-12;
}

void cylinder_criterion() {
    const FundamentalDataEkt coarse = fundamental_data_ekt(make_fixture("ekt_vertical_cylinder", kCoarse).patch);
    const FundamentalDataEkt fine = fundamental_data_ekt(make_fixture("ekt_vertical_cylinder", kFine).patch);
    const double h2 = fine.grid.hu() * fine.grid.hv();
    bool ok = true;
    double worst_cons = 0.0, worst_res = 0.0, worst_ratio = 1e300;
    std::string d;
    for (int k = 0; k < 16; ++k) {
        const double th0 = 2.0 * M_PI * k / 16.0;
        EktMateRequest req;
        req.subcase = "m3";
        req.theta0 = th0;
        const EktMateRun rc = find_mates_ekt(coarse, req), rf = find_mates_ekt(fine, req);
        if (!rf.theta || rf.candidates.size() != 1 || rc.candidates.size() != 1) {
            ok = false;
            d += fmt("theta0 %.3f produced no candidate; ", th0);
            continue;
        }
        worst_cons = std::max(worst_cons, rf.theta->consistency);
        const MateCandidateEkt& c = rf.candidates[0];
        const Convergence cv = convergence(rc.candidates[0].verification, c.verification);
        worst_res = std::max(worst_res, cv.worst);
        if (cv.min_ratio != 1e300) worst_ratio = std::min(worst_ratio, cv.min_ratio);
        const bool orbit = near_orbit(th0);
        const bool verdict_ok = orbit ? c.verdict.congruent : !c.verdict.congruent;
        if (!(rf.theta->consistency <= kThetaFactor * h2 && cv.ok && verdict_ok)) {
            ok = false;
            d += fmt("theta0 %.3f: consistency %.1e, %s, congruent %d; ", th0, rf.theta->consistency, describe(cv).c_str(),
                     static_cast<int>(c.verdict.congruent));
        }
        if (!orbit) mates.add(fmt("cylinder theta0 %.3f", th0), invariants(fine, c.mate));
    }
    report(4, ok, "vertical cylinder: 16 theta0, consistency, mates, congruence outside {0, pi}",
           d + fmt("consistency %.1e <= %.1e, residual %.1e, min ratio %s", worst_cons, kThetaFactor * h2, worst_res,
                   worst_ratio == 1e300 ? "below noise floor" : fmt("%.2f", worst_ratio).c_str()));
}

void associate_criterion() {
    const FundamentalDataEkt coarse = fundamental_data_ekt(make_fixture("ekt_vertical_plane", kCoarse).patch);
    const FundamentalDataEkt fine = fundamental_data_ekt(make_fixture("ekt_vertical_plane", kFine).patch);
    bool ok = true;
    double worst = 0.0;
    std::string d;
    for (int k = 0; k < 8; ++k) {
        const double th0 = 2.0 * M_PI * k / 8.0;
        const FundamentalDataEkt mc = associate_family(coarse, th0), mf = associate_family(fine, th0);
        const Convergence cv = convergence(residuals_ekt(mc), residuals_ekt(mf));
        worst = std::max(worst, cv.worst);
        if (!cv.ok) {
            ok = false;
            d += fmt("theta0 %.3f: %s; ", th0, describe(cv).c_str());
        }
        if (!near_orbit(th0)) mates.add(fmt("associate theta0 %.3f", th0), invariants(fine, mf));
    }
    report(5, ok, "associate family of the vertical plane for 8 theta0", d + fmt("worst residual %.2e", worst));
}

// Criterion 6 and 7 ----------------------------------------------------------

void root_count_criterion() {
    bool ok = true;
    std::string d;
    for (const char* name : {"sol3_geodesic_plane", "sol3_invariant_plane", "sol3_graph"}) {
        const FundamentalDataSol3 data = fundamental_data_sol3(make_fixture(name, kCoarse).patch);
        const auto t0 = std::chrono::steady_clock::now();
        const RootScan rs = scan_roots(data);
        const bool pass = rs.max_raw <= 32 && rs.max_nontrivial <= 7 && rs.trivial_count == rs.unmasked;
        ok = ok && pass;
        d += fmt("%s: %d samples, max raw %d, max nontrivial %d, trivial %d/%d%s (%.1fs); ", name, rs.unmasked, rs.max_raw,
                 rs.max_nontrivial, rs.trivial_count, rs.unmasked, rs.constant_gauss_map ? ", constant Gauss map" : "",
                 seconds_since(t0));
    }
    report(6, ok, "Sol3 pointwise root counts at every unmasked sample (grid 64)", d);
}

void reflection_criterion() {
    const Fixture fc = make_fixture("sol3_invariant_plane", kCoarse), ff = make_fixture("sol3_invariant_plane", kFine);
    const FundamentalDataSol3 dc = fundamental_data_sol3(fc.patch), df = fundamental_data_sol3(ff.patch);
    const MateCandidateSol3 mc = reflection_mate(dc, killing_coefficients(fc.patch, fc.killing));
    const MateCandidateSol3 mf = reflection_mate(df, killing_coefficients(ff.patch, ff.killing));
    const Convergence cv = convergence(mc.verification, mf.verification);
    const double kappa = compare_principal_curvatures(df, mf.mate);
    const bool ok = cv.ok && kappa <= kPrincipalTol && !mf.verdict.congruent;
    mates.add("sol3 reflection", invariants(df, mf.mate));
    report(7, ok, "reflection mate on the invariant plane",
           describe(cv) + fmt(", principal curvatures %.1e, congruent %d (deviation %.3f)", kappa,
                              static_cast<int>(mf.verdict.congruent), mf.verdict.deviation));

    // Integrated mates found from the pointwise roots; their spectrum carries the difference error of grad nu~.
    const MateSearch sc = search_mates(dc), sf = search_mates(df);
    for (const auto& a : sf.attempts) {
        if (!a.solved || a.candidate->verdict.congruent) continue;
        std::string label = fmt("sol3 search phi0 %.3f", a.angles.phi0);
        const Invariants v = invariants(df, a.candidate->mate);
        for (const auto& b : sc.attempts)
            if (b.solved && !b.candidate->verdict.congruent && std::abs(std::remainder(b.angles.phi0 - a.angles.phi0, 2.0 * M_PI)) < 1e-3)
                label += fmt(", %.1e at grid 64", invariants(dc, b.candidate->mate).spectrum);
        mates.add(label, v);
    }
}

// Criterion 8 ----------------------------------------------------------------

double bump(const GridSpec& g, int i, int j) {
    const double x = g.u(i) - 0.3, y = g.v(j) - 0.7;
    return 0.05 * std::exp(-(x * x + y * y) / 0.02);
}

void reconstruction_criterion() {
    bool ok = true;
    std::string d;
    double worst_dist = 0.0, worst_defect_ratio = 0.0, weakest_corruption = 1e300;
    ReconstructOptions ungated;
    ungated.compat_gate = -1.0;
    for (const auto& info : catalog_list()) {
        const Fixture f = make_fixture(info.name, kFine);
        RoundTrip clean, bad;
        double compat;
        if (f.patch.model.is_ekt()) {
            const FundamentalDataEkt data = fundamental_data_ekt(f.patch);
            FundamentalDataEkt corrupt = data;
            for (int i = 0; i < data.samples(); ++i)
                for (int j = 0; j < data.samples(); ++j) corrupt.nu3(i, j) += bump(data.grid, i, j);
            compat = residuals_ekt(data).worst_gated();
            clean = round_trip(f.patch, data);
            bad = round_trip(f.patch, corrupt, ungated);
        } else {
            const FundamentalDataSol3 data = fundamental_data_sol3(f.patch);
            FundamentalDataSol3 corrupt = data;
            for (int i = 0; i < data.samples(); ++i)
                for (int j = 0; j < data.samples(); ++j) corrupt.nu[2](i, j) += bump(data.grid, i, j);
            compat = residuals_sol3(data).worst_gated();
            clean = round_trip(f.patch, data);
            bad = round_trip(f.patch, corrupt, ungated);
        }
        const double floor = std::max(compat, kDefectFloor);
        const double corruption = bad.rec.defect / std::max(clean.rec.defect, 1e-300);
        const bool pass = clean.distance <= kRoundTripTol && clean.rec.defect <= kDefectFactor * floor && corruption >= kCorruptFactor;
        worst_dist = std::max(worst_dist, clean.distance);
        worst_defect_ratio = std::max(worst_defect_ratio, clean.rec.defect / floor);
        weakest_corruption = std::min(weakest_corruption, corruption);
        if (!pass) {
            ok = false;
            d += fmt("%s: distance %.1e, defect %.1e vs compat %.1e, corrupted defect %.1e; ", info.name.c_str(), clean.distance,
                     clean.rec.defect, compat, bad.rec.defect);
        }
    }
    report(8, ok, "reconstruction round trip at h = 1/128",
           d + fmt("worst distance %.2e, defect/compat %.2f, smallest corruption ratio %.1e", worst_dist, worst_defect_ratio,
                   weakest_corruption));
}

// Criterion 9 ----------------------------------------------------------------

void invariant_criterion() {
    // Negative mates from the closed forms on the graph, kept when they verify.
    const FundamentalDataEkt g = fundamental_data_ekt(make_fixture("ekt_graph", kFine, {{"tau", 0.0}}).patch);
    EktMateRequest req;
    req.cls = OrientationClass::Negative;
    for (const auto& c : find_mates_ekt(g, req).candidates)
        if (c.verification.worst_gated() <= kCompatTol && !c.verdict.congruent) mates.add("graph negative", invariants(g, c.mate));

    std::string d = fmt("%d mates, worst kappa %.1e, nu3 %.1e, |T3| %.1e", mates.count, mates.worst.spectrum, mates.worst.nu3,
                        mates.worst.T3);
    for (const auto& f : mates.failing) d += "; " + f;
    report(9, mates.count > 0 && mates.failed == 0, "mates keep principal curvatures, nu3 and |T3|", d);
}

}  // namespace

int main(int argc, char** argv) {
    for (int a = 1; a < argc; ++a) {
        const int id = std::atoi(argv[a]);
        if (id < 1 || id > 9) {
            std::fprintf(stderr, "unknown criterion: %s\n", argv[a]);
            return 2;
        }
        selected[id] = true;
    }
    if (argc == 1) selected.fill(true);
    const auto t0 = std::chrono::steady_clock::now();
    compat_criteria();
    angle_criterion();
    cylinder_criterion();
    associate_criterion();
    root_count_criterion();
    reflection_criterion();
    reconstruction_criterion();
    invariant_criterion();
    std::printf("%d selected criteria failed, %.1fs\n", failures, seconds_since(t0));
    return failures == 0 ? 0 : 1;
}
