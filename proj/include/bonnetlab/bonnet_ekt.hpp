#pragma once

#include "bonnetlab/congruence.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace bonnetlab {

struct NoUniqueAngle : std::domain_error {
    using std::domain_error::domain_error;
};

struct PreconditionFailed : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// (cos theta, sin theta).
struct Angle {
    double c = 1.0, s = 0.0;
};

enum class Region { M1, M2, M3, Masked };

inline std::string region_name(Region r) {
    switch (r) {
        case Region::M1: return "M1";
        case Region::M2: return "M2";
        case Region::M3: return "M3";
        default: return "masked";
    }
}

struct RegionOptions {
    double tol_region = 1e-8;  // on squared gradient norms, scaled by (1 + sup|kappa|)^2
    int margin = 4;
};

struct RegionField {
    Field<Region> labels;
    Region dominant = Region::Masked;
    double dominant_fraction = 0.0;
    bool mixed = false;
    std::array<int, 3> counts{0, 0, 0};
    int masked = 0;
};

inline RegionField classify_regions(const FundamentalDataEkt& d, const RegionOptions& opt = {}) {
    const int m = d.samples();
    const IntrinsicCalculus calc = calculus(d);
    Field<double> H(m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) H(i, j) = 0.5 * d.S(i, j).trace();
    const Field<Vec2> gn = calc.gradient(d.nu3), gH = calc.gradient(H);
    const double sc = ekt_kappa_scale(d, opt.margin);
    const double tol = opt.tol_region * sc * sc;
    RegionField r;
    r.labels = Field<Region>(m, Region::Masked);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            if (i < opt.margin || j < opt.margin || i >= m - opt.margin || j >= m - opt.margin) {
                ++r.masked;
                continue;
            }
            const double n2 = calc.inner(i, j, gn(i, j), gn(i, j)), h2 = calc.inner(i, j, gH(i, j), gH(i, j));
            const Region lab = n2 > tol ? Region::M1 : (h2 > tol ? Region::M2 : Region::M3);
            r.labels(i, j) = lab;
            ++r.counts[static_cast<int>(lab)];
        }
    const int total = r.counts[0] + r.counts[1] + r.counts[2];
    if (total == 0) throw PreconditionFailed("all samples masked");
    const int k = static_cast<int>(std::max_element(r.counts.begin(), r.counts.end()) - r.counts.begin());
    r.dominant = static_cast<Region>(k);
    r.dominant_fraction = static_cast<double>(r.counts[k]) / total;
    r.mixed = r.dominant_fraction < 0.9;
    return r;
}

// Closed-form angles ----------------------------------------------------------
// a = <T3, e1>, b = <T3, e2> in the principal frame (k1 >= k2, e2 = J e1).

inline constexpr double kAngleTol = 1e-14;

inline Angle mate_angle_tau0_M1(double k1, double k2, double a, double b) {
    const double den = k1 * k1 * a * a + k2 * k2 * b * b;
    if (std::abs(k1 * k1 - k2 * k2) <= kAngleTol * (1.0 + k1 * k1 + k2 * k2))
        throw NoUniqueAngle("minimal or umbilic sample: k1^2 = k2^2");
    if (den <= kAngleTol * (1.0 + k1 * k1 + k2 * k2)) throw NoUniqueAngle("gradient of nu3 vanishes");
    return {(k1 * k1 * a * a - k2 * k2 * b * b) / den, -2.0 * k1 * k2 * a * b / den};
}

/// B1 = <grad H, T3>, B2 = <grad H, J T3>.
inline Angle mate_angle_tau0_M2(double B1, double B2) {
    const double den = B1 * B1 + B2 * B2;
    if (den <= kAngleTol) throw NoUniqueAngle("gradient of H vanishes along T3");
    return {(B1 * B1 - B2 * B2) / den, 2.0 * B1 * B2 / den};
}

namespace detail {
inline double positive_denominator(double k1, double k2, double t, double a, double b) {
    return a * a * (k1 * k1 + t * t) + 2.0 * t * a * b * (k2 - k1) + b * b * (k2 * k2 + t * t);
}
}  // namespace detail

/// Positive class, tau != 0, relation (3). The sine carries the sign that solves the defining system.
inline Angle mate_angle_positive(double k1, double k2, double t, double a, double b) {
    const double H = 0.5 * (k1 + k2);
    const double D = detail::positive_denominator(k1, k2, t, a, b);
    const double R2 = std::sqrt(4.0 * H * H + 4.0 * t * t);
    if (D <= kAngleTol * (1.0 + k1 * k1 + k2 * k2 + t * t)) throw NoUniqueAngle("gradient of nu3 vanishes");
    if (R2 <= kAngleTol) throw NoUniqueAngle("H and tau both vanish");
    const double cn = -a * a * (2.0 * H * k1 * k1 + t * t * (3.0 * k1 - k2)) + 2.0 * t * a * b * (k1 * k1 + k2 * k2 + 2.0 * t * t) +
                      b * b * (2.0 * H * k2 * k2 - t * t * (k1 - 3.0 * k2));
    const double sn = 2.0 * (k1 * k2 + t * t) * (a * b * (k1 + k2) + t * (a - b) * (a + b));
    return {cn / (R2 * D), sn / (R2 * D)};
}

/// The same closed form with the opposite sine sign; equals (c, -s) of mate_angle_positive.
inline Angle mate_angle_positive_printed(double k1, double k2, double t, double a, double b) {
    const Angle r = mate_angle_positive(k1, k2, t, a, b);
    return {r.c, -r.s};
}

inline Angle mate_angle_negative_a1(double k1, double k2, double t, double a, double b) {
    const double p = -k1 * a + t * b, q = k2 * b + t * a;
    const double den = p * p + q * q;
    if (den <= kAngleTol * (1.0 + k1 * k1 + k2 * k2 + t * t)) throw NoUniqueAngle("gradient of nu3 vanishes");
    return {(p * p - q * q) / den, -2.0 * p * q / den};
}

inline Angle mate_angle_negative_a2(double H, double t) {
    const double R = std::hypot(H, t);
    if (R <= kAngleTol) throw NoUniqueAngle("H and tau both vanish");
    return {-H / R, -t / R};
}

inline Angle mate_angle_negative_b(double B1, double B2) { return mate_angle_tau0_M2(B1, B2); }

// Relations between (<T~3, e~1>, <T~3, e~2>) and (a, b) -----------------------

/// Same keeps (a, b); Relation1..4 are alpha = 0, pi, arctan(-tau/H) + pi, arctan(-tau/H) in
/// (a~, b~) = (cos alpha a + sin alpha b, sin alpha a - cos alpha b).
enum class TRelation { Same, Relation1, Relation2, Relation3, Relation4 };

inline std::string relation_name(TRelation r) {
    switch (r) {
        case TRelation::Same: return "same";
        case TRelation::Relation1: return "relation1";
        case TRelation::Relation2: return "relation2";
        case TRelation::Relation3: return "relation3";
        case TRelation::Relation4: return "relation4";
    }
    return "";
}

inline std::array<double, 2> apply_relation(TRelation r, double a, double b, double H, double t) {
    switch (r) {
        case TRelation::Same: return {a, b};
        case TRelation::Relation1: return {a, -b};
        case TRelation::Relation2: return {-a, b};
        case TRelation::Relation3:
        case TRelation::Relation4: {
            const double R = std::hypot(H, t);
            if (R <= kAngleTol) throw NoUniqueAngle("H and tau both vanish");
            const double s = r == TRelation::Relation3 ? 1.0 : -1.0;
            return {s * (-H * a + t * b) / R, s * (H * b + t * a) / R};
        }
    }
    return {a, b};
}

// Angle fields and mate assembly ---------------------------------------------

enum class OrientationClass { Positive, Negative };

struct AngleField {
    Field<double> c, s;
    Field<unsigned char> masked;
    OrientationClass cls = OrientationClass::Positive;

    AngleField() = default;
    AngleField(int m, OrientationClass k) : c(m, 1.0), s(m, 0.0), masked(m, 0), cls(k) {}
    static AngleField constant(int m, double theta, OrientationClass k) {
        AngleField f(m, k);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                f.c(i, j) = std::cos(theta);
                f.s(i, j) = std::sin(theta);
            }
        return f;
    }
    int size() const { return c.size(); }
    /// sup |c^2 + s^2 - 1| over unmasked samples.
    double unit_defect() const {
        double w = 0.0;
        for (int i = 0; i < size(); ++i)
            for (int j = 0; j < size(); ++j)
                if (!masked(i, j)) w = std::max(w, std::abs(c(i, j) * c(i, j) + s(i, j) * s(i, j) - 1.0));
        return w;
    }
};

enum class AngleFormula { Tau0M1, Tau0M2, Positive, NegativeA1, NegativeA2, NegativeB };

/// Evaluates a closed-form angle at every sample; samples where it is undefined are masked.
inline AngleField angle_field(const FundamentalDataEkt& d, AngleFormula formula, int margin = 4) {
    const int m = d.samples();
    const double t = d.model.tau;
    const IntrinsicCalculus calc = calculus(d);
    Field<double> H(m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) H(i, j) = 0.5 * d.S(i, j).trace();
    const Field<Vec2> gH = calc.gradient(H);
    const bool negative = formula == AngleFormula::NegativeA1 || formula == AngleFormula::NegativeA2 || formula == AngleFormula::NegativeB;
    AngleField f(m, negative ? OrientationClass::Negative : OrientationClass::Positive);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            if (i < margin || j < margin || i >= m - margin || j >= m - margin) {
                f.masked(i, j) = 1;
                continue;
            }
            const Principal p = principal(d.metric(i, j), d.S(i, j), d.sigma(i, j));
            const Vec2& T3 = d.T3(i, j);
            const double a = calc.inner(i, j, T3, p.e1), b = calc.inner(i, j, T3, p.e2);
            const double B1 = calc.inner(i, j, gH(i, j), T3), B2 = calc.inner(i, j, gH(i, j), d.J(i, j) * T3);
            const bool needs_frame = formula == AngleFormula::Tau0M1 || formula == AngleFormula::Positive || formula == AngleFormula::NegativeA1;
            if (needs_frame && p.umbilic) {
                f.masked(i, j) = 1;
                continue;
            }
            try {
                Angle ang;
                switch (formula) {
                    case AngleFormula::Tau0M1: ang = mate_angle_tau0_M1(p.k1, p.k2, a, b); break;
                    case AngleFormula::Tau0M2: ang = mate_angle_tau0_M2(B1, B2); break;
                    case AngleFormula::Positive: ang = mate_angle_positive(p.k1, p.k2, t, a, b); break;
                    case AngleFormula::NegativeA1: ang = mate_angle_negative_a1(p.k1, p.k2, t, a, b); break;
                    case AngleFormula::NegativeA2: ang = mate_angle_negative_a2(H(i, j), t); break;
                    case AngleFormula::NegativeB: ang = mate_angle_negative_b(B1, B2); break;
                }
                f.c(i, j) = ang.c;
                f.s(i, j) = ang.s;
            } catch (const NoUniqueAngle&) {
                f.masked(i, j) = 1;
            }
        }
    return f;
}

struct ThetaOptions {
    double eps_deg = 1e-8;
    double consistency_factor = 10.0;  // tolerance = factor * h^2
};

struct ThetaResult {
    AngleField angle;
    double consistency = 0.0;
    double tolerance = 0.0;
    bool ok = false;
};

/// Integrates grad theta = 2 H nu3 / (1 - nu3^2) J (T3 - Rot_theta T3) from theta0 at sample (0, 0),
/// rows first, with the column-first integration as cross-check.
inline ThetaResult integrate_theta_M3(const FundamentalDataEkt& d, double theta0, const ThetaOptions& opt = {}) {
    if (classify_regions(d).dominant != Region::M3) throw PreconditionFailed("principal curvatures are not constant on the patch");
    const int m = d.samples();
    const double hu = d.grid.hu(), hv = d.grid.hv();
    // d theta / d u_k = (1 - cos theta) P_k + sin theta Q_k.
    Field<Vec2> P(m), Q(m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const double n = d.nu3(i, j), w = 1.0 - n * n;
            if (w < opt.eps_deg) throw PreconditionFailed("1 - nu3^2 below the degeneracy threshold");
            const double k = 2.0 * 0.5 * d.S(i, j).trace() * n / w;
            const Mat2& g = d.metric(i, j);
            P(i, j) = k * (g * (d.J(i, j) * d.T3(i, j)));
            Q(i, j) = k * (g * d.T3(i, j));
        }
    auto rhs = [&](double th, const Vec2& p, const Vec2& q, int axis) { return (1.0 - std::cos(th)) * p(axis) + std::sin(th) * q(axis); };
    // One RK4 step along an axis between neighbouring samples; midpoint coefficients by averaging.
    auto step = [&](double th, int i0, int j0, int i1, int j1, int axis, double h) {
        const Vec2 pm = 0.5 * (P(i0, j0) + P(i1, j1)), qm = 0.5 * (Q(i0, j0) + Q(i1, j1));
        const double k1 = rhs(th, P(i0, j0), Q(i0, j0), axis);
        const double k2 = rhs(th + 0.5 * h * k1, pm, qm, axis);
        const double k3 = rhs(th + 0.5 * h * k2, pm, qm, axis);
        const double k4 = rhs(th + h * k3, P(i1, j1), Q(i1, j1), axis);
        return th + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    };
    Field<double> rowf(m), colf(m);
    rowf(0, 0) = colf(0, 0) = theta0;
    for (int i = 1; i < m; ++i) rowf(i, 0) = step(rowf(i - 1, 0), i - 1, 0, i, 0, 0, hu);
    for (int i = 0; i < m; ++i)
        for (int j = 1; j < m; ++j) rowf(i, j) = step(rowf(i, j - 1), i, j - 1, i, j, 1, hv);
    for (int j = 1; j < m; ++j) colf(0, j) = step(colf(0, j - 1), 0, j - 1, 0, j, 1, hv);
    for (int j = 0; j < m; ++j)
        for (int i = 1; i < m; ++i) colf(i, j) = step(colf(i - 1, j), i - 1, j, i, j, 0, hu);

    ThetaResult r;
    r.angle = AngleField(m, OrientationClass::Positive);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            r.angle.c(i, j) = std::cos(rowf(i, j));
            r.angle.s(i, j) = std::sin(rowf(i, j));
            const double diff = std::remainder(rowf(i, j) - colf(i, j), 2.0 * M_PI);
            r.consistency = std::max(r.consistency, std::abs(diff));
        }
    r.tolerance = opt.consistency_factor * hu * hv;
    r.ok = r.consistency <= r.tolerance;
    return r;
}

struct MateCandidateEkt {
    AngleField angle;
    TRelation relation = TRelation::Same;
    FundamentalDataEkt mate;
    ResidualReport verification;
    CongruenceVerdict verdict;
    double spectrum_deviation = 0.0;
    double nu3_deviation = 0.0;
    double T3_norm_deviation = 0.0;
};

/// Pointwise transformation of data by an angle field. Positive class: S~ = Rot S Rot^-1,
/// T~3 = a~ Rot e1 + b~ Rot e2. Negative class: Sym in place of Rot and J~ = -J.
inline FundamentalDataEkt transform_ekt_data(const FundamentalDataEkt& d, const AngleField& ang, TRelation rel,
                                             Field<unsigned char>* frame_masked = nullptr) {
    const int m = d.samples();
    FundamentalDataEkt r = d;
    r.name = d.name + "~";
    const bool neg = ang.cls == OrientationClass::Negative;
    const bool needs_frame = neg || rel != TRelation::Same;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const Mat2 J = d.J(i, j);
            const Mat2 Rot = ang.c(i, j) * Mat2::Identity() + ang.s(i, j) * J;
            if (!needs_frame) {
                r.S(i, j) = Rot * d.S(i, j) * Rot.inverse();
                r.T3(i, j) = Rot * d.T3(i, j);
                continue;
            }
            const Mat2& g = d.metric(i, j);
            const Principal p = principal(g, d.S(i, j), d.sigma(i, j));
            if (p.umbilic && frame_masked) (*frame_masked)(i, j) = 1;
            const double a = p.e1.dot(g * d.T3(i, j)), b = p.e2.dot(g * d.T3(i, j));
            const auto ab = apply_relation(rel, a, b, 0.5 * d.S(i, j).trace(), d.model.tau);
            Mat2 M = Rot;
            if (neg) {
                const Mat2 R0 = 2.0 * p.e1 * (g * p.e1).transpose() - Mat2::Identity();
                M = Rot * R0;
                r.sigma(i, j) = -d.sigma(i, j);
            }
            r.S(i, j) = M * d.S(i, j) * M.inverse();
            r.T3(i, j) = ab[0] * (M * p.e1) + ab[1] * (M * p.e2);
        }
    return r;
}

namespace detail {
inline void mate_invariants(const FundamentalDataEkt& d, const FundamentalDataEkt& t, MateCandidateEkt& out, int margin) {
    const int m = d.samples();
    out.spectrum_deviation = compare_principal_curvatures(d, t, margin);
    for (int i = margin; i < m - margin; ++i)
        for (int j = margin; j < m - margin; ++j) {
            const Mat2& g = d.metric(i, j);
            out.nu3_deviation = std::max(out.nu3_deviation, std::abs(t.nu3(i, j) - d.nu3(i, j)));
            const double n0 = std::sqrt(d.T3(i, j).dot(g * d.T3(i, j))), n1 = std::sqrt(t.T3(i, j).dot(g * t.T3(i, j)));
            out.T3_norm_deviation = std::max(out.T3_norm_deviation, std::abs(n1 - n0));
        }
}
}  // namespace detail

inline MateCandidateEkt assemble_mate_ekt(const FundamentalDataEkt& d, const AngleField& ang, TRelation rel,
                                          const MaskPolicy& policy = {}, const CongruenceOptions& copt = {}) {
    if (ang.size() != d.samples()) throw std::invalid_argument("angle field and data grid differ");
    MateCandidateEkt out;
    out.angle = ang;
    out.relation = rel;
    out.mate = transform_ekt_data(d, ang, rel);
    out.verification = residuals_ekt(out.mate, policy);
    out.verdict = congruence_test(d, out.mate, copt);
    detail::mate_invariants(d, out.mate, out, policy.margin);
    return out;
}

/// Constant rotation of the data of a minimal patch in a product space.
inline FundamentalDataEkt associate_family(const FundamentalDataEkt& d, double theta0, int margin = 4) {
    if (d.model.tau != 0.0) throw PreconditionFailed("associate family requires tau = 0");
    const int m = d.samples();
    double supH = 0.0;
    for (int i = margin; i < m - margin; ++i)
        for (int j = margin; j < m - margin; ++j) supH = std::max(supH, std::abs(0.5 * d.S(i, j).trace()));
    if (supH > 1e-6 * ekt_kappa_scale(d, margin)) throw PreconditionFailed("patch is not minimal");
    FundamentalDataEkt r = transform_ekt_data(d, AngleField::constant(m, theta0, OrientationClass::Positive), TRelation::Same);
    r.name = d.name + "~assoc";
    return r;
}

/// sup |grad H| * diam <= 1e-6 (1 + sup |H|), with the diameter estimated along the grid diagonal.
inline bool has_constant_mean_curvature(const FundamentalDataEkt& d, int margin = 4) {
    const int m = d.samples();
    const IntrinsicCalculus calc = calculus(d);
    Field<double> H(m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) H(i, j) = 0.5 * d.S(i, j).trace();
    const Field<Vec2> gH = calc.gradient(H);
    double sg = 0.0, sh = 0.0, diam = 0.0;
    for (int i = margin; i < m - margin; ++i)
        for (int j = margin; j < m - margin; ++j) {
            sg = std::max(sg, calc.norm(i, j, gH(i, j)));
            sh = std::max(sh, std::abs(H(i, j)));
        }
    for (int k = 0; k + 1 < m; ++k) {
        const Vec3 dp = d.position(k + 1, k + 1) - d.position(k, k);
        diam += std::sqrt(dp.dot(metric_at(d.model, 0.5 * (d.position(k + 1, k + 1) + d.position(k, k))) * dp));
    }
    return sg * diam <= 1e-6 * (1.0 + sh);
}

struct EktMateRequest {
    OrientationClass cls = OrientationClass::Positive;
    std::string subcase = "auto";  // auto, a1, a2, b, m3
    double theta0 = M_PI / 4.0;
    double gate = 1e-4;  // scaled compat residual a verified mate must meet
    double tol_region = 1e-8;
};

struct EktMateRun {
    RegionField regions;
    std::vector<std::string> formulas;
    std::vector<MateCandidateEkt> candidates;
    std::optional<ThetaResult> theta;
    int verified_mates = 0;  // verified and not congruent
    std::vector<std::string> notes;
};

inline bool is_minimal(const FundamentalDataEkt& d, int margin = 4) {
    const int m = d.samples();
    double supH = 0.0;
    for (int i = margin; i < m - margin; ++i)
        for (int j = margin; j < m - margin; ++j) supH = std::max(supH, std::abs(0.5 * d.S(i, j).trace()));
    return supH <= 1e-6 * ekt_kappa_scale(d, margin);
}

/// Builds and verifies the mate candidates the region, class and subcase call for.
inline EktMateRun find_mates_ekt(const FundamentalDataEkt& d, const EktMateRequest& req, const MaskPolicy& policy = {}) {
    EktMateRun run;
    run.regions = classify_regions(d, RegionOptions{req.tol_region, policy.margin});
    const Region dom = run.regions.dominant;
    const bool tau0 = d.model.tau == 0.0;
    const int m = d.samples();
    auto add = [&](const std::string& label, const AngleField& ang, TRelation rel) {
        run.formulas.push_back(label + "/" + relation_name(rel));
        run.candidates.push_back(assemble_mate_ekt(d, ang, rel, policy));
    };
    const std::string sc = req.subcase;
    if (sc == "m3" && dom != Region::M3) {
        run.notes.push_back("subcase m3 needs constant principal curvatures; dominant region is " + region_name(dom));
    } else if (sc == "m3" || (sc == "auto" && dom == Region::M3)) {
        run.theta = integrate_theta_M3(d, req.theta0);
        if (run.theta->ok)
            add("m3", run.theta->angle, TRelation::Same);
        else
            run.notes.push_back("theta equation not integrable from this theta0");
    } else if (req.cls == OrientationClass::Positive) {
        if (tau0 && is_minimal(d, policy.margin)) {
            add("associate", AngleField::constant(m, req.theta0, OrientationClass::Positive), TRelation::Same);
        } else if (tau0) {
            if (dom == Region::M1) add("tau0_m1", angle_field(d, AngleFormula::Tau0M1, policy.margin), TRelation::Relation1);
            if (dom == Region::M2) add("tau0_m2", angle_field(d, AngleFormula::Tau0M2, policy.margin), TRelation::Same);
        } else if (!has_constant_mean_curvature(d, policy.margin)) {
            run.notes.push_back("positive mates need constant mean curvature when tau != 0");
        } else if (dom == Region::M1) {
            add("positive", angle_field(d, AngleFormula::Positive, policy.margin), TRelation::Relation3);
        }
    } else {
        const bool cmc = has_constant_mean_curvature(d, policy.margin);
        if (sc == "a1" || (sc == "auto" && dom == Region::M1))
            add("negative_a1", angle_field(d, AngleFormula::NegativeA1, policy.margin), TRelation::Same);
        if (sc == "a2" || (sc == "auto" && dom == Region::M1 && cmc)) {
            if (!cmc) run.notes.push_back("subcase a2 needs constant mean curvature");
            else if (tau0 && is_minimal(d, policy.margin)) run.notes.push_back("subcase a2 undefined when H and tau vanish");
            else add("negative_a2", angle_field(d, AngleFormula::NegativeA2, policy.margin), TRelation::Relation3);
        }
        if (sc == "b" || (sc == "auto" && dom == Region::M2))
            add("negative_b", angle_field(d, AngleFormula::NegativeB, policy.margin), TRelation::Same);
    }
    if (run.candidates.empty() && run.notes.empty()) run.notes.push_back("no formula applies to this region");
    for (const auto& c : run.candidates)
        if (c.verification.worst_gated() <= req.gate && !c.verdict.congruent) ++run.verified_mates;
    return run;
}

}  // namespace bonnetlab
