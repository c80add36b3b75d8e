#pragma once

#include "bonnetlab/compat.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace bonnetlab {

struct CompatGateFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PoseMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Base point, tangent images of d_u, d_v and unit normal, all in chart coordinates.
struct FramePose {
    Vec3 point = Vec3::Zero();
    Vec3 fu = Vec3::Zero(), fv = Vec3::Zero(), normal = Vec3::Zero();
};

/// What the frame integrator needs from either kind of fundamental data.
struct FrameData {
    std::string name;
    AmbientModel model;
    GridSpec grid;
    Field<Mat2> metric;
    Field<Mat2> S;
    /// Columns: components of f_u, f_v, N in the orthonormal ambient frame, fixed by the data
    /// (for E(kappa,tau) up to a rotation about the fiber).
    Field<Mat3> frame;
    bool fiber_rotation_free = false;
    int samples() const { return grid.samples(); }
};

namespace detail {

inline Mat3 ekt_frame_components(const Mat2& g, const Vec2& gT3, double nu3, double sigma) {
    const double hu2 = g(0, 0) - gT3(0) * gT3(0), huv = g(0, 1) - gT3(0) * gT3(1), hv2 = g(1, 1) - gT3(1) * gT3(1);
    Vec3 fu, fv;
    if (hu2 > 1e-14 * g(0, 0)) {
        // e follows from the vertical part of the normal: nu3 = sigma a e / sqrt(det g).
        const double a = std::sqrt(hu2), b = huv / a, e = sigma * nu3 * std::sqrt(g.determinant()) / a;
        fu = Vec3(a, 0.0, gT3(0));
        fv = Vec3(b, e, gT3(1));
    } else {
        fu = Vec3(0.0, 0.0, gT3(0));
        fv = Vec3(std::sqrt(std::max(0.0, hv2)), 0.0, gT3(1));
    }
    Vec3 n = sigma * fu.cross(fv).normalized();
    const double h = std::hypot(n.x(), n.y());
    const double r = std::sqrt(std::max(0.0, 1.0 - nu3 * nu3));
    n = h > 1e-300 ? Vec3(n.x() * r / h, n.y() * r / h, nu3) : Vec3(0.0, 0.0, nu3);
    Mat3 W;
    W << fu, fv, n;
    return W;
}

inline Mat3 frame_matrix(const AmbientModel& m, const Vec3& p) {
    const auto E = frame_at(m, p);
    Mat3 F;
    F << E[0], E[1], E[2];
    return F;
}

}  // namespace detail

inline FrameData frame_data(const FundamentalDataEkt& d) {
    const int m = d.samples();
    FrameData f{d.name, d.model, d.grid, d.metric, d.S, Field<Mat3>(m), true};
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            f.frame(i, j) = detail::ekt_frame_components(d.metric(i, j), d.metric(i, j) * d.T3(i, j), d.nu3(i, j), d.sigma(i, j));
    return f;
}

inline FrameData frame_data(const FundamentalDataSol3& d) {
    const int m = d.samples();
    const Sol3Derived dv = derive_sol3(d, calculus(d));
    FrameData f{d.name, d.model, d.grid, d.metric, dv.S, Field<Mat3>(m), false};
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            Mat3 W;
            for (int a = 0; a < 3; ++a) {
                const Vec2 c = d.metric(i, j) * d.T[a](i, j);
                W(a, 0) = c(0);
                W(a, 1) = c(1);
                W(a, 2) = d.nu[a](i, j);
            }
            f.frame(i, j) = W;
        }
    return f;
}

/// Base sample at the chart origin with the data's frame, horizontal part of f_u along the first axis.
inline FramePose default_pose(const FrameData& f, int ib, int jb) {
    FramePose p;
    const Mat3 W = detail::frame_matrix(f.model, p.point) * f.frame(ib, jb);
    p.fu = W.col(0);
    p.fv = W.col(1);
    p.normal = W.col(2);
    return p;
}

/// Pose of an existing patch at a sample, for aligned round trips.
inline FramePose pose_from_patch(const SurfacePatch& patch, int ib, int jb) {
    const JetSample s = sample_jets(patch)(ib, jb);
    const GeometrySample g = surface_geometry(patch.model, s);
    return {s.p, s.fu, s.fv, g.N};
}

struct ReconstructOptions {
    double compat_gate = 1e-3;  // scaled worst gated residual; <= 0 disables the gate
    double pose_tol = 1e-6;
    MaskPolicy policy{};
};

struct Reconstruction {
    Field<Vec3> position;  // row-first path
    Field<Vec3> position_column;
    Field<double> defect_field;
    double defect = 0.0;          // sup ambient distance between the two paths
    double drift = 0.0;           // frame correction per unit parameter length, before correction
    double max_correction = 0.0;  // largest single correction
    int base_i = 0, base_j = 0;
};

namespace detail {

struct GWCoeffs {
    std::array<Mat2, 2> gamma;
    Mat2 II, S;

    GWCoeffs& axpy(double a, const GWCoeffs& o) {
        gamma[0] += a * o.gamma[0];
        gamma[1] += a * o.gamma[1];
        II += a * o.II;
        S += a * o.S;
        return *this;
    }
    static GWCoeffs zero() { return {{Mat2::Zero(), Mat2::Zero()}, Mat2::Zero(), Mat2::Zero()}; }
};

template <class Get>
GWCoeffs gw_midpoint(Get at, int k, int m) {
    GWCoeffs r = GWCoeffs::zero();
    if (k >= 1 && k + 2 < m) {
        r.axpy(-1.0 / 16, at(k - 1)).axpy(9.0 / 16, at(k)).axpy(9.0 / 16, at(k + 1)).axpy(-1.0 / 16, at(k + 2));
    } else if (k == 0) {
        r.axpy(5.0 / 16, at(0)).axpy(15.0 / 16, at(1)).axpy(-5.0 / 16, at(2)).axpy(1.0 / 16, at(3));
    } else {
        r.axpy(1.0 / 16, at(k - 2)).axpy(-5.0 / 16, at(k - 1)).axpy(15.0 / 16, at(k)).axpy(5.0 / 16, at(k + 1));
    }
    return r;
}

// State: position, f_u, f_v, N.
using GWState = std::array<Vec3, 4>;

inline GWState gw_rhs(const AmbientModel& model, const GWCoeffs& c, const GWState& y, int axis) {
    const Christoffel G = christoffels_at(model, y[0]);
    const Vec3& Fj = y[1 + axis];
    GWState d;
    d[0] = Fj;
    for (int k = 0; k < 2; ++k)
        d[1 + k] = c.gamma[0](axis, k) * y[1] + c.gamma[1](axis, k) * y[2] + c.II(axis, k) * y[3] - contract(G, Fj, y[1 + k]);
    d[3] = -c.S(0, axis) * y[1] - c.S(1, axis) * y[2] - contract(G, Fj, y[3]);
    return d;
}

inline GWState axpy(const GWState& y, double a, const GWState& k) {
    return {y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2], y[3] + a * k[3]};
}

}  // namespace detail

/// Gauss-Weingarten integration from the base sample, rows first, with the transposed order as cross-check.
/// After each step the frame is projected onto the frames allowed by the data at the new sample.
inline Reconstruction integrate_frame(const FrameData& f, const FramePose& pose, int ib, int jb, const ReconstructOptions& opt = {}) {
    const int m = f.samples();
    const double hu = f.grid.hu(), hv = f.grid.hv();
    const IntrinsicCalculus calc(f.grid, f.metric);
    {
        const Mat3 G = metric_at(f.model, pose.point);
        Mat2 I;
        I << pose.fu.dot(G * pose.fu), pose.fu.dot(G * pose.fv), pose.fv.dot(G * pose.fu), pose.fv.dot(G * pose.fv);
        const double dev = (I - f.metric(ib, jb)).cwiseAbs().maxCoeff();
        if (dev > opt.pose_tol * (1.0 + f.metric(ib, jb).cwiseAbs().maxCoeff()))
            throw PoseMismatch("initial pose does not reproduce the metric at the base sample");
    }
    Field<detail::GWCoeffs> C(m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) C(i, j) = {calc.gamma(i, j), f.metric(i, j) * f.S(i, j), f.S(i, j)};

    Reconstruction r;
    r.base_i = ib;
    r.base_j = jb;
    double max_corr_rate = 0.0;

    // Replace the frame by the nearest data-consistent frame at sample (i, j).
    auto correct = [&](detail::GWState& y, int i, int j, double h) {
        const Mat3 E = detail::frame_matrix(f.model, y[0]);
        const Mat3 G = metric_at(f.model, y[0]);
        Mat3 Wc;
        Wc << y[1], y[2], y[3];
        const Mat3 comp = E.transpose() * G * Wc;
        Mat3 target = f.frame(i, j);
        if (f.fiber_rotation_free) {
            double sn = 0.0, cs = 0.0;
            for (int k = 0; k < 3; ++k) {
                sn += target(0, k) * comp(1, k) - target(1, k) * comp(0, k);
                cs += target(0, k) * comp(0, k) + target(1, k) * comp(1, k);
            }
            const double t = std::atan2(sn, cs), c = std::cos(t), s = std::sin(t);
            Mat3 R;
            R << c, -s, 0, s, c, 0, 0, 0, 1;
            target = R * target;
        }
        const double corr = (comp - target).cwiseAbs().maxCoeff();
        r.max_correction = std::max(r.max_correction, corr);
        max_corr_rate = std::max(max_corr_rate, corr / std::abs(h));
        const Mat3 W = E * target;
        y[1] = W.col(0);
        y[2] = W.col(1);
        y[3] = W.col(2);
    };

    auto step = [&](const detail::GWState& y, int i, int j, int axis, int dir) {
        const int i1 = i + (axis == 0 ? dir : 0), j1 = j + (axis == 1 ? dir : 0);
        const double h = dir * (axis == 0 ? hu : hv);
        const int k0 = axis == 0 ? std::min(i, i1) : std::min(j, j1);
        const detail::GWCoeffs Cm = axis == 0 ? detail::gw_midpoint([&](int k) -> const detail::GWCoeffs& { return C(k, j); }, k0, m)
                                              : detail::gw_midpoint([&](int k) -> const detail::GWCoeffs& { return C(i, k); }, k0, m);
        const auto k1 = detail::gw_rhs(f.model, C(i, j), y, axis);
        const auto k2 = detail::gw_rhs(f.model, Cm, detail::axpy(y, 0.5 * h, k1), axis);
        const auto k3 = detail::gw_rhs(f.model, Cm, detail::axpy(y, 0.5 * h, k2), axis);
        const auto k4 = detail::gw_rhs(f.model, C(i1, j1), detail::axpy(y, h, k3), axis);
        detail::GWState out;
        for (int c = 0; c < 4; ++c) out[c] = y[c] + h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        correct(out, i1, j1, h);
        return out;
    };

    auto sweep = [&](int first_axis) {
        Field<detail::GWState> S(m);
        S(ib, jb) = {pose.point, pose.fu, pose.fv, pose.normal};
        auto line = [&](int i0, int j0, int axis) {
            const int base = axis == 0 ? i0 : j0;
            for (int dir : {1, -1})
                for (int k = base; k + dir >= 0 && k + dir < m; k += dir) {
                    const int i = axis == 0 ? k : i0, j = axis == 0 ? j0 : k;
                    const int in = axis == 0 ? k + dir : i0, jn = axis == 0 ? j0 : k + dir;
                    S(in, jn) = step(S(i, j), i, j, axis, dir);
                }
        };
        line(ib, jb, first_axis);
        for (int k = 0; k < m; ++k) {
            if (first_axis == 0)
                line(k, jb, 1);
            else
                line(ib, k, 0);
        }
        Field<Vec3> P(m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) P(i, j) = S(i, j)[0];
        return P;
    };

    r.position = sweep(0);
    r.position_column = sweep(1);
    r.defect_field = Field<double>(m, 0.0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const Vec3 d = r.position(i, j) - r.position_column(i, j);
            const double dist = std::sqrt(std::max(0.0, d.dot(metric_at(f.model, r.position(i, j)) * d)));
            r.defect_field(i, j) = dist;
            r.defect = std::max(r.defect, dist);
        }
    r.drift = max_corr_rate;
    return r;
}

template <class Data>
void check_compat_gate(const Data& d, const ReconstructOptions& opt) {
    if (opt.compat_gate <= 0.0) return;
    ResidualReport rep;
    if constexpr (std::is_same_v<Data, FundamentalDataEkt>)
        rep = residuals_ekt(d, opt.policy);
    else
        rep = residuals_sol3(d, opt.policy);
    if (!(rep.worst_gated() <= opt.compat_gate))
        throw CompatGateFailed("compatibility residual " + rep.worst_gated_name() + " above the reconstruction gate");
}

/// Reconstructs data from the centre sample with the default pose.
template <class Data>
Reconstruction reconstruct(const Data& d, const ReconstructOptions& opt = {}) {
    check_compat_gate(d, opt);
    const FrameData f = frame_data(d);
    const int c = f.samples() / 2;
    return integrate_frame(f, default_pose(f, c, c), c, c, opt);
}

struct RoundTrip {
    Reconstruction rec;
    double distance = 0.0;  // sup ambient distance to the original positions
};

/// Extract, reconstruct from the patch's own pose at the centre sample, and compare positions.
template <class Data>
RoundTrip round_trip(const SurfacePatch& patch, const Data& d, const ReconstructOptions& opt = {}) {
    check_compat_gate(d, opt);
    const FrameData f = frame_data(d);
    const int c = f.samples() / 2;
    RoundTrip rt;
    rt.rec = integrate_frame(f, pose_from_patch(patch, c, c), c, c, opt);
    const int m = f.samples();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const Vec3 dp = rt.rec.position(i, j) - d.position(i, j);
            rt.distance = std::max(rt.distance, std::sqrt(std::max(0.0, dp.dot(metric_at(d.model, d.position(i, j)) * dp))));
        }
    return rt;
}

}  // namespace bonnetlab
