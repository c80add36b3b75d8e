#pragma once

#include "bonnetlab/ambient.hpp"
#include "bonnetlab/intrinsic.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <functional>
#include <string>

namespace bonnetlab {

struct DegenerateImmersion : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parametrized surface patch (u, v) -> ambient chart coordinates.
struct SurfacePatch {
    std::string name;
    AmbientModel model;
    GridSpec grid;
    std::function<Vec3(double, double)> chart;

    Vec3 point(int i, int j) const { return chart(grid.u(i), grid.v(j)); }
};

struct JetSample {
    Vec3 p, fu, fv, fuu, fuv, fvv;
};

inline Field<Vec3> sample_positions(const SurfacePatch& patch) {
    const int m = patch.grid.samples();
    Field<Vec3> pos(m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) pos(i, j) = patch.point(i, j);
    return pos;
}

/// Jets of every sample from a single sampling of the chart.
inline Field<JetSample> sample_jets(const GridSpec& grid, const Field<Vec3>& pos) {
    const int m = grid.samples();
    const double hu = grid.hu(), hv = grid.hv();
    const Field<Vec3> fv = fd::diff(pos, 1, hv);
    Field<JetSample> out(m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            JetSample& s = out(i, j);
            s.p = pos(i, j);
            s.fu = fd::d1(pos, i, j, 0, hu);
            s.fv = fv(i, j);
            s.fuu = fd::d2(pos, i, j, 0, hu);
            s.fvv = fd::d2(pos, i, j, 1, hv);
            s.fuv = fd::d1(fv, i, j, 0, hu);
        }
    return out;
}

inline Field<JetSample> sample_jets(const SurfacePatch& patch) { return sample_jets(patch.grid, sample_positions(patch)); }

/// Jet at one sample; centered differences inside, one-sided at the boundary.
inline JetSample jet(const SurfacePatch& patch, int i, int j) { return sample_jets(patch)(i, j); }

struct Principal {
    double k1 = 0.0, k2 = 0.0;
    Vec2 e1 = Vec2::Zero(), e2 = Vec2::Zero();
    bool umbilic = false;
};

inline double umbilic_threshold(double k1, double k2) { return 1e-6 * (1.0 + std::abs(k1) + std::abs(k2)); }

/// Eigenpairs of an I-self-adjoint operator S, sorted k1 >= k2, with J e1 = e2.
inline Principal principal(const Mat2& I, const Mat2& S, double sigma) {
    const Mat2 J = sigma * IntrinsicCalculus::canonical_j(I);
    Mat2 B;
    B.col(0) = Vec2(1.0, 0.0) / std::sqrt(I(0, 0));
    B.col(1) = J * B.col(0);
    Mat2 A = B.transpose() * I * S * B;
    A = 0.5 * (A + A.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Mat2> es;
    es.computeDirect(A);
    Principal p;
    p.k1 = es.eigenvalues()(1);
    p.k2 = es.eigenvalues()(0);
    p.e1 = B * es.eigenvectors().col(1);
    p.e2 = J * p.e1;
    p.umbilic = std::abs(p.k1 - p.k2) < umbilic_threshold(p.k1, p.k2);
    return p;
}

struct GeometrySample {
    Vec3 p;
    Mat2 I, II, S, J;
    Vec3 N;
    double H = 0.0, K_ext = 0.0;
    Principal pc;
};

/// Extrinsic geometry at one jet: normal N with {f_u, f_v, N} positive, S = -dN, J u = N x u.
inline GeometrySample surface_geometry(const AmbientModel& m, const JetSample& s) {
    GeometrySample g;
    g.p = s.p;
    const Mat3 G = metric_at(m, s.p);
    g.I << s.fu.dot(G * s.fu), s.fu.dot(G * s.fv), s.fv.dot(G * s.fu), s.fv.dot(G * s.fv);
    const double det = g.I.determinant();
    if (!(det > 1e-14 * (g.I(0, 0) * g.I(1, 1) + 1e-300))) throw DegenerateImmersion("first fundamental form is degenerate");
    const Vec3 c = G.ldlt().solve(s.fu.cross(s.fv));
    g.N = c / std::sqrt(c.dot(G * c));
    const Christoffel Gam = christoffels_at(m, s.p);
    auto second = [&](const Vec3& fij, const Vec3& a, const Vec3& b) { return (fij + contract(Gam, a, b)).dot(G * g.N); };
    const double l = second(s.fuu, s.fu, s.fu), mm = second(s.fuv, s.fu, s.fv), n = second(s.fvv, s.fv, s.fv);
    g.II << l, mm, mm, n;
    g.S = g.I.inverse() * g.II;
    g.J = IntrinsicCalculus::canonical_j(g.I);
    g.H = 0.5 * g.S.trace();
    g.K_ext = g.S.determinant();
    g.pc = principal(g.I, g.S, 1.0);
    return g;
}

/// Coefficients of the tangential projection of an ambient vector.
inline Vec2 tangential(const Mat3& G, const Mat2& Iinv, const Vec3& fu, const Vec3& fv, const Vec3& X) {
    return Iinv * Vec2(fu.dot(G * X), fv.dot(G * X));
}

/// Fundamental data in E(kappa, tau): sigma carries J = sigma * J_canonical.
struct FundamentalDataEkt {
    std::string name;
    AmbientModel model;
    GridSpec grid;
    Field<Mat2> metric;
    Field<double> sigma;
    Field<Mat2> S;
    Field<Vec2> T3;
    Field<double> nu3;
    Field<Vec3> position;

    int samples() const { return grid.samples(); }
    Mat2 J(int i, int j) const { return sigma(i, j) * IntrinsicCalculus::canonical_j(metric(i, j)); }
};

/// Fundamental data in Sol3. H is carried as a prescribed function; S is derived.
struct FundamentalDataSol3 {
    std::string name;
    AmbientModel model;
    GridSpec grid;
    Field<Mat2> metric;
    Field<double> sigma;
    std::array<Field<Vec2>, 3> T;
    std::array<Field<double>, 3> nu;
    Field<double> H;
    Field<Vec3> position;

    int samples() const { return grid.samples(); }
    Mat2 J(int i, int j) const { return sigma(i, j) * IntrinsicCalculus::canonical_j(metric(i, j)); }
};

struct ExtractedPatch {
    Field<JetSample> jets;
    Field<GeometrySample> geometry;
};

inline ExtractedPatch extract_geometry(const SurfacePatch& patch) {
    ExtractedPatch out;
    out.jets = sample_jets(patch);
    const int m = patch.grid.samples();
    out.geometry = Field<GeometrySample>(m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) out.geometry(i, j) = surface_geometry(patch.model, out.jets(i, j));
    return out;
}

inline FundamentalDataEkt fundamental_data_ekt(const SurfacePatch& patch) {
    if (!patch.model.is_ekt()) throw std::invalid_argument("fundamental_data_ekt requires an E(kappa,tau) patch");
    const ExtractedPatch ex = extract_geometry(patch);
    const int m = patch.grid.samples();
    FundamentalDataEkt d{patch.name, patch.model, patch.grid, Field<Mat2>(m), Field<double>(m, 1.0), Field<Mat2>(m),
                         Field<Vec2>(m), Field<double>(m), Field<Vec3>(m)};
    const Vec3 xi(0.0, 0.0, 1.0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const auto& g = ex.geometry(i, j);
            const auto& s = ex.jets(i, j);
            const Mat3 G = metric_at(patch.model, s.p);
            d.metric(i, j) = g.I;
            d.S(i, j) = g.S;
            d.nu3(i, j) = xi.dot(G * g.N);
            d.T3(i, j) = tangential(G, g.I.inverse(), s.fu, s.fv, xi);
            d.position(i, j) = s.p;
        }
    return d;
}

inline FundamentalDataSol3 fundamental_data_sol3(const SurfacePatch& patch) {
    if (patch.model.is_ekt()) throw std::invalid_argument("fundamental_data_sol3 requires a Sol3 patch");
    const ExtractedPatch ex = extract_geometry(patch);
    const int m = patch.grid.samples();
    FundamentalDataSol3 d;
    d.name = patch.name;
    d.model = patch.model;
    d.grid = patch.grid;
    d.metric = Field<Mat2>(m);
    d.sigma = Field<double>(m, 1.0);
    d.H = Field<double>(m);
    d.position = Field<Vec3>(m);
    for (int a = 0; a < 3; ++a) {
        d.T[a] = Field<Vec2>(m);
        d.nu[a] = Field<double>(m);
    }
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const auto& g = ex.geometry(i, j);
            const auto& s = ex.jets(i, j);
            const Mat3 G = metric_at(patch.model, s.p);
            const auto E = frame_at(patch.model, s.p);
            d.metric(i, j) = g.I;
            d.H(i, j) = g.H;
            d.position(i, j) = s.p;
            for (int a = 0; a < 3; ++a) {
                d.nu[a](i, j) = E[a].dot(G * g.N);
                d.T[a](i, j) = tangential(G, g.I.inverse(), s.fu, s.fv, E[a]);
            }
        }
    return d;
}

/// Quantities of Sol3 data that depend on gradients of the angle functions.
struct Sol3Derived {
    std::array<Field<Vec2>, 3> grad_nu;
    Field<Vec2> grad_H;
    Field<Mat2> S;
    Field<double> zeta;
    std::array<Field<Vec2>, 3> X;
    Field<double> A1, A2, B1, B2;
};

inline Sol3Derived derive_sol3(const FundamentalDataSol3& d, const IntrinsicCalculus& calc) {
    const int m = d.samples();
    const double mu = d.model.mu;
    Sol3Derived r;
    for (int a = 0; a < 3; ++a) r.grad_nu[a] = calc.gradient(d.nu[a]);
    r.grad_H = calc.gradient(d.H);
    r.S = Field<Mat2>(m);
    r.zeta = Field<double>(m);
    for (int a = 0; a < 3; ++a) r.X[a] = Field<Vec2>(m);
    r.A1 = r.A2 = r.B1 = r.B2 = Field<double>(m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const Mat2 J = d.J(i, j);
            const Mat2& g = d.metric(i, j);
            const Vec2 &T1 = d.T[0](i, j), &T2 = d.T[1](i, j), &T3 = d.T[2](i, j);
            // S X = mu(<T2,X> J T2 - <T1,X> J T1) - sum <grad nu_a, X> T_a; column k is S d_k.
            Mat2 S = mu * ((J * T2) * (g * T2).transpose() - (J * T1) * (g * T1).transpose());
            for (int a = 0; a < 3; ++a) S -= d.T[a](i, j) * (g * r.grad_nu[a](i, j)).transpose();
            r.S(i, j) = S;
            const double n1 = d.nu[0](i, j), n2 = d.nu[1](i, j), n3 = d.nu[2](i, j);
            r.zeta(i, j) = mu * (n1 * n1 - n2 * n2);
            const Vec2 &g1 = r.grad_nu[0](i, j), &g2 = r.grad_nu[1](i, j), &g3 = r.grad_nu[2](i, j);
            r.X[0](i, j) = J * g1 + n3 * g2 - n2 * g3;
            r.X[1](i, j) = J * g2 + n1 * g3 - n3 * g1;
            r.X[2](i, j) = J * g3 + n2 * g1 - n1 * g2;
            r.A1(i, j) = g3.dot(g * T3);
            r.A2(i, j) = g3.dot(g * (J * T3));
            r.B1(i, j) = r.grad_H(i, j).dot(g * T3);
            r.B2(i, j) = r.grad_H(i, j).dot(g * (J * T3));
        }
    return r;
}

/// Principal curvatures of E(kappa,tau) data at every sample.
inline Field<Principal> principal_field(const Field<Mat2>& metric, const Field<Mat2>& S, const Field<double>& sigma) {
    const int m = metric.size();
    Field<Principal> out(m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) out(i, j) = principal(metric(i, j), S(i, j), sigma(i, j));
    return out;
}

inline IntrinsicCalculus calculus(const FundamentalDataEkt& d) { return IntrinsicCalculus(d.grid, d.metric); }
inline IntrinsicCalculus calculus(const FundamentalDataSol3& d) { return IntrinsicCalculus(d.grid, d.metric); }

}  // namespace bonnetlab
