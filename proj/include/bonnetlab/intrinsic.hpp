#pragma once

#include "bonnetlab/grid.hpp"

#include <array>
#include <cmath>

namespace bonnetlab {

/// Intrinsic calculus of a sampled first fundamental form. Tangent vectors are
/// coefficient pairs in the coordinate basis (d_u, d_v).
class IntrinsicCalculus {
public:
    IntrinsicCalculus(const GridSpec& grid, const Field<Mat2>& metric) : grid_(grid), g_(metric) {
        const int m = grid.samples();
        gi_ = Field<Mat2>(m);
        sq_ = Field<double>(m);
        gam_ = Field<std::array<Mat2, 2>>(m);
        const Field<Mat2> du = fd::diff(g_, 0, grid.hu());
        const Field<Mat2> dv = fd::diff(g_, 1, grid.hv());
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                const Mat2& g = g_(i, j);
                gi_(i, j) = g.inverse();
                sq_(i, j) = std::sqrt(g.determinant());
                const std::array<Mat2, 2> dg{du(i, j), dv(i, j)};
                for (int k = 0; k < 2; ++k)
                    for (int a = 0; a < 2; ++a)
                        for (int b = 0; b < 2; ++b) {
                            double s = 0.0;
                            for (int l = 0; l < 2; ++l) s += gi_(i, j)(k, l) * (dg[a](l, b) + dg[b](l, a) - dg[l](a, b));
                            gam_(i, j)[k](a, b) = 0.5 * s;
                        }
            }
    }

    const GridSpec& grid() const { return grid_; }
    int samples() const { return grid_.samples(); }
    const Field<Mat2>& metric() const { return g_; }
    const Mat2& g(int i, int j) const { return g_(i, j); }
    const Mat2& ginv(int i, int j) const { return gi_(i, j); }
    double sqrt_det(int i, int j) const { return sq_(i, j); }
    const std::array<Mat2, 2>& gamma(int i, int j) const { return gam_(i, j); }

    double inner(int i, int j, const Vec2& a, const Vec2& b) const { return a.dot(g_(i, j) * b); }
    double norm(int i, int j, const Vec2& a) const { return std::sqrt(std::max(0.0, inner(i, j, a, a))); }

    /// Rotation by +90 degrees for the orientation of the coordinate basis.
    Mat2 j_canonical(int i, int j) const { return canonical_j(g_(i, j)); }

    static Mat2 canonical_j(const Mat2& g) {
        const double r = std::sqrt(g.determinant());
        Mat2 J;
        J << -g(0, 1), -g(1, 1), g(0, 0), g(0, 1);
        return J / r;
    }

    /// Hilbert-Schmidt norm of a (1,1)-tensor under the metric.
    double tensor_norm(int i, int j, const Mat2& A) const {
        return std::sqrt(std::max(0.0, (gi_(i, j) * A.transpose() * g_(i, j) * A).trace()));
    }

    Field<Vec2> gradient(const Field<double>& f) const {
        const int m = samples();
        Field<Vec2> out(m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                const Vec2 df(fd::d1(f, i, j, 0, grid_.hu()), fd::d1(f, i, j, 1, grid_.hv()));
                out(i, j) = gi_(i, j) * df;
            }
        return out;
    }

    Field<double> divergence(const Field<Vec2>& X) const {
        const int m = samples();
        Field<double> a(m), b(m), out(m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                a(i, j) = sq_(i, j) * X(i, j)(0);
                b(i, j) = sq_(i, j) * X(i, j)(1);
            }
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                out(i, j) = (fd::d1(a, i, j, 0, grid_.hu()) + fd::d1(b, i, j, 1, grid_.hv())) / sq_(i, j);
        return out;
    }

    Field<double> laplacian(const Field<double>& f) const { return divergence(gradient(f)); }

    /// Column k holds nabla_{d_k} X.
    Field<Mat2> covariant(const Field<Vec2>& X) const {
        const int m = samples();
        Field<Mat2> out(m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                const std::array<Vec2, 2> dX{fd::d1(X, i, j, 0, grid_.hu()), fd::d1(X, i, j, 1, grid_.hv())};
                Mat2 D;
                for (int k = 0; k < 2; ++k) D.col(k) = dX[k] + gamma_action(i, j, k, X(i, j));
                out(i, j) = D;
            }
        return out;
    }

    /// (Gamma_k Y)^c = Gamma^c_{k b} Y^b.
    Vec2 gamma_action(int i, int j, int k, const Vec2& Y) const {
        const auto& G = gam_(i, j);
        return Vec2(G[0].row(k).dot(Y), G[1].row(k).dot(Y));
    }

    /// nabla_{d_u}(S d_v) - nabla_{d_v}(S d_u) - S[d_u, d_v] for an endomorphism field.
    Field<Vec2> codazzi_tensor(const Field<Mat2>& S) const {
        const int m = samples();
        Field<Vec2> c1(m), c0(m), out(m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                c0(i, j) = S(i, j).col(0);
                c1(i, j) = S(i, j).col(1);
            }
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                out(i, j) = fd::d1(c1, i, j, 0, grid_.hu()) - fd::d1(c0, i, j, 1, grid_.hv()) + gamma_action(i, j, 0, c1(i, j)) -
                            gamma_action(i, j, 1, c0(i, j));
        return out;
    }

    /// Gaussian curvature from the metric alone.
    Field<double> gauss_curvature() const {
        const int m = samples();
        Field<Vec2> G22(m), G12(m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                const auto& G = gam_(i, j);
                G22(i, j) = Vec2(G[0](1, 1), G[1](1, 1));
                G12(i, j) = Vec2(G[0](0, 1), G[1](0, 1));
            }
        Field<double> K(m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                const auto& G = gam_(i, j);
                const Vec2 d1G22 = fd::d1(G22, i, j, 0, grid_.hu());
                const Vec2 d2G12 = fd::d1(G12, i, j, 1, grid_.hv());
                Vec2 R;
                for (int l = 0; l < 2; ++l) {
                    double s = d1G22(l) - d2G12(l);
                    for (int q = 0; q < 2; ++q) s += G[q](1, 1) * G[l](0, q) - G[q](0, 1) * G[l](1, q);
                    R(l) = s;
                }
                K(i, j) = g_(i, j).row(0).dot(R) / g_(i, j).determinant();
            }
        return K;
    }

private:
    GridSpec grid_;
    Field<Mat2> g_, gi_;
    Field<double> sq_;
    Field<std::array<Mat2, 2>> gam_;
};

}  // namespace bonnetlab
