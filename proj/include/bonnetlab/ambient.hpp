#pragma once

#include "bonnetlab/grid.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace bonnetlab {

enum class AmbientKind { Ekt, Sol3 };

/// E(kappa, tau) in the Cartan chart, or Sol3 with parameter mu.
struct AmbientModel {
    AmbientKind kind = AmbientKind::Ekt;
    double kappa = 0.0;
    double tau = 0.0;
    double mu = 1.0;

    static AmbientModel ekt(double kappa, double tau) { return {AmbientKind::Ekt, kappa, tau, 1.0}; }
    static AmbientModel sol3(double mu) {
        if (!(mu > 0.0)) throw std::invalid_argument("Sol3 requires mu > 0");
        return {AmbientKind::Sol3, 0.0, 0.0, mu};
    }
    bool is_ekt() const { return kind == AmbientKind::Ekt; }
    std::string name() const { return is_ekt() ? "ekt" : "sol3"; }
};

struct ChartDomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct InvalidIsometry : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Gamma[k](i, j) = Gamma^k_ij in coordinates.
using Christoffel = std::array<Mat3, 3>;

inline constexpr double kChartMargin = 1e-6;

inline double ekt_lambda(const AmbientModel& m, double x, double y) {
    const double q = 1.0 + 0.25 * m.kappa * (x * x + y * y);
    if (q <= kChartMargin) throw ChartDomainError("point outside the Cartan chart domain");
    return 1.0 / q;
}

inline Mat3 metric_at(const AmbientModel& m, const Vec3& p) {
    Mat3 g;
    if (m.is_ekt()) {
        const double l = ekt_lambda(m, p.x(), p.y());
        const Vec3 a(m.tau * l * p.y(), -m.tau * l * p.x(), 1.0);
        g.setZero();
        g(0, 0) = g(1, 1) = l * l;
        g += a * a.transpose();
    } else {
        const double c = std::cosh(2.0 * m.mu * p.z()), s = std::sinh(2.0 * m.mu * p.z());
        g << c, s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
    }
    return g;
}

/// Partial derivatives d_k g of the metric, k = x, y, z.
inline std::array<Mat3, 3> metric_derivatives(const AmbientModel& m, const Vec3& p) {
    std::array<Mat3, 3> dg;
    for (auto& d : dg) d.setZero();
    if (m.is_ekt()) {
        const double x = p.x(), y = p.y(), t = m.tau;
        const double l = ekt_lambda(m, x, y);
        const double lx = -0.5 * l * l * m.kappa * x, ly = -0.5 * l * l * m.kappa * y;
        const Vec3 a(t * l * y, -t * l * x, 1.0);
        const Vec3 ax(t * y * lx, -t * (l + x * lx), 0.0);
        const Vec3 ay(t * (l + y * ly), -t * x * ly, 0.0);
        const std::array<Vec3, 2> da{ax, ay};
        const std::array<double, 2> dl{lx, ly};
        for (int k = 0; k < 2; ++k) {
            dg[k](0, 0) = dg[k](1, 1) = 2.0 * l * dl[k];
            dg[k] += da[k] * a.transpose() + a * da[k].transpose();
        }
    } else {
        const double c = std::cosh(2.0 * m.mu * p.z()), s = std::sinh(2.0 * m.mu * p.z());
        dg[2] << s, c, 0.0, c, s, 0.0, 0.0, 0.0, 0.0;
        dg[2] *= 2.0 * m.mu;
    }
    return dg;
}

/// Positively oriented orthonormal frame: V1, V2, V3 (Ekt) or E1, E2, E3 (Sol3).
inline std::array<Vec3, 3> frame_at(const AmbientModel& m, const Vec3& p) {
    if (m.is_ekt()) {
        const double l = ekt_lambda(m, p.x(), p.y());
        return {Vec3(1.0 / l, 0.0, -m.tau * p.y()), Vec3(0.0, 1.0 / l, m.tau * p.x()), Vec3(0.0, 0.0, 1.0)};
    }
    const double c = std::cosh(m.mu * p.z()), s = std::sinh(m.mu * p.z());
    return {Vec3(c, -s, 0.0), Vec3(-s, c, 0.0), Vec3(0.0, 0.0, 1.0)};
}

inline Christoffel christoffels_from(const Mat3& g, const std::array<Mat3, 3>& dg) {
    const Mat3 gi = g.inverse();
    Christoffel G;
    for (int k = 0; k < 3; ++k) {
        G[k].setZero();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int l = 0; l < 3; ++l) s += gi(k, l) * (dg[i](l, j) + dg[j](l, i) - dg[l](i, j));
                G[k](i, j) = 0.5 * s;
            }
    }
    return G;
}

inline Christoffel christoffels_at(const AmbientModel& m, const Vec3& p) {
    return christoffels_from(metric_at(m, p), metric_derivatives(m, p));
}

/// Gamma(X, Y)^k = Gamma^k_ij X^i Y^j.
inline Vec3 contract(const Christoffel& G, const Vec3& X, const Vec3& Y) {
    return Vec3(X.dot(G[0] * Y), X.dot(G[1] * Y), X.dot(G[2] * Y));
}

inline double inner(const AmbientModel& m, const Vec3& p, const Vec3& a, const Vec3& b) {
    return a.dot(metric_at(m, p) * b);
}

/// Covariant derivative of Y along X at p, given the directional derivative dY of the components.
inline Vec3 covariant(const AmbientModel& m, const Vec3& p, const Vec3& X, const Vec3& Y, const Vec3& dY) {
    return dY + contract(christoffels_at(m, p), X, Y);
}

// Isometries ------------------------------------------------------------------

enum class IsometryKind { LeftTranslation, Isotropy, VerticalTranslation, FiberRotation, FiberFlip };

/// Finite or one-parameter isometry generators. Isotropy words are read right to left:
/// word {1, 2} means Psi1 o Psi2.
struct IsometryTag {
    IsometryKind kind = IsometryKind::LeftTranslation;
    Vec3 point = Vec3::Zero();
    std::vector<int> word;
    double amount = 0.0;

    static IsometryTag left_translation(const Vec3& q) { return {IsometryKind::LeftTranslation, q, {}, 0.0}; }
    static IsometryTag isotropy(std::vector<int> w) { return {IsometryKind::Isotropy, Vec3::Zero(), std::move(w), 0.0}; }
    static IsometryTag vertical(double t) { return {IsometryKind::VerticalTranslation, Vec3::Zero(), {}, t}; }
    static IsometryTag fiber_rotation(double a) { return {IsometryKind::FiberRotation, Vec3::Zero(), {}, a}; }
    static IsometryTag fiber_flip() { return {IsometryKind::FiberFlip, Vec3::Zero(), {}, 0.0}; }
};

inline Mat3 psi_matrix(int generator) {
    Mat3 P;
    if (generator == 1)
        P << 0, 1, 0, -1, 0, 0, 0, 0, -1;
    else if (generator == 2)
        P << 1, 0, 0, 0, -1, 0, 0, 0, -1;
    else
        throw InvalidIsometry("isotropy generator must be 1 or 2");
    return P;
}

/// Reduced isotropy element as a signed permutation matrix acting on coordinates.
inline Mat3 isotropy_matrix(const std::vector<int>& word) {
    Mat3 P = Mat3::Identity();
    for (int g : word) P = P * psi_matrix(g);
    return P;
}

/// The eight elements of the Sol3 isotropy group, identity first.
inline std::vector<Mat3> isotropy_group() {
    std::vector<Mat3> els{Mat3::Identity()};
    for (std::size_t k = 0; k < els.size(); ++k)
        for (int g : {1, 2}) {
            const Mat3 c = els[k] * psi_matrix(g);
            bool seen = false;
            for (const auto& e : els) seen = seen || (e - c).cwiseAbs().maxCoeff() < 0.5;
            if (!seen) els.push_back(c);
        }
    return els;
}

/// Group law of Sol3 compatible with the metric and the frame E_a: dL_p maps E_a(0) to E_a(p).
inline Vec3 sol3_multiply(const AmbientModel& m, const Vec3& p, const Vec3& q) {
    const double c = std::cosh(m.mu * p.z()), s = std::sinh(m.mu * p.z());
    return Vec3(p.x() + c * q.x() - s * q.y(), p.y() - s * q.x() + c * q.y(), p.z() + q.z());
}

inline void check_isometry(const AmbientModel& m, const IsometryTag& iso) {
    const bool sol = !m.is_ekt();
    switch (iso.kind) {
        case IsometryKind::LeftTranslation:
        case IsometryKind::Isotropy:
            if (!sol) throw InvalidIsometry("left translations and isotropy words are modeled for Sol3 only");
            break;
        case IsometryKind::VerticalTranslation:
        case IsometryKind::FiberRotation:
        case IsometryKind::FiberFlip:
            if (sol) throw InvalidIsometry("fiber isometries apply to E(kappa,tau) only");
            break;
    }
}

inline Vec3 apply_isometry(const AmbientModel& m, const IsometryTag& iso, const Vec3& p) {
    check_isometry(m, iso);
    switch (iso.kind) {
        case IsometryKind::LeftTranslation: return sol3_multiply(m, iso.point, p);
        case IsometryKind::Isotropy: return isotropy_matrix(iso.word) * p;
        case IsometryKind::VerticalTranslation: return p + Vec3(0.0, 0.0, iso.amount);
        case IsometryKind::FiberRotation: {
            const double c = std::cos(iso.amount), s = std::sin(iso.amount);
            return Vec3(c * p.x() - s * p.y(), s * p.x() + c * p.y(), p.z());
        }
        case IsometryKind::FiberFlip: return Vec3(p.x(), -p.y(), -p.z());
    }
    return p;
}

/// Differential of the isometry at p in coordinates.
inline Mat3 isometry_jacobian(const AmbientModel& m, const IsometryTag& iso, const Vec3& p) {
    check_isometry(m, iso);
    Mat3 D = Mat3::Identity();
    switch (iso.kind) {
        case IsometryKind::LeftTranslation: {
            const double c = std::cosh(m.mu * iso.point.z()), s = std::sinh(m.mu * iso.point.z());
            D << c, -s, 0, -s, c, 0, 0, 0, 1;
            break;
        }
        case IsometryKind::Isotropy: D = isotropy_matrix(iso.word); break;
        case IsometryKind::VerticalTranslation: break;
        case IsometryKind::FiberRotation: {
            const double c = std::cos(iso.amount), s = std::sin(iso.amount);
            D << c, -s, 0, s, c, 0, 0, 0, 1;
            break;
        }
        case IsometryKind::FiberFlip: D = Eigen::Vector3d(1, -1, -1).asDiagonal(); break;
    }
    (void)p;
    return D;
}

}  // namespace bonnetlab
