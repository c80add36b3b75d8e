#pragma once

#include "bonnetlab/congruence.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace bonnetlab {

struct DegeneratePatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NotInvariant : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct Sol3Options {
    double eps_deg = 1e-8;
    double x_alpha_tol = 1e-6;    // |X_alpha| below this (scaled) counts as constant Gauss map
    int scan = 128;               // torus scan resolution per axis
    double newton_tol = 1e-12;    // on P1^2 + P2^2, relative to the coefficient scale
    double accept_tol = 1e-8;     // |P1|, |P2| for a returned root
    double cluster = 1e-6;        // torus distance
    double consistency_factor = 10.0;
    int margin = 4;
};

// Pointwise polynomial system -------------------------------------------------

/// Data entering f1, f2 at one sample.
struct Sol3PointData {
    double mu = 1.0;
    double nu1 = 0, nu2 = 0, nu3 = 0, H = 0;
    double A1 = 0, A2 = 0, B1 = 0, B2 = 0;

    double scale() const {
        return 1.0 + std::abs(A1) + std::abs(A2) + std::abs(B1) + std::abs(B2) + std::abs(H) + mu * mu;
    }
};

namespace detail {

struct Dual {
    double v = 0, d = 0;
};
inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator*(double s, Dual a) { return {s * a.v, s * a.d}; }
inline double value(double x) { return x; }
inline double value(Dual x) { return x.v; }

}  // namespace detail

/// f1 and f2 of the data with T3 replaced by Rot_psi T3 (x = cos psi, y = sin psi) and (nu1, nu2) by (n1, n2).
template <class T>
std::array<T, 2> sol3_f(const Sol3PointData& p, T x, T y, T n1, T n2) {
    const double w = 1.0 - p.nu3 * p.nu3, mu = p.mu, H = p.H, n3 = p.nu3;
    const T A1 = p.A1 * x + p.A2 * y;
    const T A2 = p.A2 * x - p.A1 * y;
    const T B1 = p.B1 * x + p.B2 * y;
    const T n12 = n1 * n2;
    const T div = T{2.0 * H * n3} - 2.0 * mu * n12;
    const T zeta = mu * (n1 * n1 - n2 * n2);
    const T f1 = (1.0 / w) * (div * A1) + B1 - 6.0 * mu * H * n12;
    const T f2 = (1.0 / w) * (H * (1.0 + n3 * n3) * A1 + zeta * A2) + n3 * B1 - 2.0 * mu * mu * (n12 * n12) - 4.0 * mu * H * n3 * n12;
    return {f1, f2};
}

struct Sol3Root {
    double psi = 0, sigma = 0;
    double x = 1, y = 0, n1 = 0, n2 = 0;
    double residual = 0;
};

struct PointwiseRoots {
    std::vector<Sol3Root> roots;
    int raw = 0;
    int classes = 0;
    int nontrivial = 0;
    bool trivial_found = false;
    int dropped = 0;  // basins where Newton did not converge
};

inline std::array<double, 2> sol3_P(const Sol3PointData& p, double x, double y, double n1, double n2) {
    const auto f0 = sol3_f<double>(p, 1.0, 0.0, p.nu1, p.nu2);
    const auto f = sol3_f<double>(p, x, y, n1, n2);
    return {f0[0] - f[0], f0[1] - f[1]};
}

namespace detail {

inline double torus_distance(double a1, double b1, double a2, double b2) {
    return std::hypot(std::remainder(a1 - a2, 2.0 * M_PI), std::remainder(b1 - b2, 2.0 * M_PI));
}

}  // namespace detail

/// The four transformations fixing J and nu3 acting on (x, y, n1, n2).
inline std::array<std::array<double, 4>, 4> isotropy_images(const Sol3Root& r) {
    return {{{r.x, r.y, r.n1, r.n2}, {r.x, r.y, -r.n1, -r.n2}, {-r.x, -r.y, -r.n2, r.n1}, {-r.x, -r.y, r.n2, -r.n1}}};
}

/// Groups roots into classes under the isotropy images; class containing (1, 0, nu1, nu2) is trivial.
inline void dedup_by_isotropy(PointwiseRoots& pr, const Sol3PointData& p, double tol = 1e-6) {
    const int n = static_cast<int>(pr.roots.size());
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int a) { return parent[a] == a ? a : parent[a] = find(parent[a]); };
    auto close = [&](const std::array<double, 4>& a, const Sol3Root& b) {
        return std::abs(a[0] - b.x) + std::abs(a[1] - b.y) + std::abs(a[2] - b.n1) + std::abs(a[3] - b.n2) <= tol;
    };
    for (int a = 0; a < n; ++a)
        for (const auto& img : isotropy_images(pr.roots[a]))
            for (int b = 0; b < n; ++b)
                if (close(img, pr.roots[b])) parent[find(a)] = find(b);
    int classes = 0;
    for (int a = 0; a < n; ++a) classes += find(a) == a;
    pr.classes = classes;
    pr.trivial_found = false;
    const Sol3Root triv{0, 0, 1, 0, p.nu1, p.nu2, 0};
    for (int a = 0; a < n; ++a)
        for (const auto& img : isotropy_images(triv))
            if (close(img, pr.roots[a])) pr.trivial_found = true;
    pr.nontrivial = classes - (pr.trivial_found ? 1 : 0);
}

/// Roots of P1 = P2 = 0 on the torus (psi, sigma) with (n1, n2) = rho (cos sigma, sin sigma).
inline PointwiseRoots pointwise_mate_system(const Sol3PointData& p, const Sol3Options& opt = {}) {
    if (1.0 - p.nu3 * p.nu3 < opt.eps_deg) throw DegeneratePatch("1 - nu3^2 below the degeneracy threshold");
    const double rho = std::sqrt(std::max(0.0, p.nu1 * p.nu1 + p.nu2 * p.nu2));
    const double sc = p.scale();
    const auto f0 = sol3_f<double>(p, 1.0, 0.0, p.nu1, p.nu2);
    auto P = [&](double psi, double sig) {
        const auto f = sol3_f<double>(p, std::cos(psi), std::sin(psi), rho * std::cos(sig), rho * std::sin(sig));
        return std::array<double, 2>{f0[0] - f[0], f0[1] - f[1]};
    };
    auto jac = [&](double psi, double sig) {
        using detail::Dual;
        const double c = std::cos(psi), s = std::sin(psi), cs = std::cos(sig), ss = std::sin(sig);
        const auto fp = sol3_f<Dual>(p, Dual{c, -s}, Dual{s, c}, Dual{rho * cs, 0}, Dual{rho * ss, 0});
        const auto fs = sol3_f<Dual>(p, Dual{c, 0}, Dual{s, 0}, Dual{rho * cs, -rho * ss}, Dual{rho * ss, rho * cs});
        Mat2 J;
        J << -fp[0].d, -fs[0].d, -fp[1].d, -fs[1].d;
        return J;
    };
    const int N = opt.scan;
    const double step = 2.0 * M_PI / N;
    std::vector<double> F(static_cast<std::size_t>(N) * N);
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b) {
            const auto v = P(a * step, b * step);
            F[static_cast<std::size_t>(a) * N + b] = v[0] * v[0] + v[1] * v[1];
        }
    std::vector<std::array<double, 2>> seeds;
    seeds.push_back({0.0, std::atan2(p.nu2, p.nu1)});
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b) {
            const double v = F[static_cast<std::size_t>(a) * N + b];
            bool minimum = true;
            for (int da = -1; da <= 1 && minimum; ++da)
                for (int db = -1; db <= 1; ++db) {
                    if (!da && !db) continue;
                    const int aa = (a + da + N) % N, bb = (b + db + N) % N;
                    if (F[static_cast<std::size_t>(aa) * N + bb] < v) {
                        minimum = false;
                        break;
                    }
                }
            if (minimum) seeds.push_back({a * step, b * step});
        }

    PointwiseRoots out;
    const double tol2 = opt.newton_tol * sc * sc;
    for (const auto& s0 : seeds) {
        double psi = s0[0], sig = s0[1];
        auto v = P(psi, sig);
        double r2 = v[0] * v[0] + v[1] * v[1];
        for (int it = 0; it < 60 && r2 > 1e-32 * sc * sc; ++it) {
            const Mat2 J = jac(psi, sig);
            if (std::abs(J.determinant()) < 1e-300) break;
            const Vec2 d = J.partialPivLu().solve(-Vec2(v[0], v[1]));
            double lam = 1.0;
            bool improved = false;
            for (int k = 0; k < 40; ++k, lam *= 0.5) {
                const auto w = P(psi + lam * d(0), sig + lam * d(1));
                const double q = w[0] * w[0] + w[1] * w[1];
                if (q < r2) {
                    psi += lam * d(0);
                    sig += lam * d(1);
                    v = w;
                    r2 = q;
                    improved = true;
                    break;
                }
            }
            if (!improved || lam * d.norm() < 1e-16) break;
        }
        const double res = std::max(std::abs(v[0]), std::abs(v[1]));
        if (r2 > tol2 || res > opt.accept_tol * sc) {
            ++out.dropped;
            continue;
        }
        psi = std::remainder(psi, 2.0 * M_PI);
        sig = std::remainder(sig, 2.0 * M_PI);
        bool dup = false;
        for (const auto& r : out.roots) dup = dup || detail::torus_distance(psi, sig, r.psi, r.sigma) <= opt.cluster;
        if (dup) continue;
        out.roots.push_back({psi, sig, std::cos(psi), std::sin(psi), rho * std::cos(sig), rho * std::sin(sig), res});
    }
    out.raw = static_cast<int>(out.roots.size());
    dedup_by_isotropy(out, p, 10.0 * opt.cluster * (1.0 + rho));
    return out;
}

// Field-level quantities --------------------------------------------------------

inline Sol3PointData point_data(const FundamentalDataSol3& d, const Sol3Derived& dv, int i, int j) {
    Sol3PointData p;
    p.mu = d.model.mu;
    p.nu1 = d.nu[0](i, j);
    p.nu2 = d.nu[1](i, j);
    p.nu3 = d.nu[2](i, j);
    p.H = d.H(i, j);
    p.A1 = dv.A1(i, j);
    p.A2 = dv.A2(i, j);
    p.B1 = dv.B1(i, j);
    p.B2 = dv.B2(i, j);
    return p;
}

/// sup over interior samples of max_alpha |X_alpha|, scaled.
inline double sup_x_alpha(const FundamentalDataSol3& d, const IntrinsicCalculus& calc, const Sol3Derived& dv, int margin) {
    const int m = d.samples();
    double w = 0.0;
    for (int i = margin; i < m - margin; ++i)
        for (int j = margin; j < m - margin; ++j)
            for (int a = 0; a < 3; ++a) w = std::max(w, calc.norm(i, j, dv.X[a](i, j)));
    return w;
}

inline bool has_constant_gauss_map(const FundamentalDataSol3& d, const Sol3Options& opt = {}) {
    const IntrinsicCalculus calc = calculus(d);
    const Sol3Derived dv = derive_sol3(d, calc);
    return sup_x_alpha(d, calc, dv, opt.margin) <= opt.x_alpha_tol * (1.0 + d.model.mu);
}

struct RootScan {
    Field<int> raw, classes, nontrivial;
    Field<unsigned char> masked, trivial;
    int max_raw = 0, max_nontrivial = 0, unmasked = 0, trivial_count = 0, dropped = 0;
    bool constant_gauss_map = false;
};

/// Pointwise roots at every `stride`-th interior sample.
inline RootScan scan_roots(const FundamentalDataSol3& d, const Sol3Options& opt = {}, int stride = 1) {
    const int m = d.samples();
    const IntrinsicCalculus calc = calculus(d);
    const Sol3Derived dv = derive_sol3(d, calc);
    RootScan rs;
    rs.raw = rs.classes = rs.nontrivial = Field<int>(m, 0);
    rs.masked = Field<unsigned char>(m, 1);
    rs.trivial = Field<unsigned char>(m, 0);
    const double xtol = opt.x_alpha_tol * (1.0 + d.model.mu);
    rs.constant_gauss_map = sup_x_alpha(d, calc, dv, opt.margin) <= xtol;
    for (int i = opt.margin; i < m - opt.margin; i += stride)
        for (int j = opt.margin; j < m - opt.margin; j += stride) {
            const double n3 = d.nu[2](i, j);
            if (1.0 - n3 * n3 < opt.eps_deg) continue;
            double xa = 0.0;
            for (int a = 0; a < 3; ++a) xa = std::max(xa, calc.norm(i, j, dv.X[a](i, j)));
            if (xa <= xtol) continue;
            const PointwiseRoots pr = pointwise_mate_system(point_data(d, dv, i, j), opt);
            rs.masked(i, j) = 0;
            rs.raw(i, j) = pr.raw;
            rs.classes(i, j) = pr.classes;
            rs.nontrivial(i, j) = pr.nontrivial;
            rs.trivial(i, j) = pr.trivial_found;
            rs.max_raw = std::max(rs.max_raw, pr.raw);
            rs.max_nontrivial = std::max(rs.max_nontrivial, pr.nontrivial);
            rs.trivial_count += pr.trivial_found;
            rs.dropped += pr.dropped;
            ++rs.unmasked;
        }
    return rs;
}

// The differential system for (psi, phi) ----------------------------------------

struct MateAngleSol3 {
    Field<double> cpsi, spsi, cphi, sphi;
    double psi0 = 0, phi0 = 0;
    std::vector<std::pair<std::string, double>> integrability;  // scaled sup per channel
    int size() const { return cpsi.size(); }
};

namespace detail {

/// Covector coefficients (g v)_k of the pieces entering the right-hand sides.
struct LocalCoeffs {
    Vec2 gT = Vec2::Zero(), gJT = Vec2::Zero(), gX3 = Vec2::Zero();
    double w = 0, H = 0, n3 = 0, c2 = 0, s2 = 0, divT = 0;  // c2 = nu1^2 - nu2^2, s2 = 2 nu1 nu2

    LocalCoeffs& axpy(double a, const LocalCoeffs& o) {
        gT += a * o.gT;
        gJT += a * o.gJT;
        gX3 += a * o.gX3;
        w += a * o.w;
        H += a * o.H;
        n3 += a * o.n3;
        c2 += a * o.c2;
        s2 += a * o.s2;
        divT += a * o.divT;
        return *this;
    }
};

inline Field<LocalCoeffs> phi_psi_coefficients(const FundamentalDataSol3& d, const Sol3Derived& dv, double eps_deg) {
    const int m = d.samples();
    Field<LocalCoeffs> c(m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const Mat2& g = d.metric(i, j);
            const double n1 = d.nu[0](i, j), n2 = d.nu[1](i, j), n3 = d.nu[2](i, j);
            LocalCoeffs& L = c(i, j);
            L.w = 1.0 - n3 * n3;
            if (L.w < eps_deg) throw DegeneratePatch("1 - nu3^2 below the degeneracy threshold");
            L.gT = g * d.T[2](i, j);
            L.gJT = g * (d.J(i, j) * d.T[2](i, j));
            L.gX3 = g * dv.X[2](i, j);
            L.H = d.H(i, j);
            L.n3 = n3;
            L.c2 = n1 * n1 - n2 * n2;
            L.s2 = 2.0 * n1 * n2;
            L.divT = 2.0 * d.H(i, j) * n3 - 2.0 * d.model.mu * n1 * n2;
        }
    return c;
}

/// Cubic interpolation at the midpoint between samples k and k+1 of a line of length m.
template <class Get>
LocalCoeffs midpoint(Get at, int k, int m) {
    LocalCoeffs r;
    if (k >= 1 && k + 2 < m) {
        r.axpy(-1.0 / 16, at(k - 1)).axpy(9.0 / 16, at(k)).axpy(9.0 / 16, at(k + 1)).axpy(-1.0 / 16, at(k + 2));
    } else if (k == 0) {
        r.axpy(5.0 / 16, at(0)).axpy(15.0 / 16, at(1)).axpy(-5.0 / 16, at(2)).axpy(1.0 / 16, at(3));
    } else {
        r.axpy(1.0 / 16, at(k - 2)).axpy(-5.0 / 16, at(k - 1)).axpy(15.0 / 16, at(k)).axpy(5.0 / 16, at(k + 1));
    }
    return r;
}

/// Covector (d psi, d phi) along axis k at given angles.
inline std::array<double, 2> phi_psi_rhs(const LocalCoeffs& L, double mu, double psi, double phi, int k) {
    const double c = std::cos(psi), s = std::sin(psi), c2p = std::cos(2.0 * phi), s2p = std::sin(2.0 * phi);
    const double zeta_t = mu * (L.c2 * c2p - L.s2 * s2p);
    const double div_t = 2.0 * L.H * L.n3 - mu * (L.s2 * c2p + L.c2 * s2p);
    const double rotT = c * L.gT(k) + s * L.gJT(k);
    const double rotJT = c * L.gJT(k) - s * L.gT(k);
    const double dpsi = (div_t * rotJT - L.divT * L.gJT(k)) / L.w;
    const double dphi = (L.gX3(k) + 2.0 * L.H * rotJT - zeta_t * rotT) / L.w;
    return {dpsi, dphi};
}

}  // namespace detail

/// Right-hand sides of the (psi, phi) system at every sample for given angle fields, as tangent vectors.
/// div(Rot_psi T3) is obtained by differencing the rotated field.
inline std::array<Field<Vec2>, 2> grad_phi_psi(const FundamentalDataSol3& d, const MateAngleSol3& ang) {
    const int m = d.samples();
    const double mu = d.model.mu;
    const IntrinsicCalculus calc = calculus(d);
    const Sol3Derived dv = derive_sol3(d, calc);
    Field<Vec2> RT(m), RJT(m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const Vec2& T3 = d.T[2](i, j);
            const Vec2 JT = d.J(i, j) * T3;
            RT(i, j) = ang.cpsi(i, j) * T3 + ang.spsi(i, j) * JT;
            RJT(i, j) = ang.cpsi(i, j) * JT - ang.spsi(i, j) * T3;
        }
    const Field<double> divRT = calc.divergence(RT), divT = calc.divergence(d.T[2]);
    std::array<Field<Vec2>, 2> out{Field<Vec2>(m), Field<Vec2>(m)};
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const double n1 = d.nu[0](i, j), n2 = d.nu[1](i, j), n3 = d.nu[2](i, j), w = 1.0 - n3 * n3;
            const double t1 = ang.cphi(i, j) * n1 - ang.sphi(i, j) * n2, t2 = ang.sphi(i, j) * n1 + ang.cphi(i, j) * n2;
            const double zeta_t = mu * (t1 * t1 - t2 * t2);
            const Vec2 JT = d.J(i, j) * d.T[2](i, j);
            out[0](i, j) = (divRT(i, j) * RJT(i, j) - divT(i, j) * JT) / w;
            out[1](i, j) = (dv.X[2](i, j) + 2.0 * d.H(i, j) * RJT(i, j) - zeta_t * RT(i, j)) / w;
        }
    return out;
}

struct MateCandidateSol3 {
    MateAngleSol3 angles;
    FundamentalDataSol3 mate;
    ResidualReport verification;
    CongruenceVerdict verdict;
    double spectrum_deviation = 0.0;
    double nu3_deviation = 0.0;
    double nu12_deviation = 0.0;
};

/// Mate data from angle fields: T~3 = Rot_psi T3, nu~ = Rot_phi (nu1, nu2), T~1, T~2 by elimination.
inline FundamentalDataSol3 assemble_sol3_mate(const FundamentalDataSol3& d, const MateAngleSol3& a) {
    FundamentalDataSol3 r = d;
    r.name = d.name + "~";
    const int m = d.samples();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const Mat2 J = d.J(i, j);
            const double n1 = d.nu[0](i, j), n2 = d.nu[1](i, j), n3 = d.nu[2](i, j), w = 1.0 - n3 * n3;
            const double t1 = a.cphi(i, j) * n1 - a.sphi(i, j) * n2, t2 = a.sphi(i, j) * n1 + a.cphi(i, j) * n2;
            const Vec2 T3 = a.cpsi(i, j) * d.T[2](i, j) + a.spsi(i, j) * (J * d.T[2](i, j));
            r.nu[0](i, j) = t1;
            r.nu[1](i, j) = t2;
            r.T[2](i, j) = T3;
            r.T[0](i, j) = (-t1 * n3 * T3 + t2 * (J * T3)) / w;
            r.T[1](i, j) = (-t2 * n3 * T3 - t1 * (J * T3)) / w;
        }
    return r;
}

namespace detail {
inline void sol3_mate_invariants(const FundamentalDataSol3& d, MateCandidateSol3& c, int margin) {
    const int m = d.samples();
    c.spectrum_deviation = compare_principal_curvatures(d, c.mate, margin);
    for (int i = margin; i < m - margin; ++i)
        for (int j = margin; j < m - margin; ++j) {
            c.nu3_deviation = std::max(c.nu3_deviation, std::abs(c.mate.nu[2](i, j) - d.nu[2](i, j)));
            const double r0 = d.nu[0](i, j) * d.nu[0](i, j) + d.nu[1](i, j) * d.nu[1](i, j);
            const double r1 = c.mate.nu[0](i, j) * c.mate.nu[0](i, j) + c.mate.nu[1](i, j) * c.mate.nu[1](i, j);
            c.nu12_deviation = std::max(c.nu12_deviation, std::abs(r1 - r0));
        }
}
}  // namespace detail

inline ResidualReport integrability_residuals(const FundamentalDataSol3& d, const FundamentalDataSol3& mate,
                                              const MaskPolicy& policy = {});

namespace detail {
inline void record_integrability(const FundamentalDataSol3& d, MateCandidateSol3& c, const MaskPolicy& policy) {
    const ResidualReport ir = integrability_residuals(d, c.mate, policy);
    c.angles.integrability.clear();
    for (const auto& ch : ir.channels) c.angles.integrability.emplace_back(ch.name, ch.sup / ir.scale);
}
}  // namespace detail

struct Sol3SolveResult {
    bool solved = false;
    std::string reason;
    double consistency = 0.0;
    double tolerance = 0.0;
    MateAngleSol3 angles;
    std::optional<MateCandidateSol3> candidate;
};

/// Integrates the (psi, phi) system from (psi0, phi0) at sample (0, 0): rows first, columns as cross-check.
inline Sol3SolveResult solve_mate_system(const FundamentalDataSol3& d, double psi0, double phi0, const Sol3Options& opt = {},
                                         const MaskPolicy& policy = {}) {
    const int m = d.samples();
    const double mu = d.model.mu, hu = d.grid.hu(), hv = d.grid.hv();
    const IntrinsicCalculus calc = calculus(d);
    const Sol3Derived dv = derive_sol3(d, calc);
    if (sup_x_alpha(d, calc, dv, opt.margin) <= opt.x_alpha_tol * (1.0 + mu))
        throw DegeneratePatch("constant Gauss map: use the rotation family");
    const Field<detail::LocalCoeffs> C = detail::phi_psi_coefficients(d, dv, opt.eps_deg);

    using State = std::array<double, 2>;
    // axis 0 moves along i at fixed j; axis 1 along j at fixed i.
    auto step = [&](const State& y, int i0, int j0, int axis, double h) {
        const int i1 = i0 + (axis == 0), j1 = j0 + (axis == 1);
        const detail::LocalCoeffs& L0 = C(i0, j0);
        const detail::LocalCoeffs& L1 = C(i1, j1);
        const detail::LocalCoeffs Lm = axis == 0 ? detail::midpoint([&](int k) -> const detail::LocalCoeffs& { return C(k, j0); }, i0, m)
                                                 : detail::midpoint([&](int k) -> const detail::LocalCoeffs& { return C(i0, k); }, j0, m);
        auto f = [&](const detail::LocalCoeffs& L, const State& s) { return detail::phi_psi_rhs(L, mu, s[0], s[1], axis); };
        const State k1 = f(L0, y);
        const State k2 = f(Lm, {y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]});
        const State k3 = f(Lm, {y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]});
        const State k4 = f(L1, {y[0] + h * k3[0], y[1] + h * k3[1]});
        return State{y[0] + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]), y[1] + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])};
    };
    Field<State> rowf(m), colf(m);
    rowf(0, 0) = colf(0, 0) = {psi0, phi0};
    for (int i = 1; i < m; ++i) rowf(i, 0) = step(rowf(i - 1, 0), i - 1, 0, 0, hu);
    for (int i = 0; i < m; ++i)
        for (int j = 1; j < m; ++j) rowf(i, j) = step(rowf(i, j - 1), i, j - 1, 1, hv);
    for (int j = 1; j < m; ++j) colf(0, j) = step(colf(0, j - 1), 0, j - 1, 1, hv);
    for (int j = 0; j < m; ++j)
        for (int i = 1; i < m; ++i) colf(i, j) = step(colf(i - 1, j), i - 1, j, 0, hu);

    Sol3SolveResult r;
    r.angles = MateAngleSol3{Field<double>(m), Field<double>(m), Field<double>(m), Field<double>(m), psi0, phi0};
    double scale = 1.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const State& s = rowf(i, j);
            r.angles.cpsi(i, j) = std::cos(s[0]);
            r.angles.spsi(i, j) = std::sin(s[0]);
            r.angles.cphi(i, j) = std::cos(s[1]);
            r.angles.sphi(i, j) = std::sin(s[1]);
            for (int k = 0; k < 2; ++k)
                r.consistency = std::max(r.consistency, std::abs(std::remainder(s[k] - colf(i, j)[k], 2.0 * M_PI)));
            scale = std::max(scale, 1.0 + std::abs(d.H(i, j)));
        }
    r.tolerance = opt.consistency_factor * hu * hv * scale;
    if (!(r.consistency <= r.tolerance)) {
        r.reason = "row/column integrations disagree";
        return r;
    }
    MateCandidateSol3 c;
    c.angles = r.angles;
    c.mate = assemble_sol3_mate(d, r.angles);
    detail::record_integrability(d, c, policy);
    for (const auto& [name, v] : c.angles.integrability)
        if (name.rfind("closed_", 0) == 0 && !(v <= r.tolerance)) {
            r.reason = "closedness residual " + name + " exceeds tolerance";
            return r;
        }
    c.verification = residuals_sol3(c.mate, policy);
    // Integrated angles carry the integration error, so congruence is judged at that level.
    c.verdict = congruence_test(d, c.mate, CongruenceOptions{std::max(1e-6, opt.consistency_factor * hu * hv), policy.margin});
    detail::sol3_mate_invariants(d, c, policy.margin);
    r.solved = true;
    r.candidate = std::move(c);
    return r;
}

struct MateSearch {
    PointwiseRoots seeds;  // pointwise roots at the start sample
    std::vector<Sol3SolveResult> attempts;
    int solved_nontrivial = 0;
};

/// Integrates from every pointwise root at sample (0, 0); a global mate must start at one of them.
inline MateSearch search_mates(const FundamentalDataSol3& d, const Sol3Options& opt = {}, const MaskPolicy& policy = {}) {
    const IntrinsicCalculus calc = calculus(d);
    const Sol3Derived dv = derive_sol3(d, calc);
    MateSearch s;
    const Sol3PointData p = point_data(d, dv, 0, 0);
    s.seeds = pointwise_mate_system(p, opt);
    const double beta = std::atan2(p.nu2, p.nu1);
    for (const auto& r : s.seeds.roots) {
        s.attempts.push_back(solve_mate_system(d, r.psi, r.sigma - beta, opt, policy));
        const auto& a = s.attempts.back();
        if (a.solved && !a.candidate->verdict.congruent) ++s.solved_nontrivial;
    }
    return s;
}

/// Angle fields relating two data sets: T~3 = Rot_psi T3 and nu~ = Rot_phi nu (horizontal part).
inline MateAngleSol3 angles_between(const FundamentalDataSol3& d, const FundamentalDataSol3& t) {
    const int m = d.samples();
    MateAngleSol3 a{Field<double>(m, 1.0), Field<double>(m, 0.0), Field<double>(m, 1.0), Field<double>(m, 0.0), 0.0, 0.0};
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const Mat2& g = d.metric(i, j);
            const Vec2& T3 = d.T[2](i, j);
            const Vec2 JT = d.J(i, j) * T3;
            const double c = T3.dot(g * t.T[2](i, j)), s = JT.dot(g * t.T[2](i, j)), r = std::hypot(c, s);
            if (r > 0) {
                a.cpsi(i, j) = c / r;
                a.spsi(i, j) = s / r;
            }
            const double n1 = d.nu[0](i, j), n2 = d.nu[1](i, j), m1 = t.nu[0](i, j), m2 = t.nu[1](i, j);
            const double pc = n1 * m1 + n2 * m2, ps = n1 * m2 - n2 * m1, pr = std::hypot(pc, ps);
            if (pr > 0) {
                a.cphi(i, j) = pc / pr;
                a.sphi(i, j) = ps / pr;
            }
        }
    return a;
}

/// Closedness of the two right-hand-side 1-forms and the pointwise identities f_i = f~_i.
inline ResidualReport integrability_residuals(const FundamentalDataSol3& d, const FundamentalDataSol3& mate,
                                              const MaskPolicy& policy) {
    const int m = d.samples();
    const double mu = d.model.mu;
    const IntrinsicCalculus calc = calculus(d);
    const MateAngleSol3 ang = angles_between(d, mate);
    const auto rhs = grad_phi_psi(d, ang);
    Field<Vec2> Jpsi(m), Jphi(m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            Jpsi(i, j) = d.J(i, j) * rhs[0](i, j);
            Jphi(i, j) = d.J(i, j) * rhs[1](i, j);
        }
    const Field<double> cpsi = calc.divergence(Jpsi), cphi = calc.divergence(Jphi);
    const Sol3Derived dv = derive_sol3(d, calc), tv = derive_sol3(mate, calc);
    const Field<double> divT = calc.divergence(d.T[2]), divTt = calc.divergence(mate.T[2]);
    auto fvals = [&](const FundamentalDataSol3& x, const Sol3Derived& v, const Field<double>& dT, int i, int j) {
        const double n1 = x.nu[0](i, j), n2 = x.nu[1](i, j), n3 = x.nu[2](i, j), w = 1.0 - n3 * n3, H = x.H(i, j);
        const double f1 = dT(i, j) / w * v.A1(i, j) + v.B1(i, j) - 6.0 * mu * H * n1 * n2;
        const double f2 = (H * (1.0 + n3 * n3) * v.A1(i, j) + v.zeta(i, j) * v.A2(i, j)) / w + n3 * v.B1(i, j) -
                          2.0 * mu * mu * n1 * n1 * n2 * n2 - 4.0 * mu * H * n1 * n2 * n3;
        return std::array<double, 2>{f1, f2};
    };
    ResidualReport r;
    r.fixture = mate.name;
    r.model = "sol3";
    r.h = d.grid.hu();
    const Field<unsigned char> base = boundary_mask(m, policy.margin);
    double scale = 1.0;
    for (int i = policy.margin; i < m - policy.margin; ++i)
        for (int j = policy.margin; j < m - policy.margin; ++j) {
            const Principal p = principal(d.metric(i, j), dv.S(i, j), d.sigma(i, j));
            scale = std::max(scale, 1.0 + std::abs(p.k1) + std::abs(p.k2) + std::abs(d.H(i, j)));
        }
    r.scale = scale;
    detail::ReportBuilder b(r, d.grid, base);
    b.add("closed_dpsi", [&](int i, int j) { return cpsi(i, j); });
    b.add("closed_dphi", [&](int i, int j) { return cphi(i, j); });
    b.add("f1", [&](int i, int j) { return fvals(d, dv, divT, i, j)[0] - fvals(mate, tv, divTt, i, j)[0]; });
    b.add("f2", [&](int i, int j) { return fvals(d, dv, divT, i, j)[1] - fvals(mate, tv, divTt, i, j)[1]; });
    return r;
}

/// Tangential coefficients of an ambient Killing field along the data's patch positions.
inline Field<Vec2> killing_coefficients(const SurfacePatch& patch, const std::function<Vec3(const Vec3&)>& K) {
    if (!K) throw NotInvariant("fixture carries no Killing field");
    const Field<JetSample> jets = sample_jets(patch);
    const int m = patch.grid.samples();
    Field<Vec2> Z(m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const auto& s = jets(i, j);
            const Mat3 G = metric_at(patch.model, s.p);
            Mat2 I;
            I << s.fu.dot(G * s.fu), s.fu.dot(G * s.fv), s.fv.dot(G * s.fu), s.fv.dot(G * s.fv);
            Z(i, j) = tangential(G, I.inverse(), s.fu, s.fv, K(s.p));
        }
    return Z;
}

/// R(Y) = <Y, w> w - <Y, Jw> Jw with w = -J Z / |Z|.
inline Mat2 reflection_operator(const Mat2& g, const Mat2& J, const Vec2& Z) {
    const double n = std::sqrt(Z.dot(g * Z));
    const Vec2 w = -(J * Z) / n, Jw = J * w;
    return w * (g * w).transpose() - Jw * (g * Jw).transpose();
}

inline MateCandidateSol3 reflection_mate(const FundamentalDataSol3& d, const Field<Vec2>& Z, const MaskPolicy& policy = {}) {
    const int m = d.samples();
    FundamentalDataSol3 r = d;
    r.name = d.name + "~reflection";
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const Mat2& g = d.metric(i, j);
            if (std::sqrt(Z(i, j).dot(g * Z(i, j))) <= 1e-12) throw NotInvariant("Killing field vanishes on the patch");
            const Mat2 R = reflection_operator(g, d.J(i, j), Z(i, j));
            for (int a = 0; a < 3; ++a) r.T[a](i, j) = R * d.T[a](i, j);
            r.sigma(i, j) = -d.sigma(i, j);
        }
    MateCandidateSol3 c;
    c.angles = angles_between(d, r);
    c.mate = std::move(r);
    detail::record_integrability(d, c, policy);
    c.verification = residuals_sol3(c.mate, policy);
    c.verdict = congruence_test(d, c.mate);
    detail::sol3_mate_invariants(d, c, policy.margin);
    return c;
}

/// Constant intrinsic rotation of all T_alpha, for the constant-Gauss-map branch.
inline MateCandidateSol3 rotation_family_sol3(const FundamentalDataSol3& d, double theta0, const MaskPolicy& policy = {}) {
    const int m = d.samples();
    FundamentalDataSol3 r = d;
    r.name = d.name + "~rotation";
    const double c = std::cos(theta0), s = std::sin(theta0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const Mat2 Rot = c * Mat2::Identity() + s * d.J(i, j);
            for (int a = 0; a < 3; ++a) r.T[a](i, j) = Rot * d.T[a](i, j);
        }
    MateCandidateSol3 out;
    out.angles = angles_between(d, r);
    out.mate = std::move(r);
    detail::record_integrability(d, out, policy);
    out.verification = residuals_sol3(out.mate, policy);
    out.verdict = congruence_test(d, out.mate);
    detail::sol3_mate_invariants(d, out, policy.margin);
    return out;
}

}  // namespace bonnetlab
