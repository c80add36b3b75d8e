#pragma once

#include "bonnetlab/immersion.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace bonnetlab {

struct MaskPolicy {
    int margin = 4;       // samples dropped along each edge
    double eps_deg = 1e-8;  // guard for divisions by 1 - nu^2
};

struct Channel {
    std::string name;
    bool gated = true;
    Field<double> values;
    Field<unsigned char> excluded;
    double sup = 0.0;
    double l2 = 0.0;
    int n_masked = 0;
};

struct ResidualReport {
    std::string fixture;
    std::string model;
    double h = 0.0;
    double scale = 1.0;
    std::vector<Channel> channels;

    const Channel* find(const std::string& name) const {
        for (const auto& c : channels)
            if (c.name == name) return &c;
        return nullptr;
    }
    double scaled_sup(const std::string& name) const {
        const Channel* c = find(name);
        return c ? c->sup / scale : 0.0;
    }
    /// Largest scaled sup-norm among gated channels.
    double worst_gated() const {
        double w = 0.0;
        for (const auto& c : channels)
            if (c.gated) w = std::max(w, c.sup / scale);
        return w;
    }
    std::string worst_gated_name() const {
        double w = -1.0;
        std::string n;
        for (const auto& c : channels)
            if (c.gated && c.sup / scale > w) {
                w = c.sup / scale;
                n = c.name;
            }
        return n;
    }
};

inline Field<unsigned char> boundary_mask(int samples, int margin) {
    Field<unsigned char> m(samples, 0);
    for (int i = 0; i < samples; ++i)
        for (int j = 0; j < samples; ++j)
            if (i < margin || j < margin || i >= samples - margin || j >= samples - margin) m(i, j) = 1;
    return m;
}

namespace detail {

class ReportBuilder {
public:
    ReportBuilder(ResidualReport& r, const GridSpec& grid, const Field<unsigned char>& base)
        : r_(r), grid_(grid), base_(base) {}

    template <class F>
    void add(const std::string& name, F&& value, bool gated = true, const Field<unsigned char>* extra = nullptr) {
        const int m = grid_.samples();
        Channel c;
        c.name = name;
        c.gated = gated;
        c.values = Field<double>(m, 0.0);
        c.excluded = base_;
        double s2 = 0.0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                if (extra && (*extra)(i, j)) c.excluded(i, j) = 1;
                if (c.excluded(i, j)) {
                    ++c.n_masked;
                    continue;
                }
                const double v = std::abs(value(i, j));
                c.values(i, j) = v;
                c.sup = std::max(c.sup, std::isfinite(v) ? v : 1e300);
                s2 += v * v;
            }
        c.l2 = std::sqrt(s2 * grid_.hu() * grid_.hv());
        r_.channels.push_back(std::move(c));
    }

private:
    ResidualReport& r_;
    GridSpec grid_;
    const Field<unsigned char>& base_;
};

inline double covector_norm(const Mat2& ginv, const Vec2& w) { return std::sqrt(std::max(0.0, w.dot(ginv * w))); }

}  // namespace detail

/// Residuals of the E(kappa,tau) compatibility system and its identities.
inline ResidualReport residuals_ekt(const FundamentalDataEkt& d, const MaskPolicy& policy = {}) {
    if (!d.model.is_ekt()) throw std::invalid_argument("residuals_ekt requires E(kappa,tau) data");
    if (d.grid.n < 5) throw std::invalid_argument("grid too coarse for second differences");
    const int m = d.samples();
    const double kap = d.model.kappa, tau = d.model.tau, c = kap - 4.0 * tau * tau;
    const IntrinsicCalculus calc = calculus(d);

    Field<double> H(m), K_ext(m), sq(m);
    Field<Mat2> J(m);
    Field<Vec2> JT3(m), ST3(m), SJT3(m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            H(i, j) = 0.5 * d.S(i, j).trace();
            K_ext(i, j) = d.S(i, j).determinant();
            sq(i, j) = (d.S(i, j) * d.S(i, j)).trace();
            J(i, j) = d.J(i, j);
            JT3(i, j) = J(i, j) * d.T3(i, j);
            ST3(i, j) = d.S(i, j) * d.T3(i, j);
            SJT3(i, j) = d.S(i, j) * JT3(i, j);
        }
    const Field<double> K = calc.gauss_curvature();
    const Field<Vec2> gnu = calc.gradient(d.nu3), gH = calc.gradient(H);
    const Field<double> lap = calc.laplacian(d.nu3), divT = calc.divergence(d.T3), divJT = calc.divergence(JT3);
    const Field<double> divST = calc.divergence(ST3), divSJT = calc.divergence(SJT3);
    const Field<Mat2> DT = calc.covariant(d.T3), DJT = calc.covariant(JT3);
    const Field<Vec2> cod = calc.codazzi_tensor(d.S);

    ResidualReport r;
    r.fixture = d.name;
    r.model = d.model.name();
    r.h = d.grid.hu();
    const Field<unsigned char> base = boundary_mask(m, policy.margin);
    double scale = 1.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (!base(i, j)) {
                const Principal p = principal(d.metric(i, j), d.S(i, j), d.sigma(i, j));
                scale = std::max(scale, 1.0 + std::abs(p.k1) + std::abs(p.k2) + std::abs(H(i, j)));
            }
    r.scale = scale;
    detail::ReportBuilder b(r, d.grid, base);
    auto ip = [&](int i, int j, const Vec2& a, const Vec2& v) { return calc.inner(i, j, a, v); };

    b.add("gauss", [&](int i, int j) {
        const double n = d.nu3(i, j);
        return K(i, j) - (K_ext(i, j) + tau * tau + c * n * n);
    });
    b.add("codazzi", [&](int i, int j) {
        const Vec2 eu(1, 0), ev(0, 1);
        const Vec2 theta = c * d.nu3(i, j) * (ip(i, j, ev, d.T3(i, j)) * eu - ip(i, j, eu, d.T3(i, j)) * ev);
        return calc.norm(i, j, cod(i, j) - theta) / calc.sqrt_det(i, j);
    });
    b.add("dT3", [&](int i, int j) {
        const Mat2 rhs = d.nu3(i, j) * (d.S(i, j) - tau * J(i, j));
        return calc.tensor_norm(i, j, DT(i, j) - rhs);
    });
    b.add("grad_nu3", [&](int i, int j) { return calc.norm(i, j, gnu(i, j) + ST3(i, j) + tau * JT3(i, j)); });
    b.add("laplacian_nu3", [&](int i, int j) {
        const double n = d.nu3(i, j);
        return lap(i, j) + c * (1.0 - n * n) * n + sq(i, j) * n + 2.0 * tau * tau * n + 2.0 * ip(i, j, gH(i, j), d.T3(i, j));
    });
    b.add("norm_T3", [&](int i, int j) {
        const double n = d.nu3(i, j);
        return ip(i, j, d.T3(i, j), d.T3(i, j)) - (1.0 - n * n);
    });
    b.add("div_T3", [&](int i, int j) { return divT(i, j) - 2.0 * H(i, j) * d.nu3(i, j); });
    b.add("div_JT3", [&](int i, int j) { return divJT(i, j) - 2.0 * tau * d.nu3(i, j); });
    b.add("norm_grad_nu3", [&](int i, int j) {
        const double n = d.nu3(i, j), w = 1.0 - n * n;
        const double rhs = 2.0 * H(i, j) * ip(i, j, ST3(i, j), d.T3(i, j)) - K_ext(i, j) * w +
                           2.0 * tau * ip(i, j, ST3(i, j), JT3(i, j)) + tau * tau * w;
        return ip(i, j, gnu(i, j), gnu(i, j)) - rhs;
    });
    // Trace of the Codazzi tensor along T3 and JT3; implied by the codazzi channel.
    auto trace_term = [&](int i, int j, const Mat2& D) {
        return (calc.ginv(i, j) * D.transpose() * calc.g(i, j) * d.S(i, j)).trace();
    };
    b.add(
        "trace_codazzi",
        [&](int i, int j) {
            const double n = d.nu3(i, j);
            const double t1 = 2.0 * ip(i, j, gH(i, j), d.T3(i, j)) - divST(i, j) + trace_term(i, j, DT(i, j)) +
                              c * n * (1.0 - n * n);
            const double t2 = 2.0 * ip(i, j, gH(i, j), JT3(i, j)) - divSJT(i, j) + trace_term(i, j, DJT(i, j));
            return std::hypot(t1, t2);
        },
        false);
    return r;
}

/// Residuals of the Sol3 compatibility system, the adapted system and the auxiliary identities.
inline ResidualReport residuals_sol3(const FundamentalDataSol3& d, const MaskPolicy& policy = {}) {
    if (d.model.is_ekt()) throw std::invalid_argument("residuals_sol3 requires Sol3 data");
    if (d.grid.n < 5) throw std::invalid_argument("grid too coarse for second differences");
    const int m = d.samples();
    const double mu = d.model.mu;
    const IntrinsicCalculus calc = calculus(d);
    const Sol3Derived dv = derive_sol3(d, calc);

    Field<Vec2> JT3(m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) JT3(i, j) = d.J(i, j) * d.T[2](i, j);
    const Field<double> K = calc.gauss_curvature();
    const std::array<Field<Mat2>, 3> DT{calc.covariant(d.T[0]), calc.covariant(d.T[1]), calc.covariant(d.T[2])};
    const Field<double> divT = calc.divergence(d.T[2]), divJT = calc.divergence(JT3);
    const Field<Vec2> cod = calc.codazzi_tensor(dv.S);

    ResidualReport r;
    r.fixture = d.name;
    r.model = d.model.name();
    r.h = d.grid.hu();
    const Field<unsigned char> base = boundary_mask(m, policy.margin);
    Field<unsigned char> deg(m, 0);
    double scale = 1.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const double n3 = d.nu[2](i, j);
            if (1.0 - n3 * n3 < policy.eps_deg) deg(i, j) = 1;
            if (!base(i, j)) {
                const Principal p = principal(d.metric(i, j), dv.S(i, j), d.sigma(i, j));
                scale = std::max(scale, 1.0 + std::abs(p.k1) + std::abs(p.k2) + std::abs(d.H(i, j)));
            }
        }
    r.scale = scale;
    detail::ReportBuilder b(r, d.grid, base);
    auto ip = [&](int i, int j, const Vec2& a, const Vec2& v) { return calc.inner(i, j, a, v); };
    auto nu = [&](int a, int i, int j) { return d.nu[a](i, j); };
    auto T = [&](int a, int i, int j) -> const Vec2& { return d.T[a](i, j); };
    auto gn = [&](int a, int i, int j) -> const Vec2& { return dv.grad_nu[a](i, j); };

    b.add("gauss", [&](int i, int j) {
        const double n3 = nu(2, i, j);
        return K(i, j) - (dv.S(i, j).determinant() - mu * mu + 2.0 * mu * mu * n3 * n3);
    });
    b.add("codazzi", [&](int i, int j) {
        const Vec2 eu(1, 0), ev(0, 1);
        const Vec2& T3 = T(2, i, j);
        const Vec2 theta = 2.0 * mu * mu * nu(2, i, j) * (ip(i, j, ev, T3) * eu - ip(i, j, eu, T3) * ev);
        return calc.norm(i, j, cod(i, j) - theta) / calc.sqrt_det(i, j);
    });
    // Covariant derivatives of T_a; the right-hand sides as endomorphisms X -> ...
    auto outer = [&](int i, int j, const Vec2& a, const Vec2& w) -> Mat2 { return a * (calc.g(i, j) * w).transpose(); };
    b.add("dT1", [&](int i, int j) {
        const Mat2 rhs = nu(0, i, j) * dv.S(i, j) - mu * outer(i, j, T(2, i, j), T(1, i, j));
        return calc.tensor_norm(i, j, DT[0](i, j) - rhs);
    });
    b.add("dT2", [&](int i, int j) {
        const Mat2 rhs = nu(1, i, j) * dv.S(i, j) - mu * outer(i, j, T(2, i, j), T(0, i, j));
        return calc.tensor_norm(i, j, DT[1](i, j) - rhs);
    });
    b.add("dT3", [&](int i, int j) {
        const Mat2 rhs = nu(2, i, j) * dv.S(i, j) + mu * outer(i, j, T(0, i, j), T(1, i, j)) + mu * outer(i, j, T(1, i, j), T(0, i, j));
        return calc.tensor_norm(i, j, DT[2](i, j) - rhs);
    });
    b.add("grad_nu1", [&](int i, int j) {
        return calc.norm(i, j, gn(0, i, j) + dv.S(i, j) * T(0, i, j) + mu * nu(2, i, j) * T(1, i, j));
    });
    b.add("grad_nu2", [&](int i, int j) {
        return calc.norm(i, j, gn(1, i, j) + dv.S(i, j) * T(1, i, j) + mu * nu(2, i, j) * T(0, i, j));
    });
    b.add("grad_nu3", [&](int i, int j) {
        return calc.norm(i, j, gn(2, i, j) + dv.S(i, j) * T(2, i, j) - mu * nu(0, i, j) * T(1, i, j) - mu * nu(1, i, j) * T(0, i, j));
    });
    b.add("X_alpha", [&](int i, int j) {
        const Mat2 J = d.J(i, j);
        double w = 0.0;
        for (int a = 0; a < 3; ++a)
            w = std::max(w, calc.norm(i, j, dv.X[a](i, j) + 2.0 * d.H(i, j) * (J * T(a, i, j)) - dv.zeta(i, j) * T(a, i, j)));
        return w;
    });
    b.add("adapted_dT3", [&](int i, int j) {
        const double n1 = nu(0, i, j), n2 = nu(1, i, j), n3 = nu(2, i, j);
        const Vec2 lhs = DT[2](i, j).transpose() * calc.g(i, j) * JT3(i, j);  // <nabla_{d_k} T3, J T3>
        const Vec2 w = n3 * (n1 * gn(1, i, j) - n2 * gn(0, i, j)) + mu * (1.0 - n3 * n3) * (n2 * T(1, i, j) - n1 * T(0, i, j));
        return detail::covector_norm(calc.ginv(i, j), lhs - calc.g(i, j) * w);
    });
    b.add("div_T3", [&](int i, int j) { return divT(i, j) - (2.0 * d.H(i, j) * nu(2, i, j) - 2.0 * mu * nu(0, i, j) * nu(1, i, j)); });
    b.add("div_JT3", [&](int i, int j) { return divJT(i, j); });
    b.add("nabla_nu_identities", [&](int i, int j) {
        const Mat2 J = d.J(i, j);
        const double n1 = nu(0, i, j), n2 = nu(1, i, j), z = dv.zeta(i, j), H = d.H(i, j);
        const Vec2 &T1 = T(0, i, j), &T2 = T(1, i, j), &T3 = T(2, i, j);
        const double r1 = ip(i, j, gn(0, i, j), T3) - ip(i, j, gn(2, i, j), T1) - z * n2;
        const double r2 = ip(i, j, gn(1, i, j), T3) - ip(i, j, gn(2, i, j), T2) + z * n1;
        const double r3 = ip(i, j, gn(0, i, j), J * T3) - ip(i, j, gn(2, i, j), J * T1) + 2.0 * H * n2;
        const double r4 = ip(i, j, gn(1, i, j), J * T3) - ip(i, j, gn(2, i, j), J * T2) - 2.0 * H * n1;
        return std::max({std::abs(r1), std::abs(r2), std::abs(r3), std::abs(r4)});
    });
    b.add(
        "nabla_nu_consequences",
        [&](int i, int j) {
            const Mat2 J = d.J(i, j);
            const double n1 = nu(0, i, j), n2 = nu(1, i, j), n3 = nu(2, i, j), H = d.H(i, j), w = 1.0 - n3 * n3;
            const Vec2& T3 = T(2, i, j);
            const Vec2 g3 = gn(2, i, j) / w;
            const double c1 = ip(i, j, n1 * gn(0, i, j) - n2 * gn(1, i, j), J * T3) +
                              ip(i, j, g3, (n1 * n1 - n2 * n2) * n3 * (J * T3) + 2.0 * n1 * n2 * T3) + 4.0 * H * n1 * n2;
            const double c2 = ip(i, j, n1 * gn(1, i, j) + n2 * gn(0, i, j), T3) +
                              ip(i, j, g3, 2.0 * n1 * n2 * n3 * T3 + (n1 * n1 - n2 * n2) * (J * T3)) -
                              4.0 * mu * n1 * n1 * n2 * n2 + mu * w * w;
            return std::max(std::abs(c1), std::abs(c2));
        },
        true, &deg);
    b.add("algebraic", [&](int i, int j) {
        const Mat2 J = d.J(i, j);
        double w = std::abs(nu(0, i, j) * nu(0, i, j) + nu(1, i, j) * nu(1, i, j) + nu(2, i, j) * nu(2, i, j) - 1.0);
        for (int a = 0; a < 3; ++a) {
            const int an = (a + 1) % 3, ap = (a + 2) % 3;
            for (int bb = 0; bb < 3; ++bb)
                w = std::max(w, std::abs(ip(i, j, T(a, i, j), T(bb, i, j)) - ((a == bb ? 1.0 : 0.0) - nu(a, i, j) * nu(bb, i, j))));
            w = std::max(w, std::abs(ip(i, j, J * T(a, i, j), T(an, i, j)) - nu(ap, i, j)));
            w = std::max(w, calc.norm(i, j, nu(ap, i, j) * T(an, i, j) - nu(an, i, j) * T(ap, i, j) - J * T(a, i, j)));
        }
        return w;
    });
    b.add("elimination", [&](int i, int j) {
        const double n1 = nu(0, i, j), n2 = nu(1, i, j), n3 = nu(2, i, j), w = 1.0 - n3 * n3;
        const Vec2 &T3 = T(2, i, j), JT = JT3(i, j);
        const double e1 = calc.norm(i, j, w * T(0, i, j) + n1 * n3 * T3 - n2 * JT);
        const double e2 = calc.norm(i, j, w * T(1, i, j) + n2 * n3 * T3 + n1 * JT);
        return std::max(e1, e2);
    });
    b.add("self_adjoint", [&](int i, int j) {
        const Mat2 J = d.J(i, j);
        double s = dv.zeta(i, j);
        for (int a = 0; a < 3; ++a) s += ip(i, j, gn(a, i, j), J * T(a, i, j));
        return s;
    });
    b.add("mean_curvature", [&](int i, int j) {
        double s = 2.0 * d.H(i, j);
        for (int a = 0; a < 3; ++a) s += ip(i, j, gn(a, i, j), T(a, i, j));
        return s;
    });
    return r;
}

}  // namespace bonnetlab
