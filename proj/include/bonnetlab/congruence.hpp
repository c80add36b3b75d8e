#pragma once

#include "bonnetlab/compat.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace bonnetlab {

struct MetricMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct CongruenceOptions {
    double rel_tol = 1e-6;  // relative to 1 + sup |kappa_i|
    int margin = 4;
};

struct CongruenceVerdict {
    bool congruent = false;
    std::string witness;
    double deviation = 0.0;
    double tolerance = 0.0;
    std::vector<std::pair<std::string, double>> per_transform;
};

namespace detail {

inline void check_same_metric(const GridSpec& ga, const Field<Mat2>& a, const GridSpec& gb, const Field<Mat2>& b) {
    if (ga.n != gb.n) throw MetricMismatch("data live on different grids");
    for (int i = 0; i < a.size(); ++i)
        for (int j = 0; j < a.size(); ++j)
            if ((a(i, j) - b(i, j)).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + a(i, j).cwiseAbs().maxCoeff()))
                throw MetricMismatch("induced metrics differ");
}

inline CongruenceVerdict decide(std::vector<std::pair<std::string, double>> devs, double tol) {
    CongruenceVerdict v;
    v.tolerance = tol;
    v.per_transform = std::move(devs);
    auto best = std::min_element(v.per_transform.begin(), v.per_transform.end(),
                                 [](const auto& x, const auto& y) { return x.second < y.second; });
    v.witness = best->first;
    v.deviation = best->second;
    v.congruent = v.deviation <= tol;
    return v;
}

}  // namespace detail

/// Data transforms of E(kappa,tau) induced by ambient isometries preserving orientation,
/// as signs on (sigma, S, T3, nu3).
struct EktTransform {
    std::string name;
    int sigma, S, T3, nu3;
};

inline std::vector<EktTransform> ekt_transforms(double tau) {
    std::vector<EktTransform> base{{"identity", 1, 1, 1, 1}, {"normal_flip", -1, -1, 1, -1}, {"fiber_flip", 1, 1, -1, -1}};
    base.push_back({"normal_flip+fiber_flip", -1, -1, -1, 1});
    if (tau == 0.0) {
        const std::size_t n = base.size();
        for (std::size_t k = 0; k < n; ++k) {
            const auto& t = base[k];
            base.push_back({t.name == "identity" ? "orientation_swap" : "orientation_swap+" + t.name, -t.sigma, t.S, t.T3, t.nu3});
        }
    }
    return base;
}

inline double ekt_kappa_scale(const FundamentalDataEkt& d, int margin) {
    double s = 1.0;
    const int m = d.samples();
    for (int i = margin; i < m - margin; ++i)
        for (int j = margin; j < m - margin; ++j) {
            const Principal p = principal(d.metric(i, j), d.S(i, j), d.sigma(i, j));
            s = std::max(s, 1.0 + std::max(std::abs(p.k1), std::abs(p.k2)));
        }
    return s;
}

inline CongruenceVerdict congruence_test(const FundamentalDataEkt& A, const FundamentalDataEkt& B, const CongruenceOptions& opt = {}) {
    detail::check_same_metric(A.grid, A.metric, B.grid, B.metric);
    const int m = A.samples(), mg = opt.margin;
    const IntrinsicCalculus calc = calculus(A);
    std::vector<std::pair<std::string, double>> devs;
    for (const auto& t : ekt_transforms(A.model.tau)) {
        double dev = 0.0;
        for (int i = mg; i < m - mg; ++i)
            for (int j = mg; j < m - mg; ++j) {
                dev = std::max(dev, std::abs(t.sigma * A.sigma(i, j) - B.sigma(i, j)));
                dev = std::max(dev, calc.tensor_norm(i, j, t.S * A.S(i, j) - B.S(i, j)));
                dev = std::max(dev, calc.norm(i, j, t.T3 * A.T3(i, j) - B.T3(i, j)));
                dev = std::max(dev, std::abs(t.nu3 * A.nu3(i, j) - B.nu3(i, j)));
            }
        devs.emplace_back(t.name, dev);
    }
    return detail::decide(std::move(devs), opt.rel_tol * std::max(ekt_kappa_scale(A, mg), ekt_kappa_scale(B, mg)));
}

/// Action of an isotropy element P (and optionally the normal flip) on Sol3 data.
inline FundamentalDataSol3 transform_sol3(const FundamentalDataSol3& d, const Mat3& P, bool normal_flip) {
    FundamentalDataSol3 r = d;
    const double det = P.determinant() > 0 ? 1.0 : -1.0;
    const double f = normal_flip ? -1.0 : 1.0;
    const int m = d.samples();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            r.sigma(i, j) = f * det * d.sigma(i, j);
            r.H(i, j) = f * d.H(i, j);
            for (int a = 0; a < 3; ++a) {
                double nu = 0.0;
                Vec2 T = Vec2::Zero();
                for (int b = 0; b < 3; ++b) {
                    nu += P(a, b) * d.nu[b](i, j);
                    T += P(a, b) * d.T[b](i, j);
                }
                r.nu[a](i, j) = f * nu;
                r.T[a](i, j) = T;
            }
        }
    return r;
}

inline std::string isotropy_name(int k) {
    static const char* names[] = {"id", "g1", "g2", "g3", "g4", "g5", "g6", "g7"};
    return names[k];
}

inline CongruenceVerdict congruence_test(const FundamentalDataSol3& A, const FundamentalDataSol3& B, const CongruenceOptions& opt = {}) {
    detail::check_same_metric(A.grid, A.metric, B.grid, B.metric);
    const int m = A.samples(), mg = opt.margin;
    const IntrinsicCalculus calc = calculus(A);
    const auto group = isotropy_group();
    double scale = 1.0;
    for (const FundamentalDataSol3* d : {&A, &B}) {
        const Sol3Derived dv = derive_sol3(*d, calc);
        for (int i = mg; i < m - mg; ++i)
            for (int j = mg; j < m - mg; ++j) {
                const Principal p = principal(d->metric(i, j), dv.S(i, j), d->sigma(i, j));
                scale = std::max(scale, 1.0 + std::max(std::abs(p.k1), std::abs(p.k2)));
            }
    }
    std::vector<std::pair<std::string, double>> devs;
    for (std::size_t k = 0; k < group.size(); ++k)
        for (bool flip : {false, true}) {
            const FundamentalDataSol3 t = transform_sol3(A, group[k], flip);
            double dev = 0.0;
            for (int i = mg; i < m - mg; ++i)
                for (int j = mg; j < m - mg; ++j) {
                    dev = std::max(dev, std::abs(t.sigma(i, j) - B.sigma(i, j)));
                    dev = std::max(dev, std::abs(t.H(i, j) - B.H(i, j)));
                    for (int a = 0; a < 3; ++a) {
                        dev = std::max(dev, std::abs(t.nu[a](i, j) - B.nu[a](i, j)));
                        dev = std::max(dev, calc.norm(i, j, t.T[a](i, j) - B.T[a](i, j)));
                    }
                }
            devs.emplace_back(isotropy_name(static_cast<int>(k)) + (flip ? "+normal_flip" : ""), dev);
        }
    return detail::decide(std::move(devs), opt.rel_tol * scale);
}

/// sup over interior samples of |kappa_i^A - kappa_i^B|, eigenvalues sorted descending.
inline double compare_principal_curvatures(const GridSpec& grid, const Field<Mat2>& metric, const Field<Mat2>& SA,
                                           const Field<Mat2>& SB, int margin = 4) {
    const int m = grid.samples();
    double dev = 0.0;
    for (int i = margin; i < m - margin; ++i)
        for (int j = margin; j < m - margin; ++j) {
            const Principal a = principal(metric(i, j), SA(i, j), 1.0);
            const Principal b = principal(metric(i, j), SB(i, j), 1.0);
            dev = std::max({dev, std::abs(a.k1 - b.k1), std::abs(a.k2 - b.k2)});
        }
    return dev;
}

inline double compare_principal_curvatures(const FundamentalDataEkt& A, const FundamentalDataEkt& B, int margin = 4) {
    if (A.grid.n != B.grid.n) throw MetricMismatch("data live on different grids");
    return compare_principal_curvatures(A.grid, A.metric, A.S, B.S, margin);
}

inline double compare_principal_curvatures(const FundamentalDataSol3& A, const FundamentalDataSol3& B, int margin = 4) {
    if (A.grid.n != B.grid.n) throw MetricMismatch("data live on different grids");
    const Sol3Derived da = derive_sol3(A, calculus(A)), db = derive_sol3(B, calculus(B));
    return compare_principal_curvatures(A.grid, A.metric, da.S, db.S, margin);
}

}  // namespace bonnetlab
