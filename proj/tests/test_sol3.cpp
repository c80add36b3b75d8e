#include "bonnetlab/bonnet_sol3.hpp"
#include "bonnetlab/fixtures.hpp"

#include <gtest/gtest.h>

using namespace bonnetlab;

namespace {

FundamentalDataSol3 data(const std::string& name, int n) { return fundamental_data_sol3(make_fixture(name, n).patch); }

Sol3PointData sample_point(const FundamentalDataSol3& d, int i, int j) {
    return point_data(d, derive_sol3(d, calculus(d)), i, j);
}

}  // namespace

TEST(Sol3Pointwise, TrivialRootIsExact) {
    const FundamentalDataSol3 d = data("sol3_graph", 32);
    const Sol3PointData p = sample_point(d, 10, 20);
    const auto P = sol3_P(p, 1.0, 0.0, p.nu1, p.nu2);
    EXPECT_EQ(P[0], 0.0);
    EXPECT_EQ(P[1], 0.0);
}

TEST(Sol3Pointwise, RootsSatisfyTheSystem) {
    const FundamentalDataSol3 d = data("sol3_graph", 32);
    for (const auto& [i, j] : std::vector<std::pair<int, int>>{{8, 8}, {16, 16}, {24, 10}}) {
        const Sol3PointData p = sample_point(d, i, j);
        const PointwiseRoots pr = pointwise_mate_system(p);
        EXPECT_TRUE(pr.trivial_found);
        EXPECT_LE(pr.raw, 32);
        EXPECT_LE(pr.nontrivial, 7);
        const double rho2 = p.nu1 * p.nu1 + p.nu2 * p.nu2;
        for (const auto& r : pr.roots) {
            const auto P = sol3_P(p, r.x, r.y, r.n1, r.n2);
            EXPECT_LE(std::max(std::abs(P[0]), std::abs(P[1])), 1e-8);
            EXPECT_NEAR(r.x * r.x + r.y * r.y, 1.0, 1e-12);
            EXPECT_NEAR(r.n1 * r.n1 + r.n2 * r.n2, rho2, 1e-12);
        }
    }
}

TEST(Sol3Pointwise, DegenerateSampleRejected) {
    Sol3PointData p;
    p.nu3 = 1.0;
    EXPECT_THROW(pointwise_mate_system(p), DegeneratePatch);
}

TEST(Sol3Dedup, SyntheticOrbitIsOneClass) {
    Sol3PointData p;
    p.nu1 = 0.3;
    p.nu2 = -0.5;
    const Sol3Root seed{0.4, 1.1, std::cos(0.4), std::sin(0.4), 0.2, 0.4, 0.0};
    PointwiseRoots pr;
    for (const auto& img : isotropy_images(seed)) pr.roots.push_back({0, 0, img[0], img[1], img[2], img[3], 0});
    pr.raw = 4;
    dedup_by_isotropy(pr, p);
    EXPECT_EQ(pr.classes, 1);
    EXPECT_FALSE(pr.trivial_found);
    EXPECT_EQ(pr.nontrivial, 1);

    PointwiseRoots triv;
    triv.roots.push_back({0, 0, 1.0, 0.0, p.nu1, p.nu2, 0});
    dedup_by_isotropy(triv, p);
    EXPECT_EQ(triv.classes, 1);
    EXPECT_TRUE(triv.trivial_found);
    EXPECT_EQ(triv.nontrivial, 0);
}

TEST(Sol3System, ZeroPsiGivesZeroGradient) {
    const auto sup = [](int n) {
        const FundamentalDataSol3 d = data("sol3_graph", n);
        const int m = d.samples();
        MateAngleSol3 a{Field<double>(m, 1.0), Field<double>(m, 0.0), Field<double>(m, 1.0), Field<double>(m, 0.0), 0.0, 0.0};
        const auto g = grad_phi_psi(d, a);
        double psi = 0.0, phi = 0.0;
        for (int i = 4; i < m - 4; ++i)
            for (int j = 4; j < m - 4; ++j) {
                psi = std::max(psi, g[0](i, j).cwiseAbs().maxCoeff());
                phi = std::max(phi, g[1](i, j).cwiseAbs().maxCoeff());
            }
        return std::pair{psi, phi};
    };
    const auto [psi48, phi48] = sup(48);
    const auto [psi96, phi96] = sup(96);
    EXPECT_LE(psi48, 1e-12);
    EXPECT_LE(psi96, 1e-12);
    // grad phi vanishes only up to the difference error of the data
    EXPECT_LE(phi48, 1e-3);
    EXPECT_GE(phi48 / phi96, 3.0);
}

TEST(Sol3System, TrivialSeedReturnsCongruentMate) {
    double prev = 0.0;
    for (int n : {64, 128}) {
        const FundamentalDataSol3 d = data("sol3_graph", n);
        const Sol3SolveResult r = solve_mate_system(d, 0.0, 0.0);
        ASSERT_TRUE(r.solved) << r.reason;
        EXPECT_TRUE(r.candidate->verdict.congruent);
        const double v = r.candidate->verification.worst_gated();
        if (n == 128) {
            EXPECT_LE(v, 1e-4);
            EXPECT_GE(prev / v, 3.0);
        }
        prev = v;
    }
}

TEST(Sol3System, ConstantGaussMapRejected) {
    const FundamentalDataSol3 d = data("sol3_geodesic_plane", 32);
    EXPECT_TRUE(has_constant_gauss_map(d));
    EXPECT_THROW(solve_mate_system(d, 0.0, 0.0), DegeneratePatch);
}

TEST(Sol3System, GenericGraphSeedSweepFindsNoMate) {
    const FundamentalDataSol3 d = data("sol3_graph", 48);
    int nontrivial = 0;
    for (int a = 0; a < 16; ++a)
        for (int b = 0; b < 16; ++b) {
            const Sol3SolveResult r = solve_mate_system(d, 2.0 * M_PI * a / 16 - M_PI, 2.0 * M_PI * b / 16 - M_PI);
            if (r.solved && !r.candidate->verdict.congruent) ++nontrivial;
        }
    EXPECT_EQ(nontrivial, 0);
}

class Sol3Invariant : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        fixture_ = new Fixture(make_fixture("sol3_invariant_plane", 64));
        data_ = new FundamentalDataSol3(fundamental_data_sol3(fixture_->patch));
        Z_ = new Field<Vec2>(killing_coefficients(fixture_->patch, fixture_->killing));
    }
    static void TearDownTestSuite() {
        delete fixture_;
        delete data_;
        delete Z_;
    }
    static Fixture* fixture_;
    static FundamentalDataSol3* data_;
    static Field<Vec2>* Z_;
};
Fixture* Sol3Invariant::fixture_ = nullptr;
FundamentalDataSol3* Sol3Invariant::data_ = nullptr;
Field<Vec2>* Sol3Invariant::Z_ = nullptr;

TEST_F(Sol3Invariant, ReflectionMateVerifiesAndIsNotCongruent) {
    const MateCandidateSol3 c = reflection_mate(*data_, *Z_);
    EXPECT_LE(c.verification.worst_gated(), 1e-4) << c.verification.worst_gated_name();
    EXPECT_FALSE(c.verdict.congruent);
    EXPECT_LE(c.spectrum_deviation, 1e-10);
    EXPECT_LE(c.nu3_deviation, 1e-12);
    for (const auto& [name, v] : c.angles.integrability) EXPECT_LE(v, 1e-4) << name;
}

TEST_F(Sol3Invariant, ReflectionIsAnInvolution) {
    const MateCandidateSol3 once = reflection_mate(*data_, *Z_);
    const MateCandidateSol3 twice = reflection_mate(once.mate, *Z_);
    const int m = data_->samples();
    double dev = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            dev = std::max(dev, std::abs(twice.mate.sigma(i, j) - data_->sigma(i, j)));
            for (int a = 0; a < 3; ++a) dev = std::max(dev, (twice.mate.T[a](i, j) - data_->T[a](i, j)).cwiseAbs().maxCoeff());
        }
    EXPECT_LE(dev, 1e-12);
}

TEST_F(Sol3Invariant, CorruptedAngleBreaksClosedness) {
    const MateCandidateSol3 c = reflection_mate(*data_, *Z_);
    MateAngleSol3 a = angles_between(*data_, c.mate);
    const int k = data_->samples() / 2;
    const double psi = std::atan2(a.spsi(k, k), a.cpsi(k, k)) + 0.1;
    a.cpsi(k, k) = std::cos(psi);
    a.spsi(k, k) = std::sin(psi);
    FundamentalDataSol3 bad = assemble_sol3_mate(*data_, a);
    bad.sigma = c.mate.sigma;
    const ResidualReport r = integrability_residuals(*data_, bad);
    const double h = data_->grid.hu();
    EXPECT_GT(std::max(r.scaled_sup("closed_dpsi"), r.scaled_sup("closed_dphi")), 10.0 * h * h);
}

TEST_F(Sol3Invariant, SearchFindsNontrivialMateCongruentToReflection) {
    const MateSearch s = search_mates(*data_);
    ASSERT_GE(s.solved_nontrivial, 1);
    const MateCandidateSol3 refl = reflection_mate(*data_, *Z_);
    for (const auto& a : s.attempts) {
        if (!a.solved || a.candidate->verdict.congruent) continue;
        EXPECT_LE(a.candidate->verification.worst_gated(), 1e-4);
        const CongruenceVerdict v = congruence_test(refl.mate, a.candidate->mate, CongruenceOptions{1e-4, 4});
        EXPECT_TRUE(v.congruent) << v.witness << " " << v.deviation;
    }
}

TEST(Sol3Rotation, GeodesicPlaneRotationKeepsSpectrum) {
    const FundamentalDataSol3 d = data("sol3_geodesic_plane", 32);
    const MateCandidateSol3 r = rotation_family_sol3(d, 0.9);
    EXPECT_LE(r.spectrum_deviation, 1e-12);
    EXPECT_LE(r.nu3_deviation, 1e-12);
}

TEST(Sol3Reflection, MissingKillingFieldRejected) {
    const Fixture f = make_fixture("sol3_graph", 16);
    EXPECT_THROW(killing_coefficients(f.patch, f.killing), NotInvariant);
}
