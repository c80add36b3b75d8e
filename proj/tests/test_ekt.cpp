#include "bonnetlab/bonnet_ekt.hpp"
#include "bonnetlab/fixtures.hpp"

#include <gtest/gtest.h>

using namespace bonnetlab;

namespace {

FundamentalDataEkt data(const std::string& name, int n, const ParamMap& p = {}) {
    return fundamental_data_ekt(make_fixture(name, n, p).patch);
}

}  // namespace

TEST(EktRegions, CylinderIsM3AndGraphIsM1) {
    const RegionField cyl = classify_regions(data("ekt_vertical_cylinder", 32));
    EXPECT_EQ(cyl.dominant, Region::M3);
    EXPECT_FALSE(cyl.mixed);
    const RegionField g = classify_regions(data("ekt_graph", 32));
    EXPECT_EQ(g.dominant, Region::M1);
    EXPECT_EQ(region_name(Region::M2), "M2");
}

TEST(EktTheta, CylinderIntegratesAndMatesVerify) {
    const FundamentalDataEkt d = data("ekt_vertical_cylinder", 64);
    const double h = d.grid.hu();
    for (double th : {0.3, 1.7, 4.0}) {
        const ThetaResult r = integrate_theta_M3(d, th);
        ASSERT_TRUE(r.ok);
        EXPECT_LE(r.consistency, 10.0 * h * h);
        const MateCandidateEkt m = assemble_mate_ekt(d, r.angle, TRelation::Same);
        EXPECT_LE(m.verification.worst_gated(), 1e-4) << m.verification.worst_gated_name();
        EXPECT_FALSE(m.verdict.congruent);
        EXPECT_LE(m.spectrum_deviation, 1e-12);
        EXPECT_LE(m.nu3_deviation, 1e-10);
        EXPECT_LE(m.T3_norm_deviation, 1e-10);
    }
}

TEST(EktTheta, ZeroAndPiAreCongruent) {
    const FundamentalDataEkt d = data("ekt_vertical_cylinder", 48);
    for (double th : {0.0, M_PI}) {
        const ThetaResult r = integrate_theta_M3(d, th);
        ASSERT_TRUE(r.ok);
        EXPECT_TRUE(assemble_mate_ekt(d, r.angle, TRelation::Same).verdict.congruent) << th;
    }
}

TEST(EktTheta, RequiresConstantPrincipalCurvatures) {
    EXPECT_THROW(integrate_theta_M3(data("ekt_graph", 32), 0.5), PreconditionFailed);
}

TEST(EktAssociate, MinimalPlaneFamilyVerifies) {
    const FundamentalDataEkt d = data("ekt_vertical_plane", 48);
    for (double th : {0.5, 2.0, 5.0}) {
        const FundamentalDataEkt r = associate_family(d, th);
        EXPECT_LE(residuals_ekt(r).worst_gated(), 1e-4);
        EXPECT_LE(compare_principal_curvatures(d, r), 1e-12);
    }
    EXPECT_THROW(associate_family(data("ekt_graph", 32), 0.5), PreconditionFailed);
    EXPECT_THROW(associate_family(data("ekt_vertical_cylinder", 32), 0.5), PreconditionFailed);
}

TEST(EktMates, AngleFieldMasksMarginAndUmbilics) {
    const FundamentalDataEkt d = data("ekt_graph", 32);
    const AngleField f = angle_field(d, AngleFormula::Tau0M1);
    EXPECT_TRUE(f.masked(0, 0));
    EXPECT_LE(f.unit_defect(), 1e-12);
}

// A generic graph has no mate: the only candidate the M1 analysis allows must fail Codazzi.
TEST(EktMates, GenericGraphCandidateFailsVerification) {
    const FundamentalDataEkt d = data("ekt_graph", 48);
    const EktMateRun run = find_mates_ekt(d, {});
    ASSERT_EQ(run.candidates.size(), 1u);
    EXPECT_EQ(run.formulas[0], "tau0_m1/relation1");
    EXPECT_GT(run.candidates[0].verification.scaled_sup("codazzi"), 1e-2);
    EXPECT_EQ(run.verified_mates, 0);
    EXPECT_LE(run.candidates[0].spectrum_deviation, 1e-12);
}

TEST(EktMates, PipelineRoutesBySubcase) {
    const FundamentalDataEkt cyl = data("ekt_vertical_cylinder", 48);
    EktMateRequest req;
    req.subcase = "m3";
    req.theta0 = 0.7854;
    const EktMateRun m3 = find_mates_ekt(cyl, req);
    ASSERT_TRUE(m3.theta.has_value());
    EXPECT_EQ(m3.verified_mates, 1);

    const EktMateRun assoc = find_mates_ekt(data("ekt_vertical_plane", 48), {});
    ASSERT_EQ(assoc.formulas.size(), 1u);
    EXPECT_EQ(assoc.formulas[0], "m3/same");

    EktMateRequest pos_tau;
    const EktMateRun no_cmc = find_mates_ekt(data("ekt_graph", 32, {{"tau", 0.3}}), pos_tau);
    EXPECT_TRUE(no_cmc.candidates.empty());
    EXPECT_FALSE(no_cmc.notes.empty());

    EktMateRequest neg;
    neg.cls = OrientationClass::Negative;
    neg.subcase = "a1";
    const EktMateRun a1 = find_mates_ekt(data("ekt_graph", 32, {{"tau", 0.3}}), neg);
    ASSERT_EQ(a1.candidates.size(), 1u);
    EXPECT_EQ(a1.candidates[0].angle.cls, OrientationClass::Negative);
    EXPECT_LE(a1.candidates[0].spectrum_deviation, 1e-12);
}

TEST(EktMates, NegativeTransformFlipsOrientation) {
    const FundamentalDataEkt d = data("ekt_graph", 32, {{"tau", 0.3}});
    const AngleField f = angle_field(d, AngleFormula::NegativeA1);
    const FundamentalDataEkt t = transform_ekt_data(d, f, TRelation::Same);
    EXPECT_EQ(t.sigma(16, 16), -d.sigma(16, 16));
    EXPECT_NEAR(t.S(16, 16).trace(), d.S(16, 16).trace(), 1e-12);
}
