#include "bonnetlab/compat.hpp"
#include "bonnetlab/fixtures.hpp"

#include <gtest/gtest.h>

using namespace bonnetlab;

TEST(Fixtures, CatalogListsRequiredEntries) {
    std::vector<std::string> names;
    for (const auto& f : catalog_list()) names.push_back(f.name);
    for (const char* n : {"ekt_slice", "ekt_vertical_plane", "ekt_vertical_cylinder", "ekt_graph", "sol3_geodesic_plane",
                          "sol3_invariant_plane", "sol3_graph"})
        EXPECT_NE(std::find(names.begin(), names.end(), n), names.end()) << n;
}

TEST(Fixtures, Metadata) {
    const Fixture cyl = make_fixture("ekt_vertical_cylinder", 16);
    EXPECT_TRUE(cyl.constant_principal);
    EXPECT_EQ(cyl.expected_region, "M3");
    EXPECT_TRUE(make_fixture("sol3_geodesic_plane", 16).constant_gauss_map);
    const Fixture inv = make_fixture("sol3_invariant_plane", 16);
    EXPECT_TRUE(inv.properly_invariant);
    ASSERT_TRUE(static_cast<bool>(inv.killing));
    EXPECT_TRUE(make_fixture("ekt_vertical_plane", 16).minimal);
}

TEST(Fixtures, UnknownNameAndParameterRejected) {
    EXPECT_THROW(make_fixture("torus", 16), UnknownFixture);
    EXPECT_THROW(make_fixture("ekt_slice", 16, {{"radius", 1.0}}), std::invalid_argument);
    EXPECT_THROW(make_fixture("ekt_slice", 4), std::invalid_argument);
    EXPECT_THROW(make_fixture("ekt_vertical_cylinder", 16, {{"kappa", -4.0}, {"kg", 1.0}}), std::invalid_argument);
}

TEST(Fixtures, OverridesApply) {
    const Fixture f = make_fixture("ekt_graph", 16, {{"tau", 0.25}});
    EXPECT_EQ(f.patch.model.tau, 0.25);
    EXPECT_EQ(f.params.at("tau"), 0.25);
}

// A vertical cylinder over a curve of geodesic curvature kg has H = kg / 2 and det S = -tau^2 up to orientation.
TEST(Fixtures, VerticalCylinderCurvatures) {
    const double kg = 1.5, tau = 0.5;
    const Fixture f = make_fixture("ekt_vertical_cylinder", 64, {{"kg", kg}, {"tau", tau}});
    const FundamentalDataEkt d = fundamental_data_ekt(f.patch);
    for (int i = 8; i < 57; i += 12)
        for (int j = 8; j < 57; j += 12) {
            EXPECT_NEAR(std::abs(0.5 * d.S(i, j).trace()), 0.5 * kg, 1e-8);
            EXPECT_NEAR(d.S(i, j).determinant(), -tau * tau, 1e-8);
            EXPECT_NEAR(d.nu3(i, j), 0.0, 1e-10);
        }
}

TEST(Fixtures, GeodesicPlaneIsTotallyGeodesic) {
    const FundamentalDataSol3 d = fundamental_data_sol3(make_fixture("sol3_geodesic_plane", 32).patch);
    const Sol3Derived dv = derive_sol3(d, calculus(d));
    for (int i = 4; i < 29; ++i)
        for (int j = 4; j < 29; ++j) {
            EXPECT_LT(dv.S(i, j).cwiseAbs().maxCoeff(), 1e-9);
            EXPECT_NEAR(d.nu[2](i, j), 0.0, 1e-12);
        }
}
