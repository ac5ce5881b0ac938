#include <gtest/gtest.h>

#include <cmath>

#include "aniso/verify.hpp"

using namespace aniso;

namespace {

ScalarField interpolate(const MeshPtr& mesh, const std::function<double(const Vec2&)>& f) {
    Vec values(static_cast<Eigen::Index>(mesh->num_vertices()));
    for (std::size_t i = 0; i < mesh->num_vertices(); ++i) values(static_cast<Eigen::Index>(i)) = f(mesh->vertices[i]);
    return {mesh, values};
}

double torsion(const Vec2& x) { return (1.0 - x.squaredNorm()) / 4.0; }

// ∫_{unit disk} (|x|/2)^{−t} dx
double torsion_weight(double t) { return 2.0 * pi * std::pow(2.0, t) / (2.0 - t); }

FinslerNorm ellipse41() {
    Mat a(2, 2);
    a << 4, 0, 0, 1;
    return FinslerNorm::ellipsoidal(a);
}

struct Disk : ::testing::Test {
    static void SetUpTestSuite() {
        mesh = build_domain(DomainSpec::disk(1), 0.025);
        u = std::make_unique<ScalarField>(interpolate(mesh, torsion));
        ys = sample_points(*mesh);
    }
    static void TearDownTestSuite() {
        u.reset();
        mesh.reset();
    }
    static inline MeshPtr mesh;
    static inline std::unique_ptr<ScalarField> u;
    static inline std::vector<Vec2> ys;
};

}  // namespace

TEST_F(Disk, SamplePointsInsideDomain) {
    ASSERT_EQ(ys.size(), 26u);
    for (const Vec2& y : ys) EXPECT_TRUE(mesh->locate(y).has_value());
    EXPECT_NEAR(ys.back().norm(), 0.0, 1e-12);
}

TEST_F(Disk, HessianIntegral) {
    const MaterialProfile m = MaterialProfile::power(2);
    EXPECT_NEAR(weighted_hessian_integral(*u, m, 0.0, 0.0, ys), pi / 2.0, 0.01 * pi / 2.0);
    const double beta_half = 2.0 * std::sqrt(2.0) * pi / 3.0;
    EXPECT_NEAR(weighted_hessian_integral(*u, m, 0.5, 0.0, ys), beta_half, 0.03 * beta_half);
}

TEST_F(Disk, WeightIntegral) {
    const MaterialProfile m = MaterialProfile::power(2);
    EXPECT_NEAR(weight_integral(*u, m, 0.0, 0.0, ys), mesh->total_area(), 1e-12);
    EXPECT_NEAR(weight_integral(*u, m, 0.5, 0.0, ys), torsion_weight(0.5), 0.005 * torsion_weight(0.5));
    EXPECT_NEAR(weight_integral(*u, m, 0.99, 0.0, ys), torsion_weight(0.99), 0.1 * torsion_weight(0.99));
    double previous = 0.0;
    for (double t : {0.0, 0.2, 0.4, 0.6, 0.8, 0.95}) {
        const double w = weight_integral(*u, m, t, 0.0, ys);
        EXPECT_GT(w, previous);
        previous = w;
    }
}

TEST_F(Disk, FlatKernelIgnoresSamplePoint) {
    const MaterialProfile m = MaterialProfile::power(2);
    const double all = weight_integral(*u, m, 0.5, 0.0, ys);
    for (const Vec2& y : ys) EXPECT_DOUBLE_EQ(weight_integral(*u, m, 0.5, 0.0, {y}), all);
}

TEST_F(Disk, SobolevScan) {
    const auto scan = sobolev_scan(*u, MaterialProfile::power(2), {1.5, 2.0, 3.0});
    ASSERT_EQ(scan.size(), 3u);
    EXPECT_NEAR(scan[1].integral, pi / 2.0, 0.01 * pi / 2.0);
    EXPECT_NEAR(scan[0].integral, pi * std::pow(0.5, 0.75), 0.01 * pi);
    EXPECT_TRUE(scan[0].covered);
    EXPECT_TRUE(scan[1].covered);
    EXPECT_FALSE(scan[2].covered);
    EXPECT_THROW(sobolev_scan(*u, MaterialProfile::power(2), {1.0}), std::invalid_argument);
    EXPECT_THROW(sobolev_scan(*u, MaterialProfile::power(2), {4.5}), std::invalid_argument);
}

TEST(Sobolev, Threshold) {
    EXPECT_EQ(sobolev_threshold(1.5), 2.0);
    EXPECT_EQ(sobolev_threshold(2.9), 2.0);
    EXPECT_DOUBLE_EQ(sobolev_threshold(3.0), 2.0);
    EXPECT_DOUBLE_EQ(sobolev_threshold(4.0), 1.5);
}

TEST(Verify, AffineFieldHasNoHessian) {
    const MeshPtr mesh = build_domain(DomainSpec::rectangle(1, 1), 0.1);
    const ScalarField u = interpolate(mesh, [](const Vec2& x) { return 2.0 * x.x() - x.y() + 1.0; });
    const auto ys = sample_points(*mesh);
    EXPECT_NEAR(weighted_hessian_integral(u, MaterialProfile::power(2), 0.0, 0.0, ys), 0.0, 1e-16);
    for (const auto& e : sobolev_scan(u, MaterialProfile::power(3), {2.0})) EXPECT_NEAR(e.integral, 0.0, 1e-16);
    EXPECT_EQ(critical_set_fraction(u, 0.1), 0.0);
    EXPECT_EQ(critical_set_fraction(interpolate(mesh, [](const Vec2&) { return 3.0; }), 0.1), 1.0);
}

TEST(Verify, RejectsExponents) {
    const MeshPtr mesh = build_domain(DomainSpec::disk(1), 0.2);
    const ScalarField u = interpolate(mesh, torsion);
    const auto ys = sample_points(*mesh);
    const MaterialProfile m = MaterialProfile::power(2);
    EXPECT_THROW(weighted_hessian_integral(u, m, 1.0, 0.0, ys), std::invalid_argument);
    EXPECT_THROW(weighted_hessian_integral(u, m, -0.1, 0.0, ys), std::invalid_argument);
    EXPECT_THROW(weighted_hessian_integral(u, m, 0.0, 0.5, ys), std::invalid_argument);
    EXPECT_THROW(weight_integral(u, m, 1.0, 0.0, ys), std::invalid_argument);
    EXPECT_THROW(weight_integral(u, m, -0.5, 0.0, ys), std::invalid_argument);
    EXPECT_THROW(weight_integral(u, m, 0.5, 0.0, {}), std::invalid_argument);
    EXPECT_NO_THROW(check_kernel_exponents(3, 0.5, 0.9));
    EXPECT_THROW(check_kernel_exponents(3, 0.5, 1.0), std::invalid_argument);
}

TEST(Verify, RadialWeightIntegralInThreeDimensions) {
    const MaterialProfile m = MaterialProfile::power(2);
    const BarrierProfile prof = shoot(RadialProblem::ball(m, 3, 1.0, [](double) { return 1.0; }), 0.0);
    // w' = −ρ/3, so the integral is 4π 3^t / (3 − γ − t).
    for (auto [t, gamma] : {std::pair{0.0, 0.0}, {0.5, 0.5}, {0.9, 0.9}}) {
        const double exact = 4.0 * pi * std::pow(3.0, t) / (3.0 - gamma - t);
        EXPECT_NEAR(radial_weight_integral(prof, m, t, gamma), exact, 1e-4 * exact) << t << " " << gamma;
    }
    EXPECT_THROW(radial_weight_integral(prof, m, 0.5, 1.0), std::invalid_argument);
    const BarrierProfile barrier = shoot(RadialProblem::barrier(m, 3, 1.0, [](double) { return 0.0; }), 1.0);
    EXPECT_THROW(radial_weight_integral(barrier, m, 0.5, 0.0), std::invalid_argument);
}

TEST(Hopf, InteriorCenter) {
    const MeshPtr mesh = build_domain(DomainSpec::disk(1), 0.1);
    const int b = mesh->boundary_vertices.front();
    const Vec2 c = interior_wulff_center(*mesh, FinslerNorm::euclidean(), b, 0.5);
    EXPECT_NEAR((c - mesh->vertices[b]).norm(), 0.5, 1e-9);
    EXPECT_NEAR(c.norm(), 0.5, 0.02);
    EXPECT_THROW(interior_wulff_center(*mesh, FinslerNorm::euclidean(), b, 1.5), std::invalid_argument);
    EXPECT_THROW(interior_wulff_center(*mesh, FinslerNorm::euclidean(), 0, 0.5), std::invalid_argument);
}

TEST(Hopf, TorsionDisk) {
    const MeshPtr mesh = build_domain(DomainSpec::disk(1), 0.05);
    const MaterialProfile m = MaterialProfile::power(2);
    const SourceTerm s = SourceTerm::constant(1.0);
    const Solution sol = solve(mesh, m, FinslerNorm::euclidean(), s);
    const HopfReport rep = hopf_check(sol.field, FinslerNorm::euclidean(), m, s, 0.5, 0.1);
    EXPECT_GE(rep.min_normal_derivative, 0.45);
    EXPECT_LE(rep.min_normal_derivative, 0.55);
    EXPECT_GT(rep.barrier_margin, 0.0);
    EXPECT_GE(rep.comparison_violation, -5.0 * rep.h * rep.h);
    EXPECT_GT(rep.annulus_nodes, 10);
    EXPECT_NEAR(rep.barrier_margin, rep.shoot_slope, 1e-12);
}

TEST(Hopf, AnisotropicWulffBall) {
    const FinslerNorm h = ellipse41();
    const MeshPtr mesh = build_domain(DomainSpec::wulff_ball(h, 1.0), 0.05);
    const MaterialProfile m = MaterialProfile::power(2);
    const SourceTerm s = SourceTerm::constant(1.0);
    const Solution sol = solve(mesh, m, h, s);
    const HopfReport rep = hopf_check(sol.field, h, m, s, 0.4, 0.05);
    EXPECT_GT(rep.min_normal_derivative, 0.0);
    EXPECT_GT(rep.barrier_margin, 0.0);
    EXPECT_GE(rep.comparison_violation, -5.0 * rep.h * rep.h);
}

TEST(Regularity, StudyRowsAndFinestLevel) {
    int calls = 0;
    const RegularityStudy study =
        regularity_study(DomainSpec::disk(1), MaterialProfile::power(2), FinslerNorm::euclidean(),
                         SourceTerm::constant(1.0), 0.1, 3, 0.0, 0.5, {2.0},
                         {}, [&](const RegularityReport& r) { EXPECT_EQ(r.per_refinement.size(), ++calls); });
    const RegularityReport& rep = study.report;
    ASSERT_EQ(rep.per_refinement.size(), 3u);
    EXPECT_EQ(calls, 3);
    EXPECT_DOUBLE_EQ(rep.per_refinement[2].h, 0.025);
    EXPECT_EQ(rep.hessian_integral_sup, rep.per_refinement.back().hessian_integral);
    EXPECT_EQ(rep.weight_integral_sup, rep.per_refinement.back().weight_integral);
    EXPECT_NEAR(rep.hessian_integral_sup, pi / 2.0, 0.01 * pi / 2.0);
    for (std::size_t i = 1; i < 3; ++i) {
        EXPECT_LT(rep.per_refinement[i].critical_fraction, rep.per_refinement[i - 1].critical_fraction);
        const double a = rep.per_refinement[i - 1].hessian_integral;
        const double b = rep.per_refinement[i].hessian_integral;
        EXPECT_LE(std::abs(a - b) / b, 0.05);
    }
    EXPECT_LT(rep.critical_fraction, 0.01);
    ASSERT_EQ(rep.sobolev.size(), 1u);
    EXPECT_EQ(study.solutions.size(), 3u);
    EXPECT_THROW(regularity_study(DomainSpec::disk(1), MaterialProfile::power(2), FinslerNorm::euclidean(),
                                  SourceTerm::constant(1.0), 0.1, 0, 0.0, 0.5, {}),
                 std::invalid_argument);
}
