#include <gtest/gtest.h>

#include <cmath>

#include "aniso/solver2d.hpp"

using namespace aniso;

namespace {

FinslerNorm ellipse41() {
    Mat a(2, 2);
    a << 4, 0, 0, 1;
    return FinslerNorm::ellipsoidal(a);
}

double max_error(const Solution& sol, const std::function<double(const Vec2&)>& exact) {
    double err = 0.0;
    const Mesh2D& mesh = *sol.field.mesh;
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
        err = std::max(err, std::abs(sol.field.values(static_cast<Eigen::Index>(v)) - exact(mesh.vertices[v])));
    return err;
}

// Centre value of the radial ball solution with f ≡ 1 on the unit disk:
// w'(ρ) = −(ρ/n)^{1/(p−1)}, integrated from 0 to 1.
double radial_center(double p, int n = 2) { return (p - 1.0) / p * std::pow(n, -1.0 / (p - 1.0)); }

double torsion(const Vec2& x) { return (1.0 - x.squaredNorm()) / 4.0; }

}  // namespace

TEST(Solve, TorsionDisk) {
    const MeshPtr mesh = build_domain(DomainSpec::disk(1), 0.05);
    const Solution sol = solve(mesh, MaterialProfile::power(2), FinslerNorm::euclidean(), SourceTerm::constant(1.0));
    EXPECT_NEAR(sol.field.values(0), 0.25, 2e-3);
    EXPECT_LE(max_error(sol, torsion), mesh->h * mesh->h);
    EXPECT_TRUE(sol.report.converged);
}

TEST(Solve, ReportInvariants) {
    const MeshPtr mesh = build_domain(DomainSpec::disk(1), 0.1);
    for (const MaterialProfile& m : {MaterialProfile::power(2), MaterialProfile::power(3), MaterialProfile::power(1.5),
                                     MaterialProfile::shifted(4, 0.5)}) {
        const Solution sol = solve(mesh, m, FinslerNorm::euclidean(), SourceTerm::constant(1.0));
        const auto& hist = sol.report.energy_history;
        ASSERT_FALSE(hist.empty());
        for (std::size_t i = 1; i < hist.size(); ++i) EXPECT_LE(hist[i], hist[i - 1]) << m.describe();
        EXPECT_LE(sol.report.final_residual, 1e-8 * (1.0 + std::abs(hist.back())));
        EXPECT_GE(sol.report.min_u, -1e-10);
        EXPECT_GE(sol.report.critical_fraction, 0.0);
        EXPECT_LT(sol.report.critical_fraction, 0.05);
    }
}

TEST(Solve, TorsionConvergenceOrder) {
    double previous = 0.0;
    for (double h : {0.1, 0.05, 0.025}) {
        const MeshPtr mesh = build_domain(DomainSpec::disk(1), h);
        const double err =
            max_error(solve(mesh, MaterialProfile::power(2), FinslerNorm::euclidean(), SourceTerm::constant(1.0)), torsion);
        if (previous > 0.0) {
            EXPECT_GE(previous / err, 3.2);
            EXPECT_LE(previous / err, 4.8);
        }
        previous = err;
    }
}

TEST(Solve, AnisotropicWulffBall) {
    const FinslerNorm h = ellipse41();
    const MeshPtr mesh = build_domain(DomainSpec::wulff_ball(h, 1.0), 0.05);
    const Solution sol = solve(mesh, MaterialProfile::power(2), h, SourceTerm::constant(1.0));
    const double err = max_error(sol, [&](const Vec2& x) {
        const double r = h.dual(from_vec2(x));
        return (1.0 - r * r) / 4.0;
    });
    EXPECT_LE(err, 5.0 * 0.05 * 0.05);
}

TEST(Solve, DegenerateAndSingularCentres) {
    const MeshPtr mesh = build_domain(DomainSpec::disk(1), 0.05);
    for (double p : {3.0, 1.5}) {
        const Solution sol = solve(mesh, MaterialProfile::power(p), FinslerNorm::euclidean(), SourceTerm::constant(1.0));
        EXPECT_NEAR(sol.field.values(0), radial_center(p), 5e-3) << "p=" << p;
    }
    EXPECT_NEAR(radial_center(3.0), 0.4714, 1e-4);
}

TEST(Solve, NonhomogeneousDirichlet) {
    // u = x + x(1−x)/2 solves −Δu = 1 on the unit square.
    auto exact = [](const Vec2& x) { return x.x() + 0.5 * x.x() * (1.0 - x.x()); };
    const MeshPtr mesh = build_domain(DomainSpec::rectangle(1, 1), 0.1);
    const Solution sol = solve(mesh, MaterialProfile::power(2), FinslerNorm::euclidean(), SourceTerm::constant(1.0),
                               std::function<double(const Vec2&)>(exact));
    EXPECT_LE(max_error(sol, exact), 1e-3);
}

TEST(Solve, NonlinearSourceAndLpNorm) {
    const MeshPtr mesh = build_domain(DomainSpec::disk(1), 0.1);
    const SourceTerm s = SourceTerm::from_laws({1.0, 1.0, 1.0}, {});
    const Solution sol = solve(mesh, MaterialProfile::shifted(3, 0.5), FinslerNorm::lp(4), s);
    EXPECT_TRUE(sol.report.converged);
    EXPECT_GT(sol.report.min_u, -1e-10);
    EXPECT_GT(sol.field.values(0), 0.0);
}

TEST(Solve, NonconvergenceCarriesIterate) {
    const MeshPtr mesh = build_domain(DomainSpec::disk(1), 0.1);
    SolveOptions opts;
    opts.max_iter = 1;
    try {
        solve(mesh, MaterialProfile::power(4), FinslerNorm::euclidean(), SourceTerm::constant(1.0), opts);
        FAIL() << "expected nonconvergence";
    } catch (const NonConvergenceError& e) {
        EXPECT_EQ(e.last_iterate().size(), static_cast<Eigen::Index>(mesh->num_vertices()));
        EXPECT_GT(e.residual(), 0.0);
    }
}

TEST(Solve, RejectsInadmissibleInput) {
    const MeshPtr mesh = build_domain(DomainSpec::disk(1), 0.2);
    EXPECT_THROW(solve(mesh, MaterialProfile::power(2), FinslerNorm::euclidean(), SourceTerm::constant(0.0)),
                 AdmissibilityError);
    const std::vector<double> short_bc(3, 0.0);
    EXPECT_THROW(solve(mesh, MaterialProfile::power(2), FinslerNorm::euclidean(), SourceTerm::constant(1.0),
                       std::span<const double>(short_bc)),
                 std::invalid_argument);
    EXPECT_THROW(solve(mesh, MaterialProfile::power(2), FinslerNorm::euclidean(3), SourceTerm::constant(1.0)),
                 std::invalid_argument);
}

TEST(CriticalSet, Fractions) {
    const MeshPtr mesh = build_domain(DomainSpec::rectangle(1, 1), 0.2);
    Vec affine(static_cast<Eigen::Index>(mesh->num_vertices()));
    for (std::size_t v = 0; v < mesh->num_vertices(); ++v) affine(static_cast<Eigen::Index>(v)) = mesh->vertices[v].x();
    EXPECT_EQ(critical_set_fraction({mesh, affine}, 0.5), 0.0);
    EXPECT_EQ(critical_set_fraction({mesh, Vec::Constant(affine.size(), 2.0)}, 1e-12), 1.0);
}
