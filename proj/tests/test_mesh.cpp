#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "aniso/mesh.hpp"

using namespace aniso;

namespace {

FinslerNorm ellipse41() {
    Mat a(2, 2);
    a << 4, 0, 0, 1;
    return FinslerNorm::ellipsoidal(a);
}

void expect_valid(const Mesh2D& mesh) {
    std::vector<int> used(mesh.num_vertices(), 0);
    for (int t = 0; t < static_cast<int>(mesh.num_triangles()); ++t) {
        EXPECT_GT(mesh.signed_area(t), 0.0);
        for (int v : mesh.triangles[t]) used[v] = 1;
    }
    for (int u : used) EXPECT_EQ(u, 1);
    ASSERT_EQ(mesh.boundary_normals.size(), mesh.boundary_vertices.size());
    const Vec2 c = 0.5 * (mesh.bbox_min() + mesh.bbox_max());
    for (std::size_t i = 0; i < mesh.boundary_vertices.size(); ++i) {
        const Vec2& nu = mesh.boundary_normals[i];
        EXPECT_NEAR(nu.norm(), 1.0, 1e-12);
        // A short step along the inner normal stays inside the domain.
        const Vec2 probe = mesh.vertices[mesh.boundary_vertices[i]] + 1e-3 * mesh.h * nu;
        EXPECT_TRUE(mesh.locate(probe).has_value()) << "vertex " << mesh.boundary_vertices[i];
    }
    (void)c;
}

}  // namespace

TEST(BuildDomain, CoarseRectangle) {
    const MeshPtr m = build_domain(DomainSpec::rectangle(1, 1), 0.5);
    EXPECT_GE(m->num_triangles(), 8u);
    for (const Vec2 corner : {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1), Vec2(1, 1)}) {
        bool found = false;
        for (const auto& v : m->vertices) found = found || (v - corner).norm() < 1e-15;
        EXPECT_TRUE(found);
    }
    EXPECT_NEAR(m->total_area(), 1.0, 1e-14);
    expect_valid(*m);
    EXPECT_LE(m->h, 0.5 * std::sqrt(2.0) + 1e-12);
}

TEST(BuildDomain, DiskSag) {
    const MeshPtr m = build_domain(DomainSpec::disk(1), 0.1);
    for (int b : m->boundary_vertices) EXPECT_LE(std::abs(m->vertices[b].norm() - 1.0), 1e-3);
    for (std::size_t i = 0; i < m->boundary_vertices.size(); ++i) {
        const Vec2 x = m->vertices[m->boundary_vertices[i]];
        EXPECT_LT((m->boundary_normals[i] + x.normalized()).norm(), 1e-10);
    }
    expect_valid(*m);
    EXPECT_NEAR(m->total_area(), pi, 0.01);
}

TEST(BuildDomain, BoundarySpacingBoundedByTarget) {
    for (double h : {0.2, 0.1, 0.05}) {
        const MeshPtr m = build_domain(DomainSpec::disk(1), h);
        std::vector<Vec2> ring;
        for (int b : m->boundary_vertices) ring.push_back(m->vertices[b]);
        std::sort(ring.begin(), ring.end(),
                  [](const Vec2& a, const Vec2& b) { return std::atan2(a.y(), a.x()) < std::atan2(b.y(), b.x()); });
        for (std::size_t i = 0; i < ring.size(); ++i) EXPECT_LE((ring[(i + 1) % ring.size()] - ring[i]).norm(), h + 1e-12);
    }
}

TEST(BuildDomain, EuclideanAnnulusLoops) {
    const MeshPtr m = build_domain(DomainSpec::annulus_wulff(FinslerNorm::euclidean(), 1.0), 0.1);
    int outer = 0;
    int inner = 0;
    for (int b : m->boundary_vertices) {
        const double r = m->vertices[b].norm();
        if (std::abs(r - 1.0) < 1e-9) ++outer;
        else if (std::abs(r - 0.5) < 1e-9) ++inner;
        else ADD_FAILURE() << "boundary vertex at radius " << r;
    }
    EXPECT_GT(outer, 0);
    EXPECT_GT(inner, 0);
    expect_valid(*m);
    EXPECT_NEAR(m->total_area(), 0.75 * pi, 0.02);
}

TEST(BuildDomain, WulffBallBoundaryOnShape) {
    const FinslerNorm h = ellipse41();
    const MeshPtr m = build_domain(DomainSpec::wulff_ball(h, 1.0), 0.1);
    for (int b : m->boundary_vertices) EXPECT_NEAR(h.dual(from_vec2(m->vertices[b])), 1.0, 1e-9);
    expect_valid(*m);
    // Area of x²/4 + y² <= 1.
    EXPECT_NEAR(m->total_area(), 2.0 * pi, 0.05);
}

TEST(BuildDomain, RejectsDegenerateSpecs) {
    EXPECT_THROW(build_domain(DomainSpec::disk(0.0), 0.1), std::invalid_argument);
    EXPECT_THROW(build_domain(DomainSpec::rectangle(-1, 1), 0.1), std::invalid_argument);
    EXPECT_THROW(build_domain(DomainSpec::disk(1.0), 0.0), std::invalid_argument);
}

TEST(MeshQueries, LocateAndBarycentric) {
    const MeshPtr m = build_domain(DomainSpec::rectangle(2, 1), 0.25);
    const Vec2 x(1.3, 0.41);
    const auto t = m->locate(x);
    ASSERT_TRUE(t.has_value());
    const auto bc = m->barycentric(*t, x);
    EXPECT_NEAR(bc.sum(), 1.0, 1e-14);
    EXPECT_GE(bc.minCoeff(), -1e-12);
    EXPECT_FALSE(m->locate(Vec2(2.5, 0.5)).has_value());
}
