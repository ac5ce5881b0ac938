#pragma once

// Triangulations of the 2D domains used by the solver: rectangles, disks,
// Wulff balls and Wulff annuli. Curved domains come from a structured polar
// template (ring i carries 6i vertices) mapped onto the boundary.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "aniso/finsler.hpp"
#include "aniso/linalg.hpp"

namespace aniso {

struct Mesh2D {
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;
    /// Sorted indices of the vertices on ∂Ω.
    std::vector<int> boundary_vertices;
    /// Inner unit normal per entry of boundary_vertices.
    std::vector<Vec2> boundary_normals;
    /// Maximum edge length.
    double h = 0.0;

    /// Position of v in boundary_vertices, or -1 for interior vertices.
    std::vector<int> boundary_slot;
    /// Triangles incident to each vertex.
    std::vector<std::vector<int>> vertex_triangles;

    std::size_t num_vertices() const { return vertices.size(); }
    std::size_t num_triangles() const { return triangles.size(); }
    bool is_boundary(int v) const { return boundary_slot[static_cast<std::size_t>(v)] >= 0; }

    double signed_area(int t) const {
        const auto& [a, b, c] = triangles[static_cast<std::size_t>(t)];
        const Vec2 e1 = vertices[b] - vertices[a];
        const Vec2 e2 = vertices[c] - vertices[a];
        return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
    }
    double area(int t) const { return std::abs(signed_area(t)); }

    Vec2 centroid(int t) const {
        const auto& [a, b, c] = triangles[static_cast<std::size_t>(t)];
        return (vertices[a] + vertices[b] + vertices[c]) / 3.0;
    }

    double total_area() const {
        double s = 0.0;
        for (int t = 0; t < static_cast<int>(triangles.size()); ++t) s += area(t);
        return s;
    }

    /// Gradients of the three hat functions of triangle t (columns).
    Eigen::Matrix<double, 2, 3> shape_gradients(int t) const {
        const auto& [a, b, c] = triangles[static_cast<std::size_t>(t)];
        const Vec2& pa = vertices[a];
        const Vec2& pb = vertices[b];
        const Vec2& pc = vertices[c];
        const double twice = 2.0 * signed_area(t);
        Eigen::Matrix<double, 2, 3> g;
        g.col(0) << pb.y() - pc.y(), pc.x() - pb.x();
        g.col(1) << pc.y() - pa.y(), pa.x() - pc.x();
        g.col(2) << pa.y() - pb.y(), pb.x() - pa.x();
        return g / twice;
    }

    /// Barycentric coordinates of x in triangle t.
    Eigen::Vector3d barycentric(int t, const Vec2& x) const {
        const auto& [a, b, c] = triangles[static_cast<std::size_t>(t)];
        const Vec2& pa = vertices[a];
        Mat2 m;
        m.col(0) = vertices[b] - pa;
        m.col(1) = vertices[c] - pa;
        const Vec2 lc = m.inverse() * (x - pa);
        return {1.0 - lc.x() - lc.y(), lc.x(), lc.y()};
    }

    /// Triangle containing x (closed), if any.
    std::optional<int> locate(const Vec2& x, double tol = 1e-12) const {
        for (int t = 0; t < static_cast<int>(triangles.size()); ++t)
            if (barycentric(t, x).minCoeff() >= -tol) return t;
        return std::nullopt;
    }

    Vec2 bbox_min() const {
        Vec2 lo = vertices.front();
        for (const auto& v : vertices) lo = lo.cwiseMin(v);
        return lo;
    }
    Vec2 bbox_max() const {
        Vec2 hi = vertices.front();
        for (const auto& v : vertices) hi = hi.cwiseMax(v);
        return hi;
    }
};

using MeshPtr = std::shared_ptr<const Mesh2D>;

/// Nodal values of a P1 field on a mesh.
struct ScalarField {
    MeshPtr mesh;
    Vec values;
};

/// Orients triangles counterclockwise, derives boundary data and checks
/// the mesh invariants (positive areas, no orphan vertices).
inline void finalize_mesh(Mesh2D& mesh) {
    const std::size_t nv = mesh.vertices.size();
    for (auto& tri : mesh.triangles) {
        for (int v : tri)
            if (v < 0 || static_cast<std::size_t>(v) >= nv) throw std::invalid_argument("mesh: vertex index out of range");
    }
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
        if (mesh.signed_area(t) < 0.0) std::swap(mesh.triangles[t][1], mesh.triangles[t][2]);
        if (!(mesh.signed_area(t) > 0.0)) throw std::invalid_argument("mesh: degenerate triangle " + std::to_string(t));
    }

    mesh.vertex_triangles.assign(nv, {});
    std::map<std::pair<int, int>, std::pair<int, int>> edges;  // edge -> (count, opposite vertex)
    mesh.h = 0.0;
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
        const auto& tri = mesh.triangles[t];
        for (int i = 0; i < 3; ++i) {
            mesh.vertex_triangles[tri[i]].push_back(t);
            const int a = tri[i];
            const int b = tri[(i + 1) % 3];
            const int c = tri[(i + 2) % 3];
            auto key = std::minmax(a, b);
            auto& entry = edges[{key.first, key.second}];
            ++entry.first;
            entry.second = c;
            mesh.h = std::max(mesh.h, (mesh.vertices[a] - mesh.vertices[b]).norm());
        }
    }
    for (std::size_t v = 0; v < nv; ++v)
        if (mesh.vertex_triangles[v].empty()) throw std::invalid_argument("mesh: orphan vertex " + std::to_string(v));

    std::vector<Vec2> normal_sum(nv, Vec2::Zero());
    std::vector<char> on_boundary(nv, 0);
    for (const auto& [edge, info] : edges) {
        if (info.first != 1) continue;
        const Vec2 a = mesh.vertices[edge.first];
        const Vec2 b = mesh.vertices[edge.second];
        const Vec2 tangent = (b - a).normalized();
        Vec2 n(-tangent.y(), tangent.x());
        if (n.dot(mesh.vertices[info.second] - a) < 0.0) n = -n;
        normal_sum[edge.first] += n;
        normal_sum[edge.second] += n;
        on_boundary[edge.first] = on_boundary[edge.second] = 1;
    }
    mesh.boundary_vertices.clear();
    mesh.boundary_normals.clear();
    mesh.boundary_slot.assign(nv, -1);
    for (std::size_t v = 0; v < nv; ++v) {
        if (!on_boundary[v]) continue;
        mesh.boundary_slot[v] = static_cast<int>(mesh.boundary_vertices.size());
        mesh.boundary_vertices.push_back(static_cast<int>(v));
        mesh.boundary_normals.push_back(normal_sum[v].normalized());
    }
}

/// Geometry descriptions accepted by build_domain.
struct DomainSpec {
    enum class Kind { rectangle, disk, wulff_ball, annulus_wulff };
    Kind kind = Kind::disk;
    double a = 1.0;  // rectangle width
    double b = 1.0;  // rectangle height
    double R = 1.0;
    std::optional<FinslerNorm> norm;

    static DomainSpec rectangle(double a, double b) {
        DomainSpec s;
        s.kind = Kind::rectangle;
        s.a = a;
        s.b = b;
        return s;
    }
    static DomainSpec disk(double r) {
        DomainSpec s;
        s.kind = Kind::disk;
        s.R = r;
        return s;
    }
    static DomainSpec wulff_ball(const FinslerNorm& h, double r) {
        DomainSpec s;
        s.kind = Kind::wulff_ball;
        s.R = r;
        s.norm = h;
        return s;
    }
    static DomainSpec annulus_wulff(const FinslerNorm& h, double r) {
        DomainSpec s;
        s.kind = Kind::annulus_wulff;
        s.R = r;
        s.norm = h;
        return s;
    }
};

namespace detail {

/// Joins two concentric rings whose vertices are equally spaced in angle
/// starting at θ = 0, advancing along whichever ring has the next smaller angle.
inline void stitch_rings(const std::vector<int>& inner, const std::vector<int>& outer,
                         std::vector<std::array<int, 3>>& out) {
    const int ni = static_cast<int>(inner.size());
    const int no = static_cast<int>(outer.size());
    if (ni == 1) {
        for (int b = 0; b < no; ++b) out.push_back({inner[0], outer[b], outer[(b + 1) % no]});
        return;
    }
    int a = 0;
    int b = 0;
    while (a < ni || b < no) {
        const double next_in = a < ni ? static_cast<double>(a + 1) / ni : 2.0;
        const double next_out = b < no ? static_cast<double>(b + 1) / no : 2.0;
        if (next_out <= next_in) {
            out.push_back({inner[a % ni], outer[b % no], outer[(b + 1) % no]});
            ++b;
        } else {
            out.push_back({inner[a % ni], outer[b % no], inner[(a + 1) % ni]});
            ++a;
        }
    }
}

/// Polar template on rings first_ring..rings; radial_extent(θ) is the
/// boundary distance from the origin along direction θ.
template <class Extent>
Mesh2D polar_mesh(int rings, int first_ring, const Extent& radial_extent) {
    Mesh2D mesh;
    std::vector<int> previous;
    for (int i = first_ring; i <= rings; ++i) {
        std::vector<int> ring;
        const int count = i == 0 ? 1 : 6 * i;
        const double frac = static_cast<double>(i) / rings;
        for (int j = 0; j < count; ++j) {
            const double theta = 2.0 * pi * j / count;
            ring.push_back(static_cast<int>(mesh.vertices.size()));
            mesh.vertices.push_back(frac * radial_extent(j, count, theta) * Vec2(std::cos(theta), std::sin(theta)));
        }
        if (!previous.empty()) stitch_rings(previous, ring, mesh.triangles);
        previous = std::move(ring);
    }
    finalize_mesh(mesh);
    return mesh;
}

}  // namespace detail

/// Triangulates the domain with boundary vertex spacing <= h_target.
inline MeshPtr build_domain(const DomainSpec& spec, double h_target) {
    if (!(h_target > 0.0)) throw std::invalid_argument("build_domain: h_target must be positive");
    switch (spec.kind) {
        case DomainSpec::Kind::rectangle: {
            if (!(spec.a > 0.0 && spec.b > 0.0)) throw std::invalid_argument("build_domain: rectangle sides must be positive");
            const int nx = std::max(1, static_cast<int>(std::ceil(spec.a / h_target - 1e-12)));
            const int ny = std::max(1, static_cast<int>(std::ceil(spec.b / h_target - 1e-12)));
            Mesh2D mesh;
            for (int j = 0; j <= ny; ++j)
                for (int i = 0; i <= nx; ++i) mesh.vertices.emplace_back(spec.a * i / nx, spec.b * j / ny);
            auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i) {
                    mesh.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
                    mesh.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
                }
            finalize_mesh(mesh);
            return std::make_shared<const Mesh2D>(std::move(mesh));
        }
        case DomainSpec::Kind::disk: {
            if (!(spec.R > 0.0)) throw std::invalid_argument("build_domain: radius must be positive");
            const int rings = std::max(1, static_cast<int>(std::ceil(pi * spec.R / (3.0 * h_target) - 1e-12)));
            const double r = spec.R;
            return std::make_shared<const Mesh2D>(detail::polar_mesh(rings, 0, [r](int, int, double) { return r; }));
        }
        case DomainSpec::Kind::wulff_ball:
        case DomainSpec::Kind::annulus_wulff: {
            if (!(spec.R > 0.0)) throw std::invalid_argument("build_domain: radius must be positive");
            if (!spec.norm) throw std::invalid_argument("build_domain: Wulff domains need a norm");
            const FinslerNorm& h = *spec.norm;
            if (h.dim() != 2) throw std::invalid_argument("build_domain: norm must be two-dimensional");
            const bool annulus = spec.kind == DomainSpec::Kind::annulus_wulff;
            auto extent = [&](double theta) { return spec.R / h.dual(unit_direction(theta)); };
            double reach = 0.0;
            for (int j = 0; j < 720; ++j) reach = std::max(reach, extent(2.0 * pi * j / 720));
            int rings = std::max(2, static_cast<int>(std::ceil(pi * reach / (3.0 * h_target) - 1e-12)));
            if (annulus && rings % 2) ++rings;
            // Grow until the mapped outer polyline honours the spacing bound.
            for (;;) {
                const WulffShape outer = wulff_boundary(h, Vec2::Zero(), spec.R, 6 * rings);
                double chord = 0.0;
                for (std::size_t j = 0; j < outer.boundary.size(); ++j)
                    chord = std::max(chord, (outer.boundary[(j + 1) % outer.boundary.size()] - outer.boundary[j]).norm());
                if (chord <= h_target) {
                    auto ring_extent = [&](int j, int count, double theta) {
                        if (count == 6 * rings) return outer.boundary[static_cast<std::size_t>(j)].norm();
                        return extent(theta);
                    };
                    return std::make_shared<const Mesh2D>(detail::polar_mesh(rings, annulus ? rings / 2 : 0, ring_extent));
                }
                rings += annulus ? 2 : 1;
            }
        }
    }
    throw std::invalid_argument("build_domain: unknown domain kind");
}

}  // namespace aniso
