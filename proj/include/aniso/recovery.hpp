#pragma once

// Derivative reconstruction for P1 fields: exact elementwise gradients,
// patch-recovered Hessians, and boundary normal derivatives.

#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/QR>

#include "aniso/linalg.hpp"
#include "aniso/mesh.hpp"

namespace aniso {

/// Constant gradient of the P1 field on each triangle.
inline std::vector<Vec2> recover_gradient(const ScalarField& u) {
    const Mesh2D& mesh = *u.mesh;
    std::vector<Vec2> grads(mesh.num_triangles());
    for (int t = 0; t < static_cast<int>(mesh.num_triangles()); ++t) {
        const auto& tri = mesh.triangles[t];
        const Eigen::Vector3d local(u.values(tri[0]), u.values(tri[1]), u.values(tri[2]));
        grads[t] = mesh.shape_gradients(t) * local;
    }
    return grads;
}

/// Area-weighted average of the incident triangle gradients at each vertex.
inline std::vector<Vec2> nodal_gradient(const ScalarField& u) {
    const Mesh2D& mesh = *u.mesh;
    const auto grads = recover_gradient(u);
    std::vector<Vec2> out(mesh.num_vertices(), Vec2::Zero());
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        double w = 0.0;
        for (int t : mesh.vertex_triangles[v]) {
            out[v] += mesh.area(t) * grads[t];
            w += mesh.area(t);
        }
        out[v] /= w;
    }
    return out;
}

struct HessianRecovery {
    std::vector<Mat2> vertex;
    /// Vertices whose patch was too small for a fit; they carry the
    /// average of the nearest ring of fitted Hessians instead.
    std::vector<int> fallback;
};

/// Per-vertex Hessians from a least-squares fit of an affine gradient
/// model g0 + D(x − x_v) (D symmetric) to the piecewise gradient of the
/// patch. Each patch edge e = (i, j) contributes the constraint that the
/// model's tangential component at the edge midpoint reproduces the
/// triangle gradient along e, i.e. u_j − u_i. The fit is exact for
/// quadratic fields on any mesh.
inline HessianRecovery recover_hessian(const ScalarField& u) {
    const Mesh2D& mesh = *u.mesh;
    const int nv = static_cast<int>(mesh.num_vertices());
    HessianRecovery out;
    out.vertex.assign(static_cast<std::size_t>(nv), Mat2::Zero());
    std::vector<char> fitted(static_cast<std::size_t>(nv), 0);

    for (int v = 0; v < nv; ++v) {
        const auto& patch = mesh.vertex_triangles[v];
        if (patch.size() < 3) continue;
        std::set<std::pair<int, int>> edges;
        for (int t : patch) {
            const auto& tri = mesh.triangles[t];
            for (int i = 0; i < 3; ++i) edges.insert(std::minmax(tri[i], tri[(i + 1) % 3]));
        }
        Eigen::MatrixXd a(static_cast<Eigen::Index>(edges.size()), 5);
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(edges.size()));
        const Vec2 xv = mesh.vertices[v];
        Eigen::Index row = 0;
        for (const auto& [i, j] : edges) {
            const Vec2 e = mesh.vertices[j] - mesh.vertices[i];
            const Vec2 m = 0.5 * (mesh.vertices[i] + mesh.vertices[j]) - xv;
            const double len = e.norm();
            a(row, 0) = e.x() / len;
            a(row, 1) = e.y() / len;
            a(row, 2) = m.x() * e.x() / len;
            a(row, 3) = (m.y() * e.x() + m.x() * e.y()) / len;
            a(row, 4) = m.y() * e.y() / len;
            rhs(row) = (u.values(j) - u.values(i)) / len;
            ++row;
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
        if (qr.rank() < 5) continue;
        const Eigen::VectorXd c = qr.solve(rhs);
        out.vertex[v] << c(2), c(3), c(3), c(4);
        fitted[v] = 1;
    }

    for (int v = 0; v < nv; ++v) {
        if (fitted[v]) continue;
        out.fallback.push_back(v);
        // Widen the ring around v until it contains fitted vertices.
        std::set<int> seen{v};
        std::vector<int> ring{v};
        std::vector<int> donors;
        while (donors.empty() && !ring.empty()) {
            std::vector<int> next;
            for (int r : ring)
                for (int t : mesh.vertex_triangles[r])
                    for (int w : mesh.triangles[t])
                        if (seen.insert(w).second) next.push_back(w);
            for (int w : next)
                if (fitted[w]) donors.push_back(w);
            ring = std::move(next);
        }
        Mat2 sum = Mat2::Zero();
        for (int w : donors) sum += out.vertex[w];
        if (!donors.empty()) out.vertex[v] = sum / static_cast<double>(donors.size());
    }
    return out;
}

/// Vertex Hessians averaged to triangle centroids.
inline std::vector<Mat2> centroid_hessians(const Mesh2D& mesh, const HessianRecovery& rec) {
    std::vector<Mat2> out(mesh.num_triangles());
    for (int t = 0; t < static_cast<int>(mesh.num_triangles()); ++t) {
        const auto& tri = mesh.triangles[t];
        out[t] = (rec.vertex[tri[0]] + rec.vertex[tri[1]] + rec.vertex[tri[2]]) / 3.0;
    }
    return out;
}

/// <∇u|_T, ν(v)> averaged over the triangles at boundary vertex v, with ν
/// the inner normal (positive means u increases into Ω).
inline double boundary_normal_derivative(const ScalarField& u, int v) {
    const Mesh2D& mesh = *u.mesh;
    if (v < 0 || v >= static_cast<int>(mesh.num_vertices()) || !mesh.is_boundary(v))
        throw std::invalid_argument("boundary_normal_derivative: vertex " + std::to_string(v) + " is not on the boundary");
    const Vec2 nu = mesh.boundary_normals[static_cast<std::size_t>(mesh.boundary_slot[v])];
    double sum = 0.0;
    for (int t : mesh.vertex_triangles[v]) {
        const auto& tri = mesh.triangles[t];
        const Eigen::Vector3d local(u.values(tri[0]), u.values(tri[1]), u.values(tri[2]));
        const Vec2 g = mesh.shape_gradients(t) * local;
        sum += g.dot(nu);
    }
    return sum / static_cast<double>(mesh.vertex_triangles[v].size());
}

}  // namespace aniso
