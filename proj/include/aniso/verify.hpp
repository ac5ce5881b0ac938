#pragma once

// Discrete counterparts of the weighted regularity estimates, the Hopf
// boundary lemma and the comparison principle, evaluated on solved fields.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "aniso/finsler.hpp"
#include "aniso/material.hpp"
#include "aniso/mesh.hpp"
#include "aniso/radial.hpp"
#include "aniso/recovery.hpp"
#include "aniso/sampling.hpp"
#include "aniso/solver2d.hpp"

namespace aniso {

/// Requires 0 <= beta < 1 and gamma < n − 2, with gamma = 0 forced for n = 2.
inline void check_kernel_exponents(int n, double beta, double gamma) {
    if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in [0, 1)");
    if (n == 2 ? gamma != 0.0 : !(gamma >= 0.0 && gamma < n - 2.0))
        throw std::invalid_argument("gamma must be 0 for n = 2 and lie in [0, n-2) otherwise");
}

inline void check_weight_exponent(const MaterialProfile& m, double t) {
    if (!(t >= 0.0 && t < m.p() - 1.0)) throw std::invalid_argument("t must lie in [0, p-1)");
}

/// 25 Halton points (bases 2, 3) of the bounding box that fall inside the
/// mesh, followed by the area centroid of the domain.
inline std::vector<Vec2> sample_points(const Mesh2D& mesh, int count = 25) {
    const Vec2 lo = mesh.bbox_min();
    const Vec2 hi = mesh.bbox_max();
    std::vector<Vec2> out;
    for (std::uint64_t i = 1; static_cast<int>(out.size()) < count && i < 100000; ++i) {
        const Vec2 x = lo + Vec2(radical_inverse(i, 2), radical_inverse(i, 3)).cwiseProduct(hi - lo);
        if (mesh.locate(x)) out.push_back(x);
    }
    Vec2 c = Vec2::Zero();
    for (int t = 0; t < static_cast<int>(mesh.num_triangles()); ++t) c += mesh.area(t) * mesh.centroid(t);
    out.push_back(c / mesh.total_area());
    return out;
}

namespace detail {

inline double inradius(const Mesh2D& mesh, int t) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    double perimeter = 0.0;
    for (int i = 0; i < 3; ++i) perimeter += (mesh.vertices[tri[(i + 1) % 3]] - mesh.vertices[tri[i]]).norm();
    return 2.0 * mesh.area(t) / perimeter;
}

/// max over y of Σ_T |T| density_T / |x_T − y|^γ. In the element holding y
/// the distance is floored at a third of its inradius.
inline double kernel_sup(const Mesh2D& mesh, const std::vector<double>& density, double gamma,
                         const std::vector<Vec2>& y_samples) {
    if (y_samples.empty()) throw std::invalid_argument("need at least one y sample");
    double best = 0.0;
    for (const Vec2& y : y_samples) {
        const int host = gamma == 0.0 ? -1 : mesh.locate(y).value_or(-1);
        double acc = 0.0;
        for (int t = 0; t < static_cast<int>(mesh.num_triangles()); ++t) {
            double dist = (mesh.centroid(t) - y).norm();
            if (t == host) dist = std::max(dist, inradius(mesh, t) / 3.0);
            const double kernel = gamma == 0.0 ? 1.0 : std::pow(dist, -gamma);
            acc += mesh.area(t) * density[t] * kernel;
        }
        best = std::max(best, acc);
    }
    return best;
}

}  // namespace detail

/// sup_y Σ_T |T| (k + |∇u|)^{p−2−β} |D²u|² / |x_T − y|^γ with D²u recovered
/// at centroids.
inline double weighted_hessian_integral(const ScalarField& u, const MaterialProfile& m, double beta, double gamma,
                                        const std::vector<Vec2>& y_samples) {
    check_kernel_exponents(2, beta, gamma);
    const Mesh2D& mesh = *u.mesh;
    const auto grads = recover_gradient(u);
    const auto hess = centroid_hessians(mesh, recover_hessian(u));
    std::vector<double> density(mesh.num_triangles());
    for (std::size_t t = 0; t < density.size(); ++t) {
        const double hn = hess[t].squaredNorm();
        density[t] = hn == 0.0 ? 0.0 : std::pow(m.k() + grads[t].norm(), m.p() - 2.0 - beta) * hn;
    }
    return detail::kernel_sup(mesh, density, gamma, y_samples);
}

/// sup_y Σ_T |T| / ((k + |∇u|)^t |x_T − y|^γ).
inline double weight_integral(const ScalarField& u, const MaterialProfile& m, double t, double gamma,
                              const std::vector<Vec2>& y_samples) {
    check_weight_exponent(m, t);
    check_kernel_exponents(2, 0.0, gamma);
    const Mesh2D& mesh = *u.mesh;
    const auto grads = recover_gradient(u);
    std::vector<double> density(mesh.num_triangles());
    for (std::size_t i = 0; i < density.size(); ++i) density[i] = std::pow(m.k() + grads[i].norm(), -t);
    return detail::kernel_sup(mesh, density, gamma, y_samples);
}

/// |S^{n−1}| ∫_0^R ρ^{n−1−γ} (k + |w'|)^{−t} dρ for a Euclidean ball-mode
/// profile, i.e. the weight integral of the lifted field with y at the
/// centre. This is the n >= 3 route where γ > 0 is admissible.
inline double radial_weight_integral(const BarrierProfile& profile, const MaterialProfile& m, double t,
                                     double gamma) {
    if (profile.mode != RadialMode::ball) throw std::invalid_argument("radial_weight_integral: needs a ball profile");
    check_weight_exponent(m, t);
    check_kernel_exponents(profile.n, 0.0, gamma);
    const int n = profile.n;
    const double sphere = 2.0 * std::pow(pi, 0.5 * n) / std::tgamma(0.5 * n);
    auto integrand = [&](std::size_t i) {
        const double rho = profile.grid[i];
        if (rho == 0.0) return 0.0;
        return std::pow(rho, n - 1.0 - gamma) * std::pow(m.k() + std::abs(profile.w_prime[i]), -t);
    };
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < profile.grid.size(); ++i)
        acc += 0.5 * (profile.grid[i + 1] - profile.grid[i]) * (integrand(i) + integrand(i + 1));
    return sphere * acc;
}

/// Largest q for which the estimates give D²u ∈ L^q: 2 for p < 3, (p−1)/(p−2) otherwise.
inline double sobolev_threshold(double p) { return p < 3.0 ? 2.0 : (p - 1.0) / (p - 2.0); }

struct SobolevEntry {
    double q;
    double integral;
    /// q <= threshold, i.e. covered by the regularity statement.
    bool covered;
};

/// Σ_T |T| |D²u(x_T)|^q for each q.
inline std::vector<SobolevEntry> sobolev_scan(const ScalarField& u, const MaterialProfile& m,
                                              const std::vector<double>& q_grid) {
    const Mesh2D& mesh = *u.mesh;
    const auto hess = centroid_hessians(mesh, recover_hessian(u));
    const double threshold = sobolev_threshold(m.p());
    std::vector<SobolevEntry> out;
    for (double q : q_grid) {
        if (!(q > 1.0 && q <= 4.0)) throw std::invalid_argument("sobolev_scan: q must lie in (1, 4]");
        double acc = 0.0;
        for (int t = 0; t < static_cast<int>(mesh.num_triangles()); ++t)
            acc += mesh.area(t) * std::pow(hess[t].norm(), q);
        out.push_back({q, acc, q <= threshold});
    }
    return out;
}

struct HopfReport {
    double min_normal_derivative = 0.0;
    double barrier_margin = 0.0;
    /// min (u − v) over mesh nodes in the barrier annulus.
    double comparison_violation = 0.0;
    int boundary_vertex = -1;
    Vec2 center = Vec2::Zero();
    double R = 0.0;
    double m = 0.0;
    double shoot_slope = 0.0;
    int annulus_nodes = 0;
    double h = 0.0;
};

/// Places the Wulff ball B^{H°}_R(x̄) tangent to ∂Ω from inside at boundary
/// vertex y, i.e. x̄ = y + R ∇H(ν(y)), and checks that it fits.
inline Vec2 interior_wulff_center(const Mesh2D& mesh, const FinslerNorm& h, int vertex, double R) {
    const int slot = mesh.boundary_slot.at(static_cast<std::size_t>(vertex));
    if (slot < 0) throw std::invalid_argument("interior_wulff_center: vertex is not on the boundary");
    const Vec2 y = mesh.vertices[vertex];
    const Vec2 nu = mesh.boundary_normals[slot];
    const Vec2 center = y + R * to_vec2(h.gradient(from_vec2(nu)));
    const double slack = mesh.h * mesh.h;
    if (!mesh.locate(center)) {
        throw std::invalid_argument("hopf_check: no interior Wulff ball of radius R fits at vertex " +
                                    std::to_string(vertex) + "; try a smaller R");
    }
    for (int b : mesh.boundary_vertices) {
        if (b == vertex) continue;
        if (h.dual(from_vec2(mesh.vertices[b] - center)) < R - slack) {
            std::ostringstream os;
            os << "hopf_check: no interior Wulff ball of radius " << R << " fits at vertex " << vertex
               << " (boundary vertex " << b << " intrudes); try a smaller R";
            throw std::invalid_argument(os.str());
        }
    }
    return center;
}

/// Hopf-lemma evidence for a positive solution with zero boundary data:
/// the smallest inner normal derivative, and a radial barrier below u in an
/// interior-touching Wulff annulus at the worst boundary vertex (or at
/// `vertex` when given).
inline HopfReport hopf_check(const ScalarField& u, const FinslerNorm& h, const MaterialProfile& m,
                             const SourceTerm& s, double R, double barrier_m,
                             std::optional<int> vertex = std::nullopt) {
    const Mesh2D& mesh = *u.mesh;
    HopfReport rep;
    rep.R = R;
    rep.m = barrier_m;
    rep.h = mesh.h;
    rep.min_normal_derivative = std::numeric_limits<double>::infinity();
    int worst = mesh.boundary_vertices.front();
    for (int b : mesh.boundary_vertices) {
        const double d = boundary_normal_derivative(u, b);
        if (d < rep.min_normal_derivative) {
            rep.min_normal_derivative = d;
            worst = b;
        }
    }
    rep.boundary_vertex = vertex.value_or(worst);
    rep.center = interior_wulff_center(mesh, h, rep.boundary_vertex, R);

    const BarrierProfile profile = shoot(RadialProblem::barrier(m, 2, R, s.g), barrier_m);
    rep.shoot_slope = profile.shoot_slope;
    rep.barrier_margin = hopf_margin(profile, h);

    const RadialLift v(h, rep.center, profile);
    rep.comparison_violation = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
        const Vec2& x = mesh.vertices[i];
        if (!v.in_range(x, 0.0)) continue;
        rep.comparison_violation = std::min(rep.comparison_violation, u.values(static_cast<Eigen::Index>(i)) - v(x));
        ++rep.annulus_nodes;
    }
    if (rep.annulus_nodes == 0)
        throw std::invalid_argument("hopf_check: no mesh node lies in the barrier annulus; refine the mesh or enlarge R");
    return rep;
}

struct RefinementRow {
    double h;
    double hessian_integral;
    double weight_integral;
    double critical_fraction;
};

struct RegularityReport {
    double beta = 0.0;
    double gamma = 0.0;
    double t = 0.0;
    double hessian_integral_sup = 0.0;
    double weight_integral_sup = 0.0;
    std::vector<RefinementRow> per_refinement;
    double critical_fraction = 0.0;
    std::vector<SobolevEntry> sobolev;
};

struct RegularityStudy {
    RegularityReport report;
    std::vector<Solution> solutions;
};

/// Solves on meshes of size h0, h0/2, ... and evaluates the regularity
/// functionals on each. The critical-set threshold is the nominal mesh
/// size of each level. `on_level` sees the report after every level.
inline RegularityStudy regularity_study(const DomainSpec& domain, const MaterialProfile& m, const FinslerNorm& h,
                                        const SourceTerm& s, double h0, int levels, double beta, double t,
                                        const std::vector<double>& q_grid, const SolveOptions& opts = {},
                                        const std::function<void(const RegularityReport&)>& on_level = {}) {
    if (levels < 1) throw std::invalid_argument("regularity_study: need at least one level");
    RegularityStudy study;
    RegularityReport& rep = study.report;
    rep.beta = beta;
    rep.gamma = 0.0;
    rep.t = t;
    double hl = h0;
    for (int level = 0; level < levels; ++level, hl *= 0.5) {
        const MeshPtr mesh = build_domain(domain, hl);
        Solution sol = solve(mesh, m, h, s, opts);
        const auto ys = sample_points(*mesh);
        RefinementRow row;
        row.h = hl;
        row.hessian_integral = weighted_hessian_integral(sol.field, m, beta, 0.0, ys);
        row.weight_integral = weight_integral(sol.field, m, t, 0.0, ys);
        row.critical_fraction = critical_set_fraction(sol.field, hl);
        rep.per_refinement.push_back(row);
        study.solutions.push_back(std::move(sol));
        if (on_level) on_level(rep);
    }
    const RefinementRow& finest = rep.per_refinement.back();
    rep.hessian_integral_sup = finest.hessian_integral;
    rep.weight_integral_sup = finest.weight_integral;
    rep.critical_fraction = finest.critical_fraction;
    if (!q_grid.empty()) rep.sobolev = sobolev_scan(study.solutions.back().field, m, q_grid);
    return study;
}

}  // namespace aniso
