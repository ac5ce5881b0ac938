#pragma once

// P1 finite-element minimization of the Wulff functional
//   I_h(u) = Σ_T |T| [ B(H(∇u|_T)) − F(u(x_T)) ]
// over fields with prescribed Dirichlet data, by damped Newton with Armijo
// backtracking. The principal part is treated exactly; the source f is
// lagged (its derivative is left out of the tangent).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "aniso/errors.hpp"
#include "aniso/finsler.hpp"
#include "aniso/material.hpp"
#include "aniso/mesh.hpp"
#include "aniso/recovery.hpp"
#include "aniso/sampling.hpp"

namespace aniso {

using SpMat = Eigen::SparseMatrix<double>;

struct SolveOptions {
    double tol_solve = 1e-8;
    int max_iter = 200;
    int max_backtracks = 40;
    /// Gradients shorter than this are shifted by eps_grad·e1 before the
    /// tangent is formed.
    double eps_grad = 1e-10;
    double cg_tol = 1e-12;
    double armijo = 1e-4;
    bool check_admissibility = true;
};

struct SolveReport {
    int iterations = 0;
    int gradient_steps = 0;
    std::vector<double> energy_history;
    /// H^{-1}-type dual norm sqrt(rᵀ K⁻¹ r) of the weak residual, K the P1 Laplacian.
    double final_residual = 0.0;
    double min_u = 0.0;
    /// Fraction of quadrature points (triangles) with |∇u| < eps_grad.
    double critical_fraction = 0.0;
    bool converged = false;
};

struct Solution {
    ScalarField field;
    SolveReport report;
};

/// The discrete functional with its gradient and regularized Newton tangent.
class WulffFunctional {
public:
    WulffFunctional(MeshPtr mesh, MaterialProfile m, FinslerNorm h, SourceTerm s)
        : mesh_(std::move(mesh)), m_(std::move(m)), h_(std::move(h)), s_(std::move(s)) {
        const int nt = static_cast<int>(mesh_->num_triangles());
        area_.resize(nt);
        grad_.resize(nt);
        for (int t = 0; t < nt; ++t) {
            area_[t] = mesh_->area(t);
            grad_[t] = mesh_->shape_gradients(t);
        }
    }

    const Mesh2D& mesh() const { return *mesh_; }

    Vec2 element_gradient(const Vec& u, int t) const {
        const auto& tri = mesh_->triangles[t];
        return grad_[t] * Eigen::Vector3d(u(tri[0]), u(tri[1]), u(tri[2]));
    }

    double centroid_value(const Vec& u, int t) const {
        const auto& tri = mesh_->triangles[t];
        return (u(tri[0]) + u(tri[1]) + u(tri[2])) / 3.0;
    }

    double energy(const Vec& u) const {
        double e = 0.0;
        for (int t = 0; t < static_cast<int>(area_.size()); ++t) {
            const Vec xi = from_vec2(element_gradient(u, t));
            e += area_[t] * (m_.B(h_(xi)) - s_.F(centroid_value(u, t)));
        }
        return e;
    }

    /// ∂I_h/∂u_i for every vertex i.
    Vec gradient(const Vec& u) const {
        Vec r = Vec::Zero(u.size());
        for (int t = 0; t < static_cast<int>(area_.size()); ++t) {
            const auto& tri = mesh_->triangles[t];
            const Vec2 a = to_vec2(flux(m_, h_, from_vec2(element_gradient(u, t))));
            const double load = s_.f(centroid_value(u, t)) / 3.0;
            const Eigen::Vector3d local = grad_[t].transpose() * a;
            for (int i = 0; i < 3; ++i) r(tri[i]) += area_[t] * (local(i) - load);
        }
        return r;
    }

    /// Element coefficient B''∇H⊗∇H + B'D²H, regularized near ∇u = 0,
    /// symmetrized, and with eigenvalues floored at c1 (k + |ξ|)^{p-2}.
    Mat2 coefficient(const Vec2& g, double eps_grad, double c1) const {
        Vec2 xi = g;
        if (xi.norm() < eps_grad) xi.x() += eps_grad;
        Mat2 c = tangent_matrix(m_, h_, from_vec2(xi));
        c = 0.5 * (c + c.transpose()).eval();
        const double floor = c1 * m_.weight(xi.norm());
        Eigen::SelfAdjointEigenSolver<Mat2> eig(c);
        Vec2 ev = eig.eigenvalues();
        if (ev.minCoeff() < floor) {
            ev = ev.cwiseMax(floor);
            c = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
        }
        return c;
    }

    /// Tangent restricted to the given dofs (dof[v] = -1 for fixed vertices).
    SpMat tangent(const Vec& u, const std::vector<int>& dof, int ndof, double eps_grad, double c1) const {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(area_.size() * 9);
        for (int t = 0; t < static_cast<int>(area_.size()); ++t) {
            const auto& tri = mesh_->triangles[t];
            const Mat2 c = coefficient(element_gradient(u, t), eps_grad, c1);
            const Eigen::Matrix3d local = area_[t] * grad_[t].transpose() * c * grad_[t];
            for (int i = 0; i < 3; ++i) {
                if (dof[tri[i]] < 0) continue;
                for (int j = 0; j < 3; ++j)
                    if (dof[tri[j]] >= 0) trip.emplace_back(dof[tri[i]], dof[tri[j]], local(i, j));
            }
        }
        SpMat k(ndof, ndof);
        k.setFromTriplets(trip.begin(), trip.end());
        return k;
    }

    /// Euclidean P1 stiffness matrix, interior block and the interior-boundary coupling.
    void laplacian(const std::vector<int>& dof, int ndof, const std::vector<int>& fixed_slot, int nfixed,
                   SpMat& k_ii, SpMat& k_ib) const {
        std::vector<Eigen::Triplet<double>> ii;
        std::vector<Eigen::Triplet<double>> ib;
        for (int t = 0; t < static_cast<int>(area_.size()); ++t) {
            const auto& tri = mesh_->triangles[t];
            const Eigen::Matrix3d local = area_[t] * grad_[t].transpose() * grad_[t];
            for (int i = 0; i < 3; ++i) {
                if (dof[tri[i]] < 0) continue;
                for (int j = 0; j < 3; ++j) {
                    if (dof[tri[j]] >= 0)
                        ii.emplace_back(dof[tri[i]], dof[tri[j]], local(i, j));
                    else
                        ib.emplace_back(dof[tri[i]], fixed_slot[tri[j]], local(i, j));
                }
            }
        }
        k_ii.resize(ndof, ndof);
        k_ii.setFromTriplets(ii.begin(), ii.end());
        k_ib.resize(ndof, nfixed);
        k_ib.setFromTriplets(ib.begin(), ib.end());
    }

    /// ∫ φ_i under one-point quadrature, i.e. Σ_{T ∋ i} |T|/3.
    Vec lumped_load() const {
        Vec l = Vec::Zero(static_cast<Eigen::Index>(mesh_->num_vertices()));
        for (int t = 0; t < static_cast<int>(area_.size()); ++t)
            for (int v : mesh_->triangles[t]) l(v) += area_[t] / 3.0;
        return l;
    }

    const MaterialProfile& material() const { return m_; }
    const FinslerNorm& norm() const { return h_; }
    const SourceTerm& source() const { return s_; }

private:
    MeshPtr mesh_;
    MaterialProfile m_;
    FinslerNorm h_;
    SourceTerm s_;
    std::vector<double> area_;
    std::vector<Eigen::Matrix<double, 2, 3>> grad_;
};

/// Fraction of the domain area on which |∇u| < eps_grad.
inline double critical_set_fraction(const ScalarField& u, double eps_grad) {
    const Mesh2D& mesh = *u.mesh;
    const auto grads = recover_gradient(u);
    double crit = 0.0;
    double total = 0.0;
    for (int t = 0; t < static_cast<int>(mesh.num_triangles()); ++t) {
        const double a = mesh.area(t);
        total += a;
        if (grads[t].norm() < eps_grad) crit += a;
    }
    return crit / total;
}

/// Solves the Dirichlet problem with boundary values bc[i] at
/// mesh.boundary_vertices[i].
inline Solution solve(const MeshPtr& mesh, const MaterialProfile& m, const FinslerNorm& h, const SourceTerm& s,
                      std::span<const double> bc, const SolveOptions& opts = {}) {
    if (h.dim() != 2) throw std::invalid_argument("solve: norm must be two-dimensional");
    if (bc.size() != mesh->boundary_vertices.size())
        throw std::invalid_argument("solve: expected " + std::to_string(mesh->boundary_vertices.size()) +
                                    " boundary values, got " + std::to_string(bc.size()));
    for (double v : bc)
        if (!std::isfinite(v)) throw std::invalid_argument("solve: boundary data must be finite");

    double c1 = 0.0;
    if (opts.check_admissibility) {
        double s_max = 1.0;
        for (double v : bc) s_max = std::max(s_max, std::abs(v));
        s.validate(10.0 * s_max);
        c1 = check_structural_bounds(m, h, sample_vector_pairs(2, 2000, 0)).C1;
    }

    const WulffFunctional functional(mesh, m, h, s);
    const int nv = static_cast<int>(mesh->num_vertices());
    std::vector<int> dof(static_cast<std::size_t>(nv), -1);
    std::vector<int> interior;
    for (int v = 0; v < nv; ++v)
        if (!mesh->is_boundary(v)) {
            dof[v] = static_cast<int>(interior.size());
            interior.push_back(v);
        }
    const int ndof = static_cast<int>(interior.size());
    const int nb = static_cast<int>(mesh->boundary_vertices.size());

    Vec u = Vec::Zero(nv);
    Vec ub(nb);
    for (int i = 0; i < nb; ++i) {
        u(mesh->boundary_vertices[i]) = bc[i];
        ub(i) = bc[i];
    }

    SpMat k_ii;
    SpMat k_ib;
    functional.laplacian(dof, ndof, mesh->boundary_slot, nb, k_ii, k_ib);
    Eigen::SimplicialLDLT<SpMat> laplace(k_ii);
    if (laplace.info() != Eigen::Success) throw NumericError("solve: Laplacian factorization failed", 0.0);

    auto restrict = [&](const Vec& full) {
        Vec r(ndof);
        for (int i = 0; i < ndof; ++i) r(i) = full(interior[i]);
        return r;
    };
    auto dual_norm = [&](const Vec& r) { return std::sqrt(std::max(0.0, r.dot(laplace.solve(r)))); };

    // Initial guess: -Δu = f(0) with the given boundary data.
    if (ndof > 0) {
        const Vec rhs = s.f(0.0) * restrict(functional.lumped_load()) - k_ib * ub;
        const Vec ui = laplace.solve(rhs);
        for (int i = 0; i < ndof; ++i) u(interior[i]) = ui(i);
    }

    SolveReport report;
    double energy = functional.energy(u);
    report.energy_history.push_back(energy);
    Vec r = restrict(functional.gradient(u));
    double res = ndof > 0 ? dual_norm(r) : 0.0;

    for (int it = 0; it < opts.max_iter && res > opts.tol_solve * (1.0 + std::abs(energy)); ++it) {
        const SpMat k = functional.tangent(u, dof, ndof, opts.eps_grad, c1);
        Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg;
        cg.setTolerance(opts.cg_tol);
        cg.setMaxIterations(std::max(1000, 4 * ndof));
        cg.compute(k);
        Vec d = cg.solve(-r);
        double slope = r.dot(d);
        if (cg.info() != Eigen::Success || !(slope < 0.0) || !d.allFinite()) {
            d = -r.cwiseQuotient(k.diagonal());
            slope = r.dot(d);
            ++report.gradient_steps;
        }

        double alpha = 1.0;
        bool accepted = false;
        Vec trial(nv);
        double trial_energy = energy;
        for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
            trial = u;
            for (int i = 0; i < ndof; ++i) trial(interior[i]) += alpha * d(i);
            trial_energy = functional.energy(trial);
            if (trial_energy <= energy + opts.armijo * alpha * slope) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            // Near the minimizer the predicted decrease drops below the
            // rounding level of I_h; accept the Newton step if the
            // residual still shrinks and the energy does not grow.
            trial = u;
            for (int i = 0; i < ndof; ++i) trial(interior[i]) += d(i);
            trial_energy = functional.energy(trial);
            const Vec trial_r = restrict(functional.gradient(trial));
            const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(energy));
            if (-slope < roundoff && trial_energy <= energy + roundoff && dual_norm(trial_r) < res) {
                accepted = true;
            } else {
                throw NonConvergenceError("solve: line search failed after " + std::to_string(opts.max_backtracks) +
                                              " backtracks",
                                          res, u);
            }
        }
        u = trial;
        energy = trial_energy;
        report.energy_history.push_back(energy);
        r = restrict(functional.gradient(u));
        res = dual_norm(r);
        report.iterations = it + 1;
    }

    report.final_residual = res;
    report.converged = res <= opts.tol_solve * (1.0 + std::abs(energy));
    if (!report.converged)
        throw NonConvergenceError("solve: no convergence within " + std::to_string(opts.max_iter) + " iterations", res, u);
    report.min_u = u.minCoeff();
    ScalarField field{mesh, u};
    report.critical_fraction = critical_set_fraction(field, opts.eps_grad);
    return {std::move(field), std::move(report)};
}

/// Dirichlet data from a function of position.
inline Solution solve(const MeshPtr& mesh, const MaterialProfile& m, const FinslerNorm& h, const SourceTerm& s,
                      const std::function<double(const Vec2&)>& bc, const SolveOptions& opts = {}) {
    std::vector<double> values;
    values.reserve(mesh->boundary_vertices.size());
    for (int v : mesh->boundary_vertices) values.push_back(bc(mesh->vertices[v]));
    return solve(mesh, m, h, s, std::span<const double>(values), opts);
}

/// Zero Dirichlet data.
inline Solution solve(const MeshPtr& mesh, const MaterialProfile& m, const FinslerNorm& h, const SourceTerm& s,
                      const SolveOptions& opts = {}) {
    const std::vector<double> zeros(mesh->boundary_vertices.size(), 0.0);
    return solve(mesh, m, h, s, std::span<const double>(zeros), opts);
}

}  // namespace aniso
