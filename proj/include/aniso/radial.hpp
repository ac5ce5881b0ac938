#pragma once

// Finsler-radial solutions v(x) = w(H°(x − x̄)). The 1D profile solves
//   (Φ(w') q)' = ± s(w) q,   Φ(t) = B'(|t|) sign(t),
// and is found by shooting. Two modes are supported:
//  - barrier: q(ρ) = (R − ρ)^{n−1} on [0, R/2], w(0) = 0, w(R/2) = m,
//    source +g; the geometric radius is R − ρ.
//  - ball:    q(ρ) = ρ^{n−1} on [0, R], w'(0) = 0, w(R) = target,
//    source −f; the geometric radius is ρ.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/fpclassify.hpp>
#include <boost/math/interpolators/pchip.hpp>

#include "aniso/errors.hpp"
#include "aniso/finsler.hpp"
#include "aniso/material.hpp"
#include "aniso/mesh.hpp"
#include "aniso/sampling.hpp"

namespace aniso {

enum class RadialMode { barrier, ball };

inline const char* to_string(RadialMode m) { return m == RadialMode::barrier ? "barrier" : "ball"; }

struct RadialProblem {
    MaterialProfile material;
    int n = 2;
    RadialMode mode = RadialMode::barrier;
    double R = 1.0;
    /// g in barrier mode, f in ball mode.
    std::function<double(double)> source;
    int steps = 4096;

    static RadialProblem barrier(MaterialProfile m, int n, double R, std::function<double(double)> g) {
        return {std::move(m), n, RadialMode::barrier, R, std::move(g)};
    }
    static RadialProblem ball(MaterialProfile m, int n, double R, std::function<double(double)> f) {
        return {std::move(m), n, RadialMode::ball, R, std::move(f)};
    }

    double length() const { return mode == RadialMode::barrier ? 0.5 * R : R; }

    /// Jacobian factor of Finsler polar coordinates in the integration variable.
    double q(double rho) const {
        const double base = mode == RadialMode::barrier ? R - rho : rho;
        return std::pow(base, n - 1);
    }

    void validate() const {
        if (n < 2) throw std::invalid_argument("RadialProblem: dimension must be >= 2");
        if (!(R > 0.0)) throw std::invalid_argument("RadialProblem: R must be positive");
        if (steps < 16) throw std::invalid_argument("RadialProblem: need at least 16 steps");
        if (!source) throw std::invalid_argument("RadialProblem: missing source term");
    }
};

/// A shot profile on an increasing grid of the integration variable.
struct BarrierProfile {
    RadialMode mode = RadialMode::barrier;
    int n = 2;
    double R = 1.0;
    std::vector<double> grid;
    std::vector<double> w;
    std::vector<double> w_prime;
    /// Φ(w') q along the grid.
    std::vector<double> flux;
    /// Converged w'(0) (barrier mode; zero in ball mode).
    double shoot_slope = 0.0;
    /// w(0): zero in barrier mode, the converged central value in ball mode.
    double center_value = 0.0;

    double end_value() const { return w.back(); }

    /// Integration variable for a point at Finsler distance rho_geo from the centre.
    double local_coordinate(double rho_geo) const { return mode == RadialMode::barrier ? R - rho_geo : rho_geo; }

    /// Admissible Finsler distances [inner, outer] for lifting.
    std::pair<double, double> geometric_range() const {
        return mode == RadialMode::barrier ? std::pair{0.5 * R, R} : std::pair{0.0, R};
    }
};

namespace detail {

struct RadialState {
    double w;
    double psi;
};

/// RK4 in (w, Ψ = Φ(w') q). Returns the profile for one shooting parameter.
inline BarrierProfile integrate_radial(const RadialProblem& p, double parameter) {
    const MaterialProfile& m = p.material;
    const double sign = p.mode == RadialMode::barrier ? 1.0 : -1.0;
    const double rho0 = p.mode == RadialMode::barrier ? 0.0 : p.R * 1e-6;
    const double end = p.length();
    const double dr = (end - rho0) / p.steps;

    auto rhs = [&](double rho, const RadialState& y) {
        const double qv = p.q(rho);
        return RadialState{m.phi_inverse(y.psi / qv), sign * p.source(y.w) * qv};
    };

    BarrierProfile prof;
    prof.mode = p.mode;
    prof.n = p.n;
    prof.R = p.R;
    RadialState y{};
    if (p.mode == RadialMode::barrier) {
        prof.shoot_slope = parameter;
        y = {0.0, m.phi(parameter) * p.q(0.0)};
    } else {
        // Exact first integral for constant f near the centre.
        prof.center_value = parameter;
        prof.grid.push_back(0.0);
        prof.w.push_back(parameter);
        prof.w_prime.push_back(0.0);
        prof.flux.push_back(0.0);
        const double fc = p.source(parameter);
        y = {parameter, -fc * std::pow(rho0, p.n) / p.n};
    }
    auto record = [&](double rho, const RadialState& s) {
        prof.grid.push_back(rho);
        prof.w.push_back(s.w);
        prof.w_prime.push_back(m.phi_inverse(s.psi / p.q(rho)));
        prof.flux.push_back(s.psi);
    };
    record(rho0, y);
    for (int i = 0; i < p.steps; ++i) {
        const double rho = rho0 + i * dr;
        const RadialState k1 = rhs(rho, y);
        const RadialState k2 = rhs(rho + 0.5 * dr, {y.w + 0.5 * dr * k1.w, y.psi + 0.5 * dr * k1.psi});
        const RadialState k3 = rhs(rho + 0.5 * dr, {y.w + 0.5 * dr * k2.w, y.psi + 0.5 * dr * k2.psi});
        const RadialState k4 = rhs(rho + dr, {y.w + dr * k3.w, y.psi + dr * k3.psi});
        y.w += dr / 6.0 * (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w);
        y.psi += dr / 6.0 * (k1.psi + 2.0 * k2.psi + 2.0 * k3.psi + k4.psi);
        if (!std::isfinite(y.w) || !std::isfinite(y.psi))
            throw NumericError("radial: integration produced a non-finite state", y.w);
        record(i + 1 == p.steps ? end : rho + dr, y);
    }
    return prof;
}

}  // namespace detail

/// Value of w at the far end for a given shooting parameter (slope w'(0)
/// in barrier mode, centre value w(0) in ball mode).
inline double shoot_hit(const RadialProblem& p, double parameter) {
    return detail::integrate_radial(p, parameter).end_value();
}

/// Shoots on the free initial datum until w at the far end equals target_m
/// within tol. The hit value is increasing in the parameter, so the root is
/// bracketed geometrically and bisected.
inline BarrierProfile shoot(const RadialProblem& p, double target_m, double tol = 1e-12) {
    p.validate();
    if (p.mode == RadialMode::barrier && !(target_m > 0.0))
        throw std::invalid_argument("shoot: barrier target m must be positive");
    if (p.mode == RadialMode::ball && !(target_m >= 0.0))
        throw std::invalid_argument("shoot: ball boundary value must be nonnegative");
    auto miss = [&](double s) { return shoot_hit(p, s) - target_m; };

    double lo = 0.0;
    double hi = 0.0;
    if (p.mode == RadialMode::barrier) {
        lo = 1e-6;
        hi = 1.0;
        while (miss(lo) > 0.0) {
            lo /= 10.0;
            if (lo < 1e-12) throw NumericError("shoot: no slope in [1e-12, 1e6] undershoots the target", miss(lo));
        }
        while (miss(hi) < 0.0) {
            hi *= 2.0;
            if (hi > 1e6) throw NumericError("shoot: no slope in [1e-12, 1e6] reaches the target", miss(hi));
        }
    } else {
        lo = target_m;
        double span = 1.0;
        hi = target_m + span;
        while (miss(hi) < 0.0) {
            span *= 2.0;
            hi = target_m + span;
            if (span > 1e6) throw NumericError("shoot: no centre value reaches the target", miss(hi));
        }
    }
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double r = miss(mid);
        if (r == 0.0) {
            lo = hi = mid;
            break;
        }
        (r < 0.0 ? lo : hi) = mid;
        if (hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() * hi) break;
    }
    BarrierProfile prof = detail::integrate_radial(p, 0.5 * (lo + hi));
    const double residual = std::abs(prof.end_value() - target_m);
    if (residual > tol) throw NumericError("shoot: converged profile misses the target", residual);
    return prof;
}

/// v(x) = w(ρ(x)) with ρ derived from H°(x − center); monotone cubic
/// interpolation of w between grid points.
class RadialLift {
public:
    RadialLift(FinslerNorm h, Vec2 center, const BarrierProfile& profile)
        : h_(std::move(h)), center_(std::move(center)), profile_(profile) {
        std::vector<double> x = profile.grid;
        std::vector<double> y = profile.w;
        interp_ = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(std::move(x), std::move(y));
    }

    /// Finsler distance of x from the centre.
    double distance(const Vec2& x) const { return h_.dual(from_vec2(x - center_)); }

    bool in_range(const Vec2& x, double slack = 1e-9) const {
        const auto [inner, outer] = profile_.geometric_range();
        const double r = distance(x);
        const double s = slack * profile_.R;
        return r >= inner - s && r <= outer + s;
    }

    /// Throws std::invalid_argument for points outside the profile's range.
    double operator()(const Vec2& x) const {
        if (!in_range(x)) {
            std::ostringstream os;
            os << "lift: point (" << x.x() << ", " << x.y() << ") at Finsler distance " << distance(x)
               << " lies outside the profile range";
            throw std::invalid_argument(os.str());
        }
        const double t = std::clamp(profile_.local_coordinate(distance(x)), profile_.grid.front(), profile_.grid.back());
        return (*interp_)(t);
    }

    const BarrierProfile& profile() const { return profile_; }
    const Vec2& center() const { return center_; }

private:
    FinslerNorm h_;
    Vec2 center_;
    BarrierProfile profile_;
    std::shared_ptr<boost::math::interpolators::pchip<std::vector<double>>> interp_;
};

/// Lifts the profile to every node of the mesh.
inline ScalarField lift(const FinslerNorm& h, const Vec2& center, const BarrierProfile& profile, const MeshPtr& mesh) {
    const RadialLift v(h, center, profile);
    Vec values(static_cast<Eigen::Index>(mesh->num_vertices()));
    for (std::size_t i = 0; i < mesh->num_vertices(); ++i) {
        if (!v.in_range(mesh->vertices[i]))
            throw std::invalid_argument("lift: node " + std::to_string(i) + " lies outside the profile range");
        values(static_cast<Eigen::Index>(i)) = v(mesh->vertices[i]);
    }
    return {mesh, values};
}

/// Lower bound of ∂v/∂ν on the outer sphere ∂B^{H°}_R of a lifted barrier:
/// w'(0) · min |∇H°| over the sphere (∇H° is 0-homogeneous).
inline double hopf_margin(const BarrierProfile& profile, const FinslerNorm& h, int samples = 4096) {
    if (profile.mode != RadialMode::barrier) throw std::invalid_argument("hopf_margin: needs a barrier-mode profile");
    double factor = std::numeric_limits<double>::infinity();
    for (const Vec& d : sphere_directions(h.dim(), samples)) factor = std::min(factor, h.dual_gradient(d).norm());
    const double margin = profile.shoot_slope * factor;
    if (!(margin > 0.0)) throw NumericError("hopf_margin: nonpositive barrier slope", margin);
    return margin;
}

}  // namespace aniso
