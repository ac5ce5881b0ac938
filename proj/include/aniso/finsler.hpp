#pragma once

// Translation-invariant Finsler norms H on R^n, their duals H°, and the
// Wulff shapes / Frank diagrams built from them.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "aniso/errors.hpp"
#include "aniso/linalg.hpp"
#include "aniso/sampling.hpp"

namespace aniso {

inline constexpr double tol_shape = 1e-10;
inline constexpr double tol_dual = 1e-6;

/// An even, positively 1-homogeneous, uniformly convex norm.
///
/// Closed forms are used for the euclidean, ellipsoidal (H(ξ) = sqrt(ξᵀAξ))
/// and l^q kinds. Custom norms are supplied as a callable; their derivatives
/// come from central differences and their dual from an angular scan (n = 2).
class FinslerNorm {
public:
    enum class Kind { euclidean, ellipsoidal, lp, custom };
    using Function = std::function<double(const Vec&)>;

    static FinslerNorm euclidean(int dim = 2) {
        if (dim < 2) throw std::invalid_argument("FinslerNorm: dimension must be >= 2");
        FinslerNorm h(Kind::euclidean, dim);
        return h;
    }

    static FinslerNorm ellipsoidal(const Mat& a) {
        if (a.rows() != a.cols() || a.rows() < 2)
            throw std::invalid_argument("FinslerNorm: ellipsoidal matrix must be square with n >= 2");
        if ((a - a.transpose()).norm() > 1e-12 * (1.0 + a.norm()))
            throw std::invalid_argument("FinslerNorm: ellipsoidal matrix must be symmetric");
        Eigen::LLT<Mat> llt(a);
        if (llt.info() != Eigen::Success)
            throw std::invalid_argument("FinslerNorm: ellipsoidal matrix must be positive definite");
        FinslerNorm h(Kind::ellipsoidal, static_cast<int>(a.rows()));
        h.matrix_ = a;
        h.inverse_ = llt.solve(Mat::Identity(a.rows(), a.cols()));
        return h;
    }

    static FinslerNorm lp(double q, int dim = 2) {
        if (!(q > 1.0) || !std::isfinite(q))
            throw std::invalid_argument("FinslerNorm: l^q exponent must satisfy q > 1");
        if (dim < 2) throw std::invalid_argument("FinslerNorm: dimension must be >= 2");
        FinslerNorm h(Kind::lp, dim);
        h.q_ = q;
        return h;
    }

    static FinslerNorm custom(Function fn, int dim = 2, std::string label = "custom") {
        if (!fn) throw std::invalid_argument("FinslerNorm: custom norm needs a callable");
        if (dim < 2) throw std::invalid_argument("FinslerNorm: dimension must be >= 2");
        FinslerNorm h(Kind::custom, dim);
        h.fn_ = std::make_shared<Function>(std::move(fn));
        h.label_ = std::move(label);
        return h;
    }

    Kind kind() const noexcept { return kind_; }
    int dim() const noexcept { return dim_; }
    /// Matrix A of the ellipsoidal kind.
    const Mat& matrix() const noexcept { return matrix_; }
    /// Exponent q of the l^q kind.
    double exponent() const noexcept { return q_; }
    bool closed_form() const noexcept { return kind_ != Kind::custom; }

    std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        switch (kind_) {
            case Kind::euclidean: os << "euclidean(n=" << dim_ << ")"; break;
            case Kind::ellipsoidal: {
                os << "ellipsoidal(A=[";
                for (int i = 0; i < dim_; ++i) {
                    os << (i ? ";" : "");
                    for (int j = 0; j < dim_; ++j) os << (j ? "," : "") << matrix_(i, j);
                }
                os << "])";
                break;
            }
            case Kind::lp: os << "lp(q=" << q_ << ",n=" << dim_ << ")"; break;
            case Kind::custom: os << label_ << "(n=" << dim_ << ")"; break;
        }
        return os.str();
    }

    double operator()(const Vec& xi) const {
        check_dim(xi);
        switch (kind_) {
            case Kind::euclidean: return xi.norm();
            case Kind::ellipsoidal: return std::sqrt(std::max(0.0, xi.dot(matrix_ * xi)));
            case Kind::lp: return lp_value(xi, q_);
            case Kind::custom: return (*fn_)(xi);
        }
        return 0.0;
    }

    /// ∇H(ξ); 0-homogeneous. Throws std::domain_error at ξ = 0.
    Vec gradient(const Vec& xi) const {
        check_dim(xi);
        const double len = xi.norm();
        if (len == 0.0) throw std::domain_error("FinslerNorm::gradient: H is not differentiable at 0");
        switch (kind_) {
            case Kind::euclidean: return xi / len;
            case Kind::ellipsoidal: {
                Vec ax = matrix_ * xi;
                return ax / std::sqrt(xi.dot(ax));
            }
            case Kind::lp: {
                const double h = lp_value(xi, q_);
                Vec g(dim_);
                for (int i = 0; i < dim_; ++i)
                    g(i) = sign(xi(i)) * std::pow(std::abs(xi(i)) / h, q_ - 1.0);
                return g;
            }
            case Kind::custom: return central_gradient(*fn_, xi, 1e-5 * len);
        }
        return {};
    }

    /// D²H(ξ); (-1)-homogeneous. For l^q with q < 2 entries are infinite on
    /// the coordinate hyperplanes.
    Mat hessian(const Vec& xi) const {
        check_dim(xi);
        const double len = xi.norm();
        if (len == 0.0) throw std::domain_error("FinslerNorm::hessian: H is not differentiable at 0");
        switch (kind_) {
            case Kind::euclidean: {
                Vec e = xi / len;
                return (Mat::Identity(dim_, dim_) - outer(e, e)) / len;
            }
            case Kind::ellipsoidal: {
                Vec ax = matrix_ * xi;
                const double h = std::sqrt(xi.dot(ax));
                return (matrix_ - outer(ax, ax) / (h * h)) / h;
            }
            case Kind::lp: {
                const double h = lp_value(xi, q_);
                Vec a(dim_);
                Mat d = Mat::Zero(dim_, dim_);
                for (int i = 0; i < dim_; ++i) {
                    const double r = std::abs(xi(i)) / h;
                    a(i) = sign(xi(i)) * std::pow(r, q_ - 1.0);
                    d(i, i) = std::pow(r, q_ - 2.0);
                }
                return (q_ - 1.0) / h * (d - outer(a, a));
            }
            case Kind::custom: return central_hessian(*fn_, xi, 1e-4 * len);
        }
        return {};
    }

    /// H°(x) = sup{<ξ, x> : H(ξ) <= 1}.
    double dual(const Vec& x) const {
        check_dim(x);
        switch (kind_) {
            case Kind::euclidean: return x.norm();
            case Kind::ellipsoidal: return std::sqrt(std::max(0.0, x.dot(inverse_ * x)));
            case Kind::lp: return lp_value(x, q_ / (q_ - 1.0));
            case Kind::custom: return custom_dual(x);
        }
        return 0.0;
    }

    /// ∇H°(x); throws std::domain_error at x = 0.
    Vec dual_gradient(const Vec& x) const {
        check_dim(x);
        const double len = x.norm();
        if (len == 0.0) throw std::domain_error("FinslerNorm::dual_gradient: H° is not differentiable at 0");
        switch (kind_) {
            case Kind::euclidean: return x / len;
            case Kind::ellipsoidal: {
                Vec ax = inverse_ * x;
                return ax / std::sqrt(x.dot(ax));
            }
            case Kind::lp: return lp(q_ / (q_ - 1.0), dim_).gradient(x);
            case Kind::custom: {
                FinslerNorm self = *this;
                return central_gradient([&self](const Vec& y) { return self.custom_dual(y); }, x, 1e-5 * len);
            }
        }
        return {};
    }

    /// H° packaged as a norm in its own right, so that (H°)° can be evaluated.
    FinslerNorm dual_norm() const {
        switch (kind_) {
            case Kind::euclidean: return euclidean(dim_);
            case Kind::ellipsoidal: return ellipsoidal(inverse_);
            case Kind::lp: return lp(q_ / (q_ - 1.0), dim_);
            case Kind::custom: {
                FinslerNorm self = *this;
                return custom([self](const Vec& x) { return self.custom_dual(x); }, dim_, label_ + "_dual");
            }
        }
        return *this;
    }

private:
    FinslerNorm(Kind kind, int dim) : kind_(kind), dim_(dim) {}

    static double sign(double v) { return (v > 0.0) - (v < 0.0); }

    static double lp_value(const Vec& x, double q) {
        const double scale = x.cwiseAbs().maxCoeff();
        if (scale == 0.0) return 0.0;
        double s = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) s += std::pow(std::abs(x(i)) / scale, q);
        return scale * std::pow(s, 1.0 / q);
    }

    template <class F>
    static Vec central_gradient(const F& f, const Vec& x, double step) {
        Vec g(x.size());
        Vec y = x;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            y(i) = x(i) + step;
            const double fp = f(y);
            y(i) = x(i) - step;
            const double fm = f(y);
            y(i) = x(i);
            g(i) = (fp - fm) / (2.0 * step);
        }
        return g;
    }

    template <class F>
    static Mat central_hessian(const F& f, const Vec& x, double step) {
        const Eigen::Index n = x.size();
        Mat hess(n, n);
        Vec y = x;
        const double f0 = f(x);
        for (Eigen::Index i = 0; i < n; ++i) {
            y(i) = x(i) + step;
            const double fp = f(y);
            y(i) = x(i) - step;
            const double fm = f(y);
            y(i) = x(i);
            hess(i, i) = (fp - 2.0 * f0 + fm) / (step * step);
            for (Eigen::Index j = 0; j < i; ++j) {
                double acc = 0.0;
                for (int si : {1, -1})
                    for (int sj : {1, -1}) {
                        y(i) = x(i) + si * step;
                        y(j) = x(j) + sj * step;
                        acc += si * sj * f(y);
                    }
                y(i) = x(i);
                y(j) = x(j);
                hess(i, j) = hess(j, i) = acc / (4.0 * step * step);
            }
        }
        return hess;
    }

    // Angular scan over the primal unit sphere followed by golden-section
    // refinement of the best bracket.
    double custom_dual(const Vec& x) const {
        if (dim_ != 2)
            throw std::invalid_argument("FinslerNorm::dual: custom norms support the dual only for n = 2");
        const double len = x.norm();
        if (len == 0.0) return 0.0;
        const Function& h = *fn_;
        auto support = [&](double theta) {
            Vec d = unit_direction(theta);
            return d.dot(x) / h(d);
        };
        constexpr int scan = 4096;
        const double dtheta = 2.0 * pi / scan;
        int best = 0;
        double best_val = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < scan; ++j) {
            const double v = support(j * dtheta);
            if (v > best_val) {
                best_val = v;
                best = j;
            }
        }
        double a = (best - 1) * dtheta;
        double b = (best + 1) * dtheta;
        const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
        double c = b - ratio * (b - a);
        double d = a + ratio * (b - a);
        double fc = support(c);
        double fd = support(d);
        for (int it = 0; it < 50; ++it) {
            if (fc > fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = support(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = support(d);
            }
        }
        const double refined = std::max({fc, fd, best_val});
        if (!std::isfinite(refined) || refined <= 0.0)
            throw NumericError("FinslerNorm::dual: maximizer did not converge", refined - best_val);
        return refined;
    }

    void check_dim(const Vec& v) const {
        if (v.size() != dim_) {
            throw std::invalid_argument("FinslerNorm: vector of dimension " + std::to_string(v.size()) +
                                        " passed to a norm on R^" + std::to_string(dim_));
        }
    }

    Kind kind_;
    int dim_;
    Mat matrix_;
    Mat inverse_;
    double q_ = 2.0;
    std::shared_ptr<const Function> fn_;
    std::string label_;
};

/// Max over samples of |H(∇H°(x)) − 1| and |H°(∇H(x)) − 1|.
inline double verify_duality_identities(const FinslerNorm& h, std::span<const Vec> samples) {
    double worst = 0.0;
    for (const Vec& x : samples) {
        if (x.norm() == 0.0) throw std::invalid_argument("verify_duality_identities: samples must be nonzero");
        worst = std::max(worst, std::abs(h(h.dual_gradient(x)) - 1.0));
        worst = std::max(worst, std::abs(h.dual(h.gradient(x)) - 1.0));
    }
    return worst;
}

/// Constants λ1, λ2 with λ1|ξ| <= H(ξ) <= λ2|ξ|, estimated on the unit sphere.
struct EquivalenceConstants {
    double lower;
    double upper;
};

inline EquivalenceConstants equivalence_constants(const FinslerNorm& h, int samples = 4096) {
    EquivalenceConstants c{std::numeric_limits<double>::infinity(), 0.0};
    for (const Vec& d : sphere_directions(h.dim(), samples)) {
        const double v = h(d);
        c.lower = std::min(c.lower, v);
        c.upper = std::max(c.upper, v);
    }
    return c;
}

/// Smallest tangential curvature of ∂B^H_1:
/// min over sampled ξ with H(ξ) = 1 and unit v ⟂ ∇H(ξ) of <D²H(ξ) v, v>.
/// Positive means uniformly elliptic at the sample resolution; it does not
/// certify positivity between samples.
inline double ellipticity_constant(const FinslerNorm& h, int samples = 4096) {
    if (h.dim() != 2 && !h.closed_form())
        throw std::invalid_argument("ellipticity_constant: custom norms are supported only for n = 2");
    double lambda = std::numeric_limits<double>::infinity();
    for (const Vec& d : sphere_directions(h.dim(), samples)) {
        const Vec xi = d / h(d);
        const Vec g = h.gradient(xi);
        const Mat hess = h.hessian(xi);
        double curvature = 0.0;
        if (h.dim() == 2) {
            Vec v(2);
            v << -g(1), g(0);
            v.normalize();
            curvature = v.dot(hess * v);
        } else {
            const Mat column = g;
            Eigen::HouseholderQR<Mat> qr(column);
            Mat q = qr.householderQ();
            Mat tangent = q.rightCols(h.dim() - 1);
            Mat restricted = tangent.transpose() * hess * tangent;
            Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (restricted + restricted.transpose()));
            curvature = eig.eigenvalues().minCoeff();
        }
        lambda = std::min(lambda, curvature);
    }
    return lambda;
}

/// Which norm's sublevel set a shape describes: B^H_r or B^{H°}_r.
enum class NormSide { primal, dual };

/// Boundary of a Frank diagram (side = primal) or Wulff shape (side = dual) in R^2.
struct WulffShape {
    Vec2 center = Vec2::Zero();
    double radius = 1.0;
    NormSide side = NormSide::dual;
    std::vector<double> thetas;
    std::vector<Vec2> boundary;

    /// Constant turning direction of the boundary polyline.
    bool is_convex() const {
        const std::size_t m = boundary.size();
        if (m < 3) return false;
        int sign = 0;
        for (std::size_t i = 0; i < m; ++i) {
            const Vec2 a = boundary[(i + 1) % m] - boundary[i];
            const Vec2 b = boundary[(i + 2) % m] - boundary[(i + 1) % m];
            const double cross = a.x() * b.y() - a.y() * b.x();
            const int s = (cross > 0.0) - (cross < 0.0);
            if (s == 0) continue;
            if (sign == 0) sign = s;
            if (s != sign) return false;
        }
        return sign != 0;
    }
};

/// m boundary points of B^{H°}_r(center) (or B^H_r) at angles 2πj/m, each
/// located by bisection along its ray.
inline WulffShape wulff_boundary(const FinslerNorm& h, const Vec2& center, double radius, int m,
                                 NormSide side = NormSide::dual) {
    if (h.dim() != 2) throw std::invalid_argument("wulff_boundary: only n = 2 is supported");
    if (!(radius > 0.0)) throw std::invalid_argument("wulff_boundary: radius must be positive");
    if (m < 4) throw std::invalid_argument("wulff_boundary: need at least 4 samples");
    auto gauge = [&](const Vec& x) { return side == NormSide::dual ? h.dual(x) : h(x); };

    WulffShape shape;
    shape.center = center;
    shape.radius = radius;
    shape.side = side;
    shape.thetas.reserve(static_cast<std::size_t>(m));
    shape.boundary.reserve(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        const double theta = 2.0 * pi * j / m;
        const Vec dir = unit_direction(theta);
        double lo = 0.0;
        double hi = 1.0;
        int expansions = 0;
        while (gauge(hi * dir) < radius) {
            hi *= 2.0;
            if (++expansions > 200) throw NumericError("wulff_boundary: bracket not found", gauge(hi * dir) - radius);
        }
        for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (gauge(mid * dir) < radius ? lo : hi) = mid;
        }
        const double t = 0.5 * (lo + hi);
        const double residual = std::abs(gauge(t * dir) - radius);
        if (residual > tol_shape * std::max(1.0, radius))
            throw NumericError("wulff_boundary: bisection residual above tolerance", residual);
        shape.thetas.push_back(theta);
        shape.boundary.push_back(center + t * to_vec2(dir));
    }
    return shape;
}

}  // namespace aniso
