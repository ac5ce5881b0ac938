#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

namespace aniso {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double pi = std::numbers::pi;

/// (a ⊗ b)_ij = a_i b_j, so that <(a ⊗ b) v, w> = <b, v> <a, w>.
inline Mat outer(const Vec& a, const Vec& b) { return a * b.transpose(); }

/// Frobenius norm |A| = sqrt(sum A_ij^2).
inline double frobenius(const Mat& a) { return a.norm(); }

inline Vec unit_direction(double theta) {
    Vec d(2);
    d << std::cos(theta), std::sin(theta);
    return d;
}

inline Vec2 to_vec2(const Vec& v) { return {v(0), v(1)}; }

inline Vec from_vec2(const Vec2& v) {
    Vec out(2);
    out << v.x(), v.y();
    return out;
}

}  // namespace aniso
