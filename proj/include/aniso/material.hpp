#pragma once

// The scalar nonlinearity B, the source pair (f, g), and empirical
// estimates of the structural constants of the operator
// ξ ↦ B'(H(ξ)) ∇H(ξ).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "aniso/errors.hpp"
#include "aniso/finsler.hpp"
#include "aniso/linalg.hpp"

namespace aniso {

namespace detail {

/// Solve f(x) = y for x >= 0 with f continuous, strictly increasing, f(0) = 0.
/// The bracket is found geometrically, then bisected to machine precision.
template <class F>
double invert_increasing(const F& f, double y, const char* what) {
    if (y <= 0.0) return 0.0;
    double hi = 1.0;
    int steps = 0;
    while (f(hi) < y) {
        hi *= 2.0;
        if (++steps > 2100) throw NumericError(std::string(what) + ": bracket not found", y);
    }
    double lo = 0.5 * hi;
    while (lo > 0.0 && f(lo) >= y) {
        hi = lo;
        lo *= 0.5;
        if (++steps > 4200) break;
    }
    for (int it = 0; it < 200 && hi - lo > 2.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < y ? lo : hi) = mid;
    }
    const double x = 0.5 * (lo + hi);
    if (!std::isfinite(x)) throw NumericError(std::string(what) + ": inversion failed", y);
    return x;
}

}  // namespace detail

/// B together with its first two derivatives at a point.
struct BValues {
    double B;
    double dB;
    double d2B;
};

/// B(t) = t^p/p (power, k = 0) or B'(t) = (k + t)^{p-2} t (shifted).
/// Both satisfy γ(k+t)^{p-2} t <= B'(t) <= Γ(k+t)^{p-2} t with
/// γ = min(1, p-1), Γ = max(1, p-1).
class MaterialProfile {
public:
    enum class Kind { power, shifted };

    static MaterialProfile power(double p) { return MaterialProfile(Kind::power, p, 0.0); }
    static MaterialProfile shifted(double p, double k) { return MaterialProfile(Kind::shifted, p, k); }

    Kind kind() const noexcept { return kind_; }
    double p() const noexcept { return p_; }
    double k() const noexcept { return k_; }
    double gamma() const noexcept { return std::min(1.0, p_ - 1.0); }
    double Gamma() const noexcept { return std::max(1.0, p_ - 1.0); }

    std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        if (kind_ == Kind::power)
            os << "power(p=" << p_ << ")";
        else
            os << "shifted(p=" << p_ << ",k=" << k_ << ")";
        return os.str();
    }

    double B(double t) const {
        check_t(t);
        if (kind_ == Kind::power || k_ == 0.0) return std::pow(t, p_) / p_;
        if (t < 1e-6 * k_) {
            // Series of ∫_0^t (k+s)^{p-2} s ds; avoids cancellation.
            return std::pow(k_, p_ - 2.0) * (0.5 * t * t + (p_ - 2.0) * t * t * t / (3.0 * k_));
        }
        // (k+t)^a − k^a = k^a expm1(a log1p(t/k)) keeps each term accurate.
        const double r = std::log1p(t / k_);
        return std::pow(k_, p_) * std::expm1(p_ * r) / p_ -
               std::pow(k_, p_) * std::expm1((p_ - 1.0) * r) / (p_ - 1.0);
    }

    double dB(double t) const {
        check_t(t);
        if (t == 0.0) return 0.0;
        return std::pow(k_ + t, p_ - 2.0) * t;
    }

    /// B''(t) = (k+t)^{p-3} ((p-1)t + k). Throws std::domain_error at the
    /// singular point t = 0 when k = 0 and p < 2.
    double d2B(double t) const {
        check_t(t);
        if (t == 0.0) {
            if (k_ == 0.0) {
                if (p_ < 2.0) throw std::domain_error("B''(0) is infinite for p < 2, k = 0 (singular operator)");
                return p_ == 2.0 ? 1.0 : 0.0;
            }
            return std::pow(k_, p_ - 2.0);
        }
        return std::pow(k_ + t, p_ - 3.0) * ((p_ - 1.0) * t + k_);
    }

    BValues eval(double t) const {
        const bool singular = t == 0.0 && k_ == 0.0 && p_ < 2.0;
        return {B(t), dB(t), singular ? std::numeric_limits<double>::infinity() : d2B(t)};
    }

    /// Ellipticity weight (k + t)^{p-2}.
    double weight(double t) const { return std::pow(k_ + t, p_ - 2.0); }

    /// L(s) = s B'(s) − B(s); nonnegative and increasing since L'(s) = s B''(s).
    double L(double s) const { return s * dB(s) - B(s); }

    double L_inverse(double y) const {
        return detail::invert_increasing([this](double s) { return L(s); }, y, "L^{-1}");
    }

    /// Φ(t) = B'(|t|) sign(t).
    double phi(double t) const {
        const double v = dB(std::abs(t));
        return t < 0.0 ? -v : v;
    }

    double phi_inverse(double y) const {
        const double a = std::abs(y);
        double t = 0.0;
        if (kind_ == Kind::power || k_ == 0.0)
            t = std::pow(a, 1.0 / (p_ - 1.0));
        else
            t = detail::invert_increasing([this](double s) { return dB(s); }, a, "Φ^{-1}");
        return y < 0.0 ? -t : t;
    }

private:
    MaterialProfile(Kind kind, double p, double k) : kind_(kind), p_(p), k_(k) {
        if (!(p > 1.0) || !std::isfinite(p)) {
            std::ostringstream os;
            os << "hypothesis (iii) violated: there exist p>1 and k in [0,1]; got p=" << p;
            throw AdmissibilityError("(iii)", os.str());
        }
        if (!(k >= 0.0 && k <= 1.0)) {
            std::ostringstream os;
            os << "hypothesis (iii) violated: k must lie in [0,1]; got k=" << k;
            throw AdmissibilityError("(iii)", os.str());
        }
    }

    static void check_t(double t) {
        if (!(t >= 0.0)) throw std::domain_error("MaterialProfile: argument must be >= 0");
    }

    Kind kind_;
    double p_;
    double k_;
};

/// constant + coef * s^exponent, with exponent >= 0.
struct ScalarLaw {
    double constant = 0.0;
    double coef = 0.0;
    double exponent = 1.0;

    double operator()(double s) const {
        if (coef == 0.0) return constant;
        return constant + coef * std::pow(s, exponent);
    }

    double antiderivative(double s) const {
        return constant * s + (coef == 0.0 ? 0.0 : coef * std::pow(s, exponent + 1.0) / (exponent + 1.0));
    }

    bool identically_zero() const { return constant == 0.0 && coef == 0.0; }
};

enum class SourceAdmissibility { g_zero_near_0, osserman_checked, unchecked };

inline const char* to_string(SourceAdmissibility a) {
    switch (a) {
        case SourceAdmissibility::g_zero_near_0: return "g_zero_near_0";
        case SourceAdmissibility::osserman_checked: return "osserman_checked";
        case SourceAdmissibility::unchecked: return "unchecked";
    }
    return "unchecked";
}

/// Composite Simpson rule on [a, b] with an even number of panels.
template <class F>
double simpson(const F& f, double a, double b, int panels) {
    if (panels % 2) ++panels;
    const double h = (b - a) / panels;
    double acc = f(a) + f(b);
    for (int i = 1; i < panels; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return acc * h / 3.0;
}

/// The right-hand side f of the equation and the comparison term g.
struct SourceTerm {
    using Fn = std::function<double(double)>;

    Fn f;
    Fn F;  // antiderivative of f with F(0) = 0
    Fn g;
    SourceAdmissibility admissibility = SourceAdmissibility::unchecked;

    static SourceTerm from_laws(const ScalarLaw& f_law, const ScalarLaw& g_law) {
        if (f_law.exponent < 0.0 || g_law.exponent < 0.0)
            throw std::invalid_argument("SourceTerm: exponents must be >= 0");
        SourceTerm s;
        s.f = f_law;
        s.F = [f_law](double u) { return f_law.antiderivative(u); };
        s.g = g_law;
        if (g_law.identically_zero()) s.admissibility = SourceAdmissibility::g_zero_near_0;
        return s;
    }

    static SourceTerm constant(double value) { return from_laws({value, 0.0, 1.0}, {}); }

    /// Generic callables; F is integrated numerically.
    static SourceTerm make(Fn f_fn, Fn g_fn) {
        SourceTerm s;
        s.f = f_fn;
        s.F = [f_fn](double u) {
            if (u == 0.0) return 0.0;
            return simpson(f_fn, 0.0, u, 64);
        };
        s.g = g_fn ? std::move(g_fn) : Fn([](double) { return 0.0; });
        return s;
    }

    /// Sampled checks of f > 0, g(0) = 0 and f + g >= 0 on [0, s_max].
    void validate(double s_max = 10.0, int samples = 1001) const {
        if (g(0.0) != 0.0) throw AdmissibilityError("(viii)", "hypothesis (viii) violated: g(0) must be 0");
        for (int i = 0; i < samples; ++i) {
            const double s = s_max * i / (samples - 1);
            const double fs = f(s);
            if (!(fs > 0.0)) {
                std::ostringstream os;
                os << "hypothesis (vii) violated: f must be positive; f(" << s << ")=" << fs;
                throw AdmissibilityError("(vii)", os.str());
            }
            if (!(fs + g(s) >= 0.0)) {
                std::ostringstream os;
                os << "hypothesis (viii) violated: f+g must be nonnegative at s=" << s;
                throw AdmissibilityError("(viii)", os.str());
            }
        }
    }
};

struct OssermanResult {
    SourceAdmissibility verdict = SourceAdmissibility::unchecked;
    /// Detected d with g = 0 on [0, d] (g_zero_near_0 only).
    double zero_interval = 0.0;
    /// Contributions of the dyadic shells [δ/2^j, δ/2^{j-1}] to ∫ ds / L^{-1}(G(s)).
    std::vector<double> increments;
};

/// Classifies g against the alternatives of hypothesis (viii).
///
/// G(s) = ∫_0^s g. Divergence of ∫_0^δ ds / L^{-1}(G(s)) is judged from 20
/// dyadic shells: the integral is declared divergent when the last shells
/// keep contributing at least a quarter of the largest shell. This is a
/// heuristic; `unchecked` means "not shown divergent".
inline OssermanResult check_osserman(const SourceTerm& source, const MaterialProfile& m, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("check_osserman: delta must be positive");
    OssermanResult result;

    constexpr int zero_grid = 256;
    double d = 0.0;
    for (int j = 1; j <= zero_grid; ++j) {
        const double s = delta * j / zero_grid;
        if (source.g(s) != 0.0) break;
        d = s;
    }
    if (d > 0.0) {
        result.verdict = SourceAdmissibility::g_zero_near_0;
        result.zero_interval = d;
        return result;
    }

    auto G = [&](double s) { return simpson(source.g, 0.0, s, 128); };
    auto integrand = [&](double s) {
        const double denom = m.L_inverse(G(s));
        return denom > 0.0 ? 1.0 / denom : std::numeric_limits<double>::infinity();
    };
    constexpr int levels = 20;
    double hi = delta;
    for (int j = 1; j <= levels; ++j) {
        const double lo = 0.5 * hi;
        result.increments.push_back(simpson(integrand, lo, hi, 16));
        hi = lo;
    }
    const double largest = *std::max_element(result.increments.begin(), result.increments.end());
    bool divergent = std::isinf(largest);
    if (!divergent) {
        divergent = true;
        for (int j = levels - 5; j < levels; ++j)
            if (result.increments[j] < 0.25 * largest) divergent = false;
    }
    result.verdict = divergent ? SourceAdmissibility::osserman_checked : SourceAdmissibility::unchecked;
    return result;
}

/// a(ξ) = B'(H(ξ)) ∇H(ξ), extended by 0 at ξ = 0.
inline Vec flux(const MaterialProfile& m, const FinslerNorm& h, const Vec& xi) {
    if (xi.norm() == 0.0) return Vec::Zero(xi.size());
    return m.dB(h(xi)) * h.gradient(xi);
}

/// Linearized coefficient B''(H) ∇H ⊗ ∇H + B'(H) D²H at ξ ≠ 0.
inline Mat tangent_matrix(const MaterialProfile& m, const FinslerNorm& h, const Vec& xi) {
    const double hv = h(xi);
    const Vec g = h.gradient(xi);
    return m.d2B(hv) * outer(g, g) + m.dB(hv) * h.hessian(xi);
}

struct StructuralBounds {
    double C1;  // min <M v, v> / ((k+|ξ|)^{p-2} |v|^2)
    double C2;  // max |M| / (k+|ξ|)^{p-2}
    std::size_t worst_sample;
};

inline StructuralBounds check_structural_bounds(const MaterialProfile& m, const FinslerNorm& h,
                                                std::span<const std::pair<Vec, Vec>> samples) {
    if (samples.empty()) throw std::invalid_argument("check_structural_bounds: no samples");
    StructuralBounds out{std::numeric_limits<double>::infinity(), 0.0, 0};
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& [xi, v] = samples[i];
        if (xi.norm() == 0.0) throw std::invalid_argument("check_structural_bounds: ξ must be nonzero");
        const Mat coeff = tangent_matrix(m, h, xi);
        const double w = m.weight(xi.norm());
        const double lower = v.dot(coeff * v) / (w * v.squaredNorm());
        if (lower < out.C1) {
            out.C1 = lower;
            out.worst_sample = i;
        }
        out.C2 = std::max(out.C2, frobenius(coeff) / w);
    }
    if (!(out.C1 > 0.0) || !std::isfinite(out.C2)) {
        std::ostringstream os;
        os << "structural lower bound fails for " << m.describe() << " with " << h.describe() << " at sample "
           << out.worst_sample << " (C1=" << out.C1 << ")";
        throw AdmissibilityError("(iii)+(vi)", os.str());
    }
    return out;
}

/// max B'(H(ξ)) / (k+|ξ|)^{p-1}.
inline double check_flux_bound(const MaterialProfile& m, const FinslerNorm& h, std::span<const Vec> samples) {
    if (samples.empty()) throw std::invalid_argument("check_flux_bound: no samples");
    double c = 0.0;
    for (const Vec& xi : samples) {
        const double r = xi.norm();
        c = std::max(c, m.dB(h(xi)) / std::pow(m.k() + r, m.p() - 1.0));
    }
    return c;
}

/// min <a(x) − a(y), x − y> / ((|x|+|y|)^{p-2} |x−y|^2).
inline double check_flux_monotonicity(const MaterialProfile& m, const FinslerNorm& h,
                                      std::span<const std::pair<Vec, Vec>> pairs) {
    if (pairs.empty()) throw std::invalid_argument("check_flux_monotonicity: no pairs");
    double c = std::numeric_limits<double>::infinity();
    std::size_t worst = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& [x, y] = pairs[i];
        const Vec diff = x - y;
        const double gap = diff.squaredNorm();
        if (gap == 0.0) throw std::invalid_argument("check_flux_monotonicity: pairs must have x != y");
        const double ratio = (flux(m, h, x) - flux(m, h, y)).dot(diff) /
                             (std::pow(x.norm() + y.norm(), m.p() - 2.0) * gap);
        if (ratio < c) {
            c = ratio;
            worst = i;
        }
    }
    if (!(c > 0.0)) {
        std::ostringstream os;
        os << "flux monotonicity fails for " << m.describe() << " with " << h.describe() << " at pair " << worst;
        throw AdmissibilityError("(iii)+(vi)", os.str());
    }
    return c;
}

/// Everything the `verify` command reports about a (B, H, f, g) triple.
struct AdmissibilityReport {
    std::string profile;
    std::string norm;
    double C1_est = 0.0;
    double C2_est = 0.0;
    double C_flux = 0.0;
    double C_monotone = 0.0;
    SourceAdmissibility osserman_verdict = SourceAdmissibility::unchecked;
};

inline AdmissibilityReport assess(const MaterialProfile& m, const FinslerNorm& h, const SourceTerm& s,
                                  int samples = 10000, std::uint64_t seed = 0, double delta = 1.0) {
    AdmissibilityReport r;
    r.profile = m.describe();
    r.norm = h.describe();
    const auto vp = sample_vector_pairs(h.dim(), samples, seed);
    const auto bounds = check_structural_bounds(m, h, vp);
    r.C1_est = bounds.C1;
    r.C2_est = bounds.C2;
    r.C_flux = check_flux_bound(m, h, sample_vectors(h.dim(), samples, seed + 1));
    r.C_monotone = check_flux_monotonicity(m, h, sample_point_pairs(h.dim(), samples, seed + 2));
    r.osserman_verdict = check_osserman(s, m, delta).verdict;
    return r;
}

}  // namespace aniso
