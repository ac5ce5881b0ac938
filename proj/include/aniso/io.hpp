#pragma once

// CSV and JSON export of fields, profiles, shapes and reports. JSON readers
// are strict: unknown or missing keys raise std::invalid_argument.

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aniso/finsler.hpp"
#include "aniso/material.hpp"
#include "aniso/mesh.hpp"
#include "aniso/radial.hpp"
#include "aniso/recovery.hpp"
#include "aniso/solver2d.hpp"
#include "aniso/verify.hpp"

namespace aniso {

using json = nlohmann::json;

/// Shortest round-trip text for a double (17 significant digits).
inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(std::ostream& os, std::initializer_list<const char*> header) : os_(os), columns_(header.size()) {
        bool first = true;
        for (const char* h : header) {
            os_ << (first ? "" : ",") << h;
            first = false;
        }
        os_ << '\n';
    }

    void row(std::initializer_list<double> values) {
        if (values.size() != columns_) throw std::invalid_argument("CsvWriter: row width does not match header");
        bool first = true;
        for (double v : values) {
            os_ << (first ? "" : ",") << format_number(v);
            first = false;
        }
        os_ << '\n';
    }

private:
    std::ostream& os_;
    std::size_t columns_;
};

inline void write_shape_csv(std::ostream& os, const WulffShape& shape) {
    CsvWriter csv(os, {"theta", "x", "y"});
    for (std::size_t j = 0; j < shape.boundary.size(); ++j)
        csv.row({shape.thetas[j], shape.boundary[j].x(), shape.boundary[j].y()});
}

/// Nodal values with area-weighted recovered gradients.
inline void write_field_csv(std::ostream& os, const ScalarField& u) {
    const auto grads = nodal_gradient(u);
    CsvWriter csv(os, {"x", "y", "u", "ux", "uy"});
    for (std::size_t v = 0; v < u.mesh->num_vertices(); ++v) {
        const Vec2& x = u.mesh->vertices[v];
        csv.row({x.x(), x.y(), u.values(static_cast<Eigen::Index>(v)), grads[v].x(), grads[v].y()});
    }
}

inline void write_profile_csv(std::ostream& os, const BarrierProfile& profile) {
    CsvWriter csv(os, {"rho", "w", "w_prime"});
    for (std::size_t i = 0; i < profile.grid.size(); ++i) csv.row({profile.grid[i], profile.w[i], profile.w_prime[i]});
}

inline void write_study_csv(std::ostream& os, const RegularityReport& report) {
    CsvWriter csv(os, {"h", "hessian_integral", "weight_integral", "critical_fraction"});
    for (const auto& r : report.per_refinement) csv.row({r.h, r.hessian_integral, r.weight_integral, r.critical_fraction});
}

/// Writes text to path, throwing std::runtime_error on I/O failure.
inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write to " + path + " failed");
}

namespace detail {

inline void require_keys(const json& j, std::initializer_list<const char*> keys, const std::string& what) {
    if (!j.is_object()) throw std::invalid_argument(what + ": expected an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) throw std::invalid_argument(what + ": unknown key '" + key + "'");
    for (const char* key : keys)
        if (!j.contains(key)) throw std::invalid_argument(what + ": missing key '" + std::string(key) + "'");
}

inline double number(const json& j, const char* key, const std::string& what) {
    const json& v = j.at(key);
    if (!v.is_number()) throw std::invalid_argument(what + ": '" + key + "' must be a number");
    return v.get<double>();
}

inline SourceAdmissibility parse_admissibility(const std::string& s) {
    for (auto a : {SourceAdmissibility::g_zero_near_0, SourceAdmissibility::osserman_checked,
                   SourceAdmissibility::unchecked})
        if (s == to_string(a)) return a;
    throw std::invalid_argument("unknown osserman verdict '" + s + "'");
}

}  // namespace detail

inline json to_json(const SolveReport& r) {
    return {{"iterations", r.iterations},         {"gradient_steps", r.gradient_steps},
            {"energy_history", r.energy_history}, {"final_residual", r.final_residual},
            {"min_u", r.min_u},                   {"critical_fraction", r.critical_fraction},
            {"converged", r.converged}};
}

inline SolveReport solve_report_from_json(const json& j) {
    const std::string what = "SolveReport";
    detail::require_keys(j,
                         {"iterations", "gradient_steps", "energy_history", "final_residual", "min_u",
                          "critical_fraction", "converged"},
                         what);
    SolveReport r;
    r.iterations = j.at("iterations").get<int>();
    r.gradient_steps = j.at("gradient_steps").get<int>();
    r.energy_history = j.at("energy_history").get<std::vector<double>>();
    r.final_residual = detail::number(j, "final_residual", what);
    r.min_u = detail::number(j, "min_u", what);
    r.critical_fraction = detail::number(j, "critical_fraction", what);
    r.converged = j.at("converged").get<bool>();
    return r;
}

inline json to_json(const AdmissibilityReport& r) {
    return {{"profile", r.profile}, {"norm", r.norm},       {"C1_est", r.C1_est},
            {"C2_est", r.C2_est},   {"C_flux", r.C_flux},   {"C_monotone", r.C_monotone},
            {"osserman_verdict", to_string(r.osserman_verdict)}};
}

inline AdmissibilityReport admissibility_report_from_json(const json& j) {
    const std::string what = "AdmissibilityReport";
    detail::require_keys(j, {"profile", "norm", "C1_est", "C2_est", "C_flux", "C_monotone", "osserman_verdict"}, what);
    AdmissibilityReport r;
    r.profile = j.at("profile").get<std::string>();
    r.norm = j.at("norm").get<std::string>();
    r.C1_est = detail::number(j, "C1_est", what);
    r.C2_est = detail::number(j, "C2_est", what);
    r.C_flux = detail::number(j, "C_flux", what);
    r.C_monotone = detail::number(j, "C_monotone", what);
    r.osserman_verdict = detail::parse_admissibility(j.at("osserman_verdict").get<std::string>());
    return r;
}

inline json to_json(const RegularityReport& r) {
    json rows = json::array();
    for (const auto& row : r.per_refinement)
        rows.push_back({{"h", row.h},
                        {"hessian_integral", row.hessian_integral},
                        {"weight_integral", row.weight_integral},
                        {"critical_fraction", row.critical_fraction}});
    json sob = json::array();
    for (const auto& e : r.sobolev) sob.push_back({{"q", e.q}, {"integral", e.integral}, {"covered", e.covered}});
    return {{"beta", r.beta},
            {"gamma", r.gamma},
            {"t", r.t},
            {"hessian_integral_sup", r.hessian_integral_sup},
            {"weight_integral_sup", r.weight_integral_sup},
            {"per_refinement", rows},
            {"critical_fraction", r.critical_fraction},
            {"sobolev", sob}};
}

inline RegularityReport regularity_report_from_json(const json& j) {
    const std::string what = "RegularityReport";
    detail::require_keys(j,
                         {"beta", "gamma", "t", "hessian_integral_sup", "weight_integral_sup", "per_refinement",
                          "critical_fraction", "sobolev"},
                         what);
    RegularityReport r;
    r.beta = detail::number(j, "beta", what);
    r.gamma = detail::number(j, "gamma", what);
    r.t = detail::number(j, "t", what);
    r.hessian_integral_sup = detail::number(j, "hessian_integral_sup", what);
    r.weight_integral_sup = detail::number(j, "weight_integral_sup", what);
    r.critical_fraction = detail::number(j, "critical_fraction", what);
    for (const json& row : j.at("per_refinement")) {
        detail::require_keys(row, {"h", "hessian_integral", "weight_integral", "critical_fraction"}, what + ".per_refinement");
        r.per_refinement.push_back({detail::number(row, "h", what), detail::number(row, "hessian_integral", what),
                                    detail::number(row, "weight_integral", what),
                                    detail::number(row, "critical_fraction", what)});
    }
    for (const json& e : j.at("sobolev")) {
        detail::require_keys(e, {"q", "integral", "covered"}, what + ".sobolev");
        r.sobolev.push_back({detail::number(e, "q", what), detail::number(e, "integral", what), e.at("covered").get<bool>()});
    }
    return r;
}

inline json to_json(const HopfReport& r) {
    return {{"min_normal_derivative", r.min_normal_derivative},
            {"barrier_margin", r.barrier_margin},
            {"comparison_violation", r.comparison_violation},
            {"boundary_vertex", r.boundary_vertex},
            {"center", {r.center.x(), r.center.y()}},
            {"R", r.R},
            {"m", r.m},
            {"shoot_slope", r.shoot_slope},
            {"annulus_nodes", r.annulus_nodes},
            {"h", r.h}};
}

inline HopfReport hopf_report_from_json(const json& j) {
    const std::string what = "HopfReport";
    detail::require_keys(j,
                         {"min_normal_derivative", "barrier_margin", "comparison_violation", "boundary_vertex", "center",
                          "R", "m", "shoot_slope", "annulus_nodes", "h"},
                         what);
    HopfReport r;
    r.min_normal_derivative = detail::number(j, "min_normal_derivative", what);
    r.barrier_margin = detail::number(j, "barrier_margin", what);
    r.comparison_violation = detail::number(j, "comparison_violation", what);
    r.boundary_vertex = j.at("boundary_vertex").get<int>();
    const auto c = j.at("center").get<std::vector<double>>();
    if (c.size() != 2) throw std::invalid_argument(what + ": center must have two entries");
    r.center = Vec2(c[0], c[1]);
    r.R = detail::number(j, "R", what);
    r.m = detail::number(j, "m", what);
    r.shoot_slope = detail::number(j, "shoot_slope", what);
    r.annulus_nodes = j.at("annulus_nodes").get<int>();
    r.h = detail::number(j, "h", what);
    return r;
}

/// Pretty JSON text with a trailing newline.
inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace aniso
