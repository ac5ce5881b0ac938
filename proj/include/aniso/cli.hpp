#pragma once

// The `aniso` command-line driver: solve, barrier, wulff, verify and
// regularity over one shared JSON configuration.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "aniso/config.hpp"
#include "aniso/errors.hpp"
#include "aniso/io.hpp"
#include "aniso/radial.hpp"
#include "aniso/sampling.hpp"
#include "aniso/solver2d.hpp"
#include "aniso/verify.hpp"

namespace aniso {

enum class ExitCode : int { ok = 0, rejected = 1, numeric_failure = 2 };

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t hash = 14695981039346656037ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct Artifact {
    std::string file;
    bool partial = false;
};

struct Manifest {
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    /// ok, rejected or numeric_failure.
    std::string status = "ok";
    std::string diagnostic;
    nlohmann::json verdicts = nlohmann::json::object();
    std::vector<Artifact> artifacts;
};

inline nlohmann::json to_json(const Manifest& m) {
    nlohmann::json arts = nlohmann::json::array();
    for (const auto& a : m.artifacts) arts.push_back({{"file", a.file}, {"partial", a.partial}});
    return {{"command", m.command}, {"config_hash", m.config_hash}, {"seed", m.seed},       {"status", m.status},
            {"diagnostic", m.diagnostic}, {"verdicts", m.verdicts}, {"artifacts", arts}};
}

inline Manifest manifest_from_json(const nlohmann::json& j) {
    const std::string what = "Manifest";
    detail::require_keys(j, {"command", "config_hash", "seed", "status", "diagnostic", "verdicts", "artifacts"}, what);
    Manifest m;
    m.command = j.at("command").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.status = j.at("status").get<std::string>();
    m.diagnostic = j.at("diagnostic").get<std::string>();
    m.verdicts = j.at("verdicts");
    if (!m.verdicts.is_object()) throw std::invalid_argument(what + ": verdicts must be an object");
    for (const auto& a : j.at("artifacts")) {
        detail::require_keys(a, {"file", "partial"}, what + ".artifacts");
        m.artifacts.push_back({a.at("file").get<std::string>(), a.at("partial").get<bool>()});
    }
    return m;
}

inline nlohmann::json to_json(const Verdicts& v) {
    return {{"material", v.material},
            {"norm", v.norm},
            {"ellipticity", v.ellipticity},
            {"source", v.source},
            {"osserman", to_string(v.osserman)}};
}

/// Results of the finsler_core and material invariant checks run by `verify`.
struct InvariantReport {
    double duality_residual = 0.0;
    double homogeneity_residual = 0.0;
    double evenness_residual = 0.0;
    double euler_residual = 0.0;
    double biduality_residual = 0.0;
    double ellipticity = 0.0;
    double growth_ratio_min = 0.0;
    double growth_ratio_max = 0.0;
    bool L_increasing = true;
    bool passed = true;
};

inline nlohmann::json to_json(const InvariantReport& r) {
    return {{"duality_residual", r.duality_residual},
            {"homogeneity_residual", r.homogeneity_residual},
            {"evenness_residual", r.evenness_residual},
            {"euler_residual", r.euler_residual},
            {"biduality_residual", r.biduality_residual},
            {"ellipticity", r.ellipticity},
            {"growth_ratio_min", r.growth_ratio_min},
            {"growth_ratio_max", r.growth_ratio_max},
            {"L_increasing", r.L_increasing},
            {"passed", r.passed}};
}

inline InvariantReport run_invariants(const FinslerNorm& h, const MaterialProfile& m, std::uint64_t seed) {
    InvariantReport r;
    const auto xs = sample_vectors(h.dim(), 200, seed + 3);
    std::mt19937_64 rng(seed + 4);
    std::uniform_real_distribution<double> scale(1e-3, 10.0);
    for (const Vec& x : xs) {
        const double hx = h(x);
        const double t = scale(rng);
        r.homogeneity_residual = std::max(r.homogeneity_residual, std::abs(h(t * x) - t * hx) / (1.0 + hx));
        r.evenness_residual = std::max(r.evenness_residual, std::abs(h(Vec(-x)) - hx));
        r.euler_residual = std::max(r.euler_residual, std::abs(h.gradient(x).dot(x) - hx));
        r.biduality_residual = std::max(r.biduality_residual, std::abs(h.dual_norm().dual(x) - hx) / (1.0 + hx));
    }
    r.duality_residual = verify_duality_identities(h, std::vector<Vec>(xs.begin(), xs.begin() + 100));
    r.ellipticity = ellipticity_constant(h);
    r.growth_ratio_min = std::numeric_limits<double>::infinity();
    double previous_L = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const double t = std::pow(10.0, -3.0 + 4.0 * i / 200.0);
        const double ratio = m.dB(t) / (std::pow(m.k() + t, m.p() - 2.0) * t);
        r.growth_ratio_min = std::min(r.growth_ratio_min, ratio);
        r.growth_ratio_max = std::max(r.growth_ratio_max, ratio);
        const double L = m.L(t);
        if (i > 0 && !(L > previous_L)) r.L_increasing = false;
        previous_L = L;
    }
    const double tol_closed = h.closed_form() ? 1e-10 : tol_dual;
    r.passed = r.duality_residual <= 1e-6 && r.homogeneity_residual <= 1e-12 && r.evenness_residual <= 1e-12 &&
               r.euler_residual <= 1e-8 && r.biduality_residual <= tol_closed && r.ellipticity > 0.0 &&
               r.growth_ratio_min >= m.gamma() - 1e-12 && r.growth_ratio_max <= m.Gamma() + 1e-12 && r.L_increasing;
    return r;
}

struct CliOptions {
    std::string command;
    std::string config_path;
    std::string out_dir = "out";
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
};

namespace detail {

inline std::string one_line(std::string s) {
    for (char& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    return s;
}

class RunContext {
public:
    RunContext(const CliOptions& opts) : opts_(opts), dir_(opts.out_dir) { manifest_.command = opts.command; }

    void prepare_output() { std::filesystem::create_directories(dir_); }

    void adopt(const RunConfig& cfg) {
        manifest_.config_hash = "fnv1a64:" + hex64(fnv1a(cfg.document.dump()));
        manifest_.seed = cfg.seed;
        manifest_.verdicts = to_json(cfg.verdicts);
    }

    void emit(const std::string& name, const std::string& text, bool partial = false) {
        write_file((dir_ / name).string(), text);
        for (auto& a : manifest_.artifacts) {
            if (a.file == name) {
                a.partial = partial;
                return;
            }
        }
        manifest_.artifacts.push_back({name, partial});
    }

    void mark_partial() {
        for (auto& a : manifest_.artifacts) a.partial = true;
    }

    Manifest& manifest() { return manifest_; }

    void finish() {
        if (std::filesystem::is_directory(dir_)) write_file((dir_ / "manifest.json").string(), dump(to_json(manifest_)));
    }

private:
    CliOptions opts_;
    std::filesystem::path dir_;
    Manifest manifest_;
};

template <class F>
std::string render(F&& writer) {
    std::ostringstream os;
    writer(os);
    return os.str();
}

inline void command_solve(const RunConfig& cfg, RunContext& ctx) {
    const MeshPtr mesh = build_domain(cfg.domain, cfg.h);
    try {
        const Solution sol = solve(mesh, cfg.material, cfg.norm, cfg.source, cfg.solve_options());
        ctx.emit("field.csv", render([&](std::ostream& os) { write_field_csv(os, sol.field); }));
        ctx.emit("solve_report.json", dump(to_json(sol.report)));
    } catch (const NonConvergenceError& e) {
        if (e.last_iterate().size() == static_cast<Eigen::Index>(mesh->num_vertices())) {
            const ScalarField last{mesh, e.last_iterate()};
            ctx.emit("field.csv", render([&](std::ostream& os) { write_field_csv(os, last); }), true);
        }
        throw;
    }
}

inline void command_barrier(const RunConfig& cfg, RunContext& ctx) {
    const RadialSettings& r = cfg.radial;
    RadialProblem problem = r.mode == RadialMode::barrier ? RadialProblem::barrier(cfg.material, r.n, r.R, cfg.g_law)
                                                          : RadialProblem::ball(cfg.material, r.n, r.R, cfg.f_law);
    problem.steps = r.steps;
    const BarrierProfile profile = shoot(problem, r.m);
    ctx.emit("profile.csv", render([&](std::ostream& os) { write_profile_csv(os, profile); }));
}

inline void command_wulff(const RunConfig& cfg, RunContext& ctx) {
    const WulffSettings& w = cfg.wulff;
    const WulffShape shape = wulff_boundary(cfg.norm, w.center, w.radius, w.samples, w.side);
    ctx.emit("shape.csv", render([&](std::ostream& os) { write_shape_csv(os, shape); }));
}

inline void command_verify(const RunConfig& cfg, RunContext& ctx) {
    const InvariantReport inv = run_invariants(cfg.norm, cfg.material, cfg.seed);
    ctx.emit("invariants.json", dump(to_json(inv)));
    const AdmissibilityReport adm = assess(cfg.material, cfg.norm, cfg.source, 10000, cfg.seed, 1.0);
    ctx.emit("admissibility.json", dump(to_json(adm)));
    if (!inv.passed) throw NumericError("verify: an invariant check exceeded its tolerance (see invariants.json)", 0.0);
}

inline void command_regularity(const RunConfig& cfg, RunContext& ctx) {
    const RegularitySettings& r = cfg.regularity;
    auto write_study = [&](const RegularityReport& rep, bool partial) {
        ctx.emit("study.csv", render([&](std::ostream& os) { write_study_csv(os, rep); }), partial);
    };
    const RegularityStudy study =
        regularity_study(cfg.domain, cfg.material, cfg.norm, cfg.source, cfg.h, r.levels, r.beta, r.t, r.q,
                         cfg.solve_options(), [&](const RegularityReport& rep) { write_study(rep, true); });
    write_study(study.report, false);
    ctx.emit("regularity_report.json", dump(to_json(study.report)));
    const HopfReport hopf = hopf_check(study.solutions.back().field, cfg.norm, cfg.material, cfg.source, r.hopf_R, r.hopf_m);
    ctx.emit("hopf_report.json", dump(to_json(hopf)));
}

}  // namespace detail

/// Runs one command; returns the process exit status. Diagnostics go to err.
inline int run(const CliOptions& opts, std::ostream& err = std::cerr) {
    detail::RunContext ctx(opts);
    auto fail = [&](ExitCode code, const std::string& status, const std::string& message) {
        ctx.manifest().status = status;
        ctx.manifest().diagnostic = detail::one_line(message);
        if (code == ExitCode::numeric_failure) ctx.mark_partial();
        try {
            ctx.finish();
        } catch (const std::exception&) {
        }
        err << "error: " << detail::one_line(message) << '\n';
        return static_cast<int>(code);
    };
    try {
        ctx.prepare_output();
    } catch (const std::exception& e) {
        return fail(ExitCode::rejected, "rejected", std::string("cannot create output directory: ") + e.what());
    }
    try {
        std::vector<std::string> overrides = opts.overrides;
        if (opts.seed) overrides.push_back("seed=" + std::to_string(*opts.seed));
        const RunConfig cfg = load_config(opts.config_path, overrides);
        ctx.adopt(cfg);
        if (opts.command == "solve")
            detail::command_solve(cfg, ctx);
        else if (opts.command == "barrier")
            detail::command_barrier(cfg, ctx);
        else if (opts.command == "wulff")
            detail::command_wulff(cfg, ctx);
        else if (opts.command == "verify")
            detail::command_verify(cfg, ctx);
        else if (opts.command == "regularity")
            detail::command_regularity(cfg, ctx);
        else
            throw ConfigError("unknown command '" + opts.command + "'");
    } catch (const NumericError& e) {
        std::ostringstream os;
        os << e.what() << " (residual " << e.residual() << ")";
        return fail(ExitCode::numeric_failure, "numeric_failure", os.str());
    } catch (const std::invalid_argument& e) {
        return fail(ExitCode::rejected, "rejected", e.what());
    } catch (const std::exception& e) {
        return fail(ExitCode::numeric_failure, "numeric_failure", e.what());
    }
    ctx.finish();
    return static_cast<int>(ExitCode::ok);
}

/// Parses argv and runs. Usage errors exit with status 1.
inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Anisotropic quasilinear elliptic solver and verification harness", "aniso"};
    CliOptions opts;
    std::uint64_t seed = 0;
    app.add_option("command", opts.command, "solve, barrier, wulff, verify or regularity")
        ->required()
        ->check(CLI::IsMember({"solve", "barrier", "wulff", "verify", "regularity"}));
    app.add_option("--config", opts.config_path, "JSON configuration file (defaults apply when omitted)");
    app.add_option("--out", opts.out_dir, "output directory")->capture_default_str();
    app.add_option("--set", opts.overrides, "override key=value at a dotted path (repeatable)")->allow_extra_args(false)->take_all();
    auto* seed_opt = app.add_option("--seed", seed, "random seed (u64)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << detail::one_line(e.what()) << '\n';
        return static_cast<int>(ExitCode::rejected);
    }
    if (seed_opt->count()) opts.seed = seed;
    return run(opts, err);
}

}  // namespace aniso
