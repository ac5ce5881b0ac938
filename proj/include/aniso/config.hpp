#pragma once

// The run configuration shared by all CLI commands: a strict JSON schema
// with defaults, dotted-path overrides, and eager admissibility checks.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "aniso/errors.hpp"
#include "aniso/finsler.hpp"
#include "aniso/material.hpp"
#include "aniso/mesh.hpp"
#include "aniso/radial.hpp"
#include "aniso/solver2d.hpp"

namespace aniso {

/// Any rejection of a configuration: syntax, schema or admissibility.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct RadialSettings {
    RadialMode mode = RadialMode::barrier;
    int n = 2;
    double R = 1.0;
    /// Barrier target w(R/2), or the boundary value w(R) in ball mode.
    double m = 1.0;
    int steps = 4096;
};

struct WulffSettings {
    Vec2 center = Vec2::Zero();
    double radius = 1.0;
    int samples = 64;
    NormSide side = NormSide::dual;
};

struct RegularitySettings {
    int levels = 3;
    double beta = 0.0;
    double t = 0.5;
    std::vector<double> q{2.0};
    double hopf_R = 0.5;
    double hopf_m = 0.1;
};

struct Verdicts {
    std::string material = "admissible";
    std::string norm = "admissible";
    double ellipticity = 0.0;
    std::string source = "admissible";
    SourceAdmissibility osserman = SourceAdmissibility::unchecked;
};

struct RunConfig {
    /// Effective document after defaults and overrides.
    nlohmann::json document;
    DomainSpec domain;
    MaterialProfile material;
    FinslerNorm norm;
    ScalarLaw f_law;
    ScalarLaw g_law;
    SourceTerm source;
    double h;
    double tol_solve;
    int max_iter;
    std::uint64_t seed;
    RadialSettings radial;
    WulffSettings wulff;
    RegularitySettings regularity;
    Verdicts verdicts;

    SolveOptions solve_options() const {
        SolveOptions o;
        o.tol_solve = tol_solve;
        o.max_iter = max_iter;
        return o;
    }
};

/// The configuration used when a key is absent: the unit-disk torsion problem.
inline nlohmann::json default_document() {
    return nlohmann::json::parse(R"({
      "domain": {"kind": "disk", "R": 1.0},
      "material": {"p": 2.0, "k": 0.0, "kind": "power"},
      "norm": {"kind": "euclidean", "params": {}},
      "source": {"f": {"constant": 1.0, "coef": 0.0, "exponent": 1.0},
                 "g": {"constant": 0.0, "coef": 0.0, "exponent": 1.0}},
      "h": 0.1,
      "tol_solve": 1e-8,
      "max_iter": 200,
      "seed": 0,
      "radial": {"mode": "barrier", "n": 2, "R": 1.0, "m": 1.0, "steps": 4096},
      "wulff": {"center": [0.0, 0.0], "radius": 1.0, "samples": 64, "side": "dual"},
      "regularity": {"levels": 3, "beta": 0.0, "t": 0.5, "q": [2.0], "hopf_R": 0.5, "hopf_m": 0.1}
    })");
}

namespace detail {

/// Objects whose keys depend on a sibling `kind` and are checked later.
inline bool free_form(const std::string& path) {
    return path == "domain" || path == "norm.params" || path == "source.f" || path == "source.g";
}

/// Rejects keys of `user` that do not occur in `schema`; recurses into objects.
inline void check_keys(const nlohmann::json& user, const nlohmann::json& schema, const std::string& path) {
    if (!user.is_object()) throw ConfigError("config: '" + (path.empty() ? "<root>" : path) + "' must be an object");
    for (const auto& [key, value] : user.items()) {
        const std::string sub = path.empty() ? key : path + "." + key;
        if (!schema.contains(key)) throw ConfigError("config: unknown key '" + sub + "'");
        if (free_form(sub)) continue;
        if (schema.at(key).is_object()) check_keys(value, schema.at(key), sub);
    }
}

inline nlohmann::json merged(const nlohmann::json& defaults, const nlohmann::json& user, const std::string& path) {
    nlohmann::json out = defaults;
    for (const auto& [key, value] : user.items()) {
        const std::string sub = path.empty() ? key : path + "." + key;
        if (free_form(sub) || !defaults.at(key).is_object())
            out[key] = value;
        else
            out[key] = merged(defaults.at(key), value, sub);
    }
    return out;
}

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

inline double get_number(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError("config: '" + path + "' must be a number");
    return j.get<double>();
}

inline int get_int(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError("config: '" + path + "' must be an integer");
    return j.get<int>();
}

inline std::string get_string(const nlohmann::json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError("config: '" + path + "' must be a string");
    return j.get<std::string>();
}

inline void only_keys(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& path) {
    if (!j.is_object()) throw ConfigError("config: '" + path + "' must be an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) throw ConfigError("config: unknown key '" + path + "." + key + "'");
}

inline ScalarLaw parse_law(const nlohmann::json& j, const std::string& path) {
    if (j.is_number()) return {j.get<double>(), 0.0, 1.0};
    only_keys(j, {"constant", "coef", "exponent"}, path);
    ScalarLaw law;
    if (j.contains("constant")) law.constant = get_number(j["constant"], path + ".constant");
    if (j.contains("coef")) law.coef = get_number(j["coef"], path + ".coef");
    if (j.contains("exponent")) law.exponent = get_number(j["exponent"], path + ".exponent");
    if (!(law.exponent >= 0.0)) throw ConfigError("config: '" + path + ".exponent' must be >= 0");
    return law;
}

inline FinslerNorm parse_norm(const nlohmann::json& j) {
    const std::string kind = get_string(j.at("kind"), "norm.kind");
    const nlohmann::json& params = j.at("params");
    if (!params.is_object()) throw ConfigError("config: 'norm.params' must be an object");
    if (kind == "euclidean") {
        only_keys(params, {}, "norm.params");
        return FinslerNorm::euclidean(2);
    }
    if (kind == "ellipsoidal") {
        only_keys(params, {"A"}, "norm.params");
        if (!params.contains("A")) throw ConfigError("config: ellipsoidal norm needs 'norm.params.A'");
        const nlohmann::json& rows = params["A"];
        if (!rows.is_array() || rows.size() != 2) throw ConfigError("config: 'norm.params.A' must be a 2x2 array");
        Mat a(2, 2);
        for (int i = 0; i < 2; ++i) {
            if (!rows[i].is_array() || rows[i].size() != 2)
                throw ConfigError("config: 'norm.params.A' must be a 2x2 array");
            for (int k = 0; k < 2; ++k) a(i, k) = get_number(rows[i][k], "norm.params.A");
        }
        try {
            return FinslerNorm::ellipsoidal(a);
        } catch (const std::invalid_argument& e) {
            throw AdmissibilityError("(iv)", std::string("hypothesis (iv) violated: H must be positive away from 0 (") +
                                                 e.what() + ")");
        }
    }
    if (kind == "lp") {
        only_keys(params, {"q"}, "norm.params");
        if (!params.contains("q")) throw ConfigError("config: lp norm needs 'norm.params.q'");
        const double q = get_number(params["q"], "norm.params.q");
        if (!(q > 1.0)) throw AdmissibilityError("(vi)", "hypothesis (vi) violated: H must be uniformly elliptic; lp needs q > 1");
        return FinslerNorm::lp(q, 2);
    }
    throw ConfigError("config: unknown norm kind '" + kind + "' (expected euclidean, ellipsoidal or lp)");
}

inline DomainSpec parse_domain(const nlohmann::json& j, const FinslerNorm& norm) {
    if (!j.is_object()) throw ConfigError("config: 'domain' must be an object");
    const std::string kind = j.contains("kind") ? get_string(j["kind"], "domain.kind") : "disk";
    auto positive = [&](const char* key, double fallback) {
        const double v = j.contains(key) ? get_number(j[key], std::string("domain.") + key) : fallback;
        if (!(v > 0.0)) throw ConfigError(std::string("config: 'domain.") + key + "' must be positive");
        return v;
    };
    if (kind == "rectangle") {
        only_keys(j, {"kind", "a", "b"}, "domain");
        return DomainSpec::rectangle(positive("a", 1.0), positive("b", 1.0));
    }
    only_keys(j, {"kind", "R"}, "domain");
    const double R = positive("R", 1.0);
    if (kind == "disk") return DomainSpec::disk(R);
    if (kind == "wulff_ball") return DomainSpec::wulff_ball(norm, R);
    if (kind == "annulus_wulff") return DomainSpec::annulus_wulff(norm, R);
    throw ConfigError("config: unknown domain kind '" + kind + "'");
}

inline MaterialProfile parse_material(const nlohmann::json& j) {
    const double p = get_number(j.at("p"), "material.p");
    const double k = get_number(j.at("k"), "material.k");
    const std::string kind = get_string(j.at("kind"), "material.kind");
    if (kind == "power") {
        if (k != 0.0) throw ConfigError("config: material kind 'power' requires k = 0");
        return MaterialProfile::power(p);
    }
    if (kind == "shifted") return MaterialProfile::shifted(p, k);
    throw ConfigError("config: unknown material kind '" + kind + "' (expected power or shifted)");
}

}  // namespace detail

/// Parses JSON text, reporting syntax errors with line and column.
inline nlohmann::json parse_json_text(const std::string& text, const std::string& source_name) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const auto [line, col] = detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
        std::ostringstream os;
        os << source_name << ":" << line << ":" << col << ": JSON parse error";
        const std::string what = e.what();
        const auto pos = what.rfind(": ");
        if (pos != std::string::npos) os << ": " << what.substr(pos + 2);
        throw ConfigError(os.str());
    }
}

/// Applies `key=value` at a dotted path. The value is read as JSON when it
/// parses, otherwise as a string.
inline void apply_override(nlohmann::json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    nlohmann::json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty path segment");
        if (!node->is_object()) *node = nlohmann::json::object();
        if (dot == std::string::npos) {
            (*node)[key] = value;
            break;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

/// Validates a document against the schema, fills defaults and runs the
/// admissibility checks. Throws ConfigError for schema problems and
/// AdmissibilityError naming the hypothesis otherwise.
inline RunConfig build_config(const nlohmann::json& user) {
    const nlohmann::json defaults = default_document();
    detail::check_keys(user, defaults, "");
    const nlohmann::json doc = detail::merged(defaults, user, "");

    const FinslerNorm norm = detail::parse_norm(doc["norm"]);
    MaterialProfile material = detail::parse_material(doc["material"]);
    const DomainSpec domain = detail::parse_domain(doc["domain"], norm);
    const ScalarLaw f_law = detail::parse_law(doc["source"]["f"], "source.f");
    const ScalarLaw g_law = detail::parse_law(doc["source"]["g"], "source.g");
    SourceTerm source = SourceTerm::from_laws(f_law, g_law);

    const double h = detail::get_number(doc["h"], "h");
    if (!(h > 0.0)) throw ConfigError("config: 'h' must be positive");
    const double tol_solve = detail::get_number(doc["tol_solve"], "tol_solve");
    if (!(tol_solve > 0.0)) throw ConfigError("config: 'tol_solve' must be positive");
    const int max_iter = detail::get_int(doc["max_iter"], "max_iter");
    if (max_iter < 1) throw ConfigError("config: 'max_iter' must be >= 1");
    if (!doc["seed"].is_number_unsigned()) throw ConfigError("config: 'seed' must be a nonnegative integer");
    const auto seed = doc["seed"].get<std::uint64_t>();

    const nlohmann::json& r = doc["radial"];
    RadialSettings radial;
    const std::string mode = detail::get_string(r["mode"], "radial.mode");
    if (mode == "barrier")
        radial.mode = RadialMode::barrier;
    else if (mode == "ball")
        radial.mode = RadialMode::ball;
    else
        throw ConfigError("config: 'radial.mode' must be barrier or ball");
    radial.n = detail::get_int(r["n"], "radial.n");
    radial.R = detail::get_number(r["R"], "radial.R");
    radial.m = detail::get_number(r["m"], "radial.m");
    radial.steps = detail::get_int(r["steps"], "radial.steps");
    if (radial.n < 2) throw ConfigError("config: 'radial.n' must be >= 2");
    if (!(radial.R > 0.0)) throw ConfigError("config: 'radial.R' must be positive");
    if (radial.mode == RadialMode::barrier ? !(radial.m > 0.0) : !(radial.m >= 0.0))
        throw ConfigError("config: 'radial.m' must be positive in barrier mode and nonnegative in ball mode");
    if (radial.steps < 16) throw ConfigError("config: 'radial.steps' must be >= 16");

    const nlohmann::json& w = doc["wulff"];
    WulffSettings wulff;
    if (!w["center"].is_array() || w["center"].size() != 2) throw ConfigError("config: 'wulff.center' must be [x, y]");
    wulff.center = Vec2(detail::get_number(w["center"][0], "wulff.center"), detail::get_number(w["center"][1], "wulff.center"));
    wulff.radius = detail::get_number(w["radius"], "wulff.radius");
    wulff.samples = detail::get_int(w["samples"], "wulff.samples");
    const std::string side = detail::get_string(w["side"], "wulff.side");
    if (side == "dual")
        wulff.side = NormSide::dual;
    else if (side == "primal")
        wulff.side = NormSide::primal;
    else
        throw ConfigError("config: 'wulff.side' must be dual or primal");
    if (!(wulff.radius > 0.0)) throw ConfigError("config: 'wulff.radius' must be positive");
    if (wulff.samples < 4) throw ConfigError("config: 'wulff.samples' must be >= 4");

    const nlohmann::json& g = doc["regularity"];
    RegularitySettings reg;
    reg.levels = detail::get_int(g["levels"], "regularity.levels");
    reg.beta = detail::get_number(g["beta"], "regularity.beta");
    const bool t_given = user.contains("regularity") && user["regularity"].contains("t");
    reg.t = t_given ? detail::get_number(g["t"], "regularity.t") : std::min(0.5, 0.5 * (material.p() - 1.0));
    if (!g["q"].is_array()) throw ConfigError("config: 'regularity.q' must be an array");
    reg.q.clear();
    for (const auto& q : g["q"]) reg.q.push_back(detail::get_number(q, "regularity.q"));
    reg.hopf_R = detail::get_number(g["hopf_R"], "regularity.hopf_R");
    reg.hopf_m = detail::get_number(g["hopf_m"], "regularity.hopf_m");
    if (reg.levels < 1) throw ConfigError("config: 'regularity.levels' must be >= 1");
    if (!(reg.beta >= 0.0 && reg.beta < 1.0)) throw ConfigError("config: 'regularity.beta' must lie in [0, 1)");
    if (!(reg.t >= 0.0 && reg.t < material.p() - 1.0))
        throw ConfigError("config: 'regularity.t' must lie in [0, p-1)");
    for (double q : reg.q)
        if (!(q > 1.0 && q <= 4.0)) throw ConfigError("config: 'regularity.q' entries must lie in (1, 4]");
    if (!(reg.hopf_R > 0.0) || !(reg.hopf_m > 0.0))
        throw ConfigError("config: 'regularity.hopf_R' and 'regularity.hopf_m' must be positive");

    Verdicts verdicts;
    verdicts.ellipticity = ellipticity_constant(norm);
    if (!(verdicts.ellipticity > 0.0)) {
        std::ostringstream os;
        os << "hypothesis (vi) violated: H is not uniformly elliptic (sampled curvature " << verdicts.ellipticity << ")";
        throw AdmissibilityError("(vi)", os.str());
    }
    source.validate();
    const OssermanResult oss = check_osserman(source, material, 1.0);
    source.admissibility = oss.verdict;
    verdicts.osserman = oss.verdict;

    return RunConfig{doc,  domain, std::move(material), norm, f_law, g_law, std::move(source), h, tol_solve,
                     max_iter, seed, radial, wulff,      reg,  verdicts};
}

/// Reads a config file (or uses the defaults when path is empty), applies
/// overrides, then validates.
inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
    nlohmann::json doc = nlohmann::json::object();
    if (!path.empty()) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("cannot open config file " + path);
        std::stringstream buf;
        buf << in.rdbuf();
        doc = parse_json_text(buf.str(), path);
    }
    for (const auto& o : overrides) apply_override(doc, o);
    return build_config(doc);
}

}  // namespace aniso
