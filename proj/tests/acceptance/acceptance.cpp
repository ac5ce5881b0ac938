// Acceptance suite: one PASS/FAIL line per criterion. Usage:
//   acceptance <path-to-aniso> <scratch-dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "aniso/verify.hpp"

using namespace aniso;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
    std::cout << "criterion " << id << ": " << (ok ? "PASS" : "FAIL") << "  " << detail << std::endl;
    if (!ok) ++failures;
}

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

FinslerNorm ellipse41() {
    Mat a(2, 2);
    a << 4, 0, 0, 1;
    return FinslerNorm::ellipsoidal(a);
}

std::vector<FinslerNorm> shipped_norms() { return {FinslerNorm::euclidean(), ellipse41(), FinslerNorm::lp(4)}; }

double max_error(const ScalarField& u, const std::function<double(const Vec2&)>& exact) {
    double err = 0.0;
    for (std::size_t v = 0; v < u.mesh->num_vertices(); ++v)
        err = std::max(err, std::abs(u.values(static_cast<Eigen::Index>(v)) - exact(u.mesh->vertices[v])));
    return err;
}

double rel_change(double coarse, double fine) { return std::abs(coarse - fine) / std::abs(fine); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void duality() {
    const auto t0 = Clock::now();
    const auto xs = sample_vectors(2, 100, 0);
    double worst = 0.0;
    for (const FinslerNorm& h : shipped_norms()) worst = std::max(worst, verify_duality_identities(h, xs));
    const double dt = seconds_since(t0);
    report(1, worst <= 1e-6 && dt < 1.0, fmt("max residual %.3e, %.3f s", worst, dt));
}

void structural() {
    const auto t0 = Clock::now();
    const auto vp = sample_vector_pairs(2, 10000, 0);
    const auto xp = sample_point_pairs(2, 10000, 1);
    double c1 = INFINITY;
    double cm = INFINITY;
    for (const FinslerNorm& h : shipped_norms()) {
        for (double p : {1.5, 2.0, 3.0, 4.0}) {
            for (const MaterialProfile& m : {MaterialProfile::power(p), MaterialProfile::shifted(p, 0.5)}) {
                c1 = std::min(c1, check_structural_bounds(m, h, vp).C1);
                cm = std::min(cm, check_flux_monotonicity(m, h, xp));
            }
        }
    }
    const double dt = seconds_since(t0);
    report(2, c1 > 0.0 && cm > 0.0 && dt < 5.0, fmt("min C1 %.4e, min C_monotone %.4e, %.2f s", c1, cm, dt));
}

struct TorsionFixture {
    RegularityStudy study;
    double seconds;
};

TorsionFixture torsion_fixture() {
    const auto t0 = Clock::now();
    RegularityStudy study = regularity_study(DomainSpec::disk(1), MaterialProfile::power(2), FinslerNorm::euclidean(),
                                             SourceTerm::constant(1.0), 0.1, 3, 0.0, 0.5, {2.0});
    return {std::move(study), seconds_since(t0)};
}

void torsion_oracle(const TorsionFixture& fx) {
    std::vector<double> errs;
    for (const Solution& s : fx.study.solutions)
        errs.push_back(max_error(s.field, [](const Vec2& x) { return (1.0 - x.squaredNorm()) / 4.0; }));
    const double r1 = errs[0] / errs[1];
    const double r2 = errs[1] / errs[2];
    const double centre = fx.study.solutions.back().field.values(0);
    const bool ok = r1 >= 3.2 && r1 <= 4.8 && r2 >= 3.2 && r2 <= 4.8 && std::abs(centre - 0.25) <= 2e-3 && fx.seconds < 60.0;
    report(3, ok, fmt("errors %.3e %.3e %.3e, ratios %.3f %.3f, u(0) %.6f, %.2f s", errs[0], errs[1], errs[2], r1, r2,
                      centre, fx.seconds));
}

void anisotropic() {
    const FinslerNorm h = ellipse41();
    const MaterialProfile m = MaterialProfile::power(2);
    const double hn = 0.05;
    const MeshPtr mesh = build_domain(DomainSpec::wulff_ball(h, 1.0), hn);
    const Solution sol = solve(mesh, m, h, SourceTerm::constant(1.0));
    const BarrierProfile prof = shoot(RadialProblem::ball(m, 2, 1.0, [](double) { return 1.0; }), 0.0);
    const ScalarField radial = lift(h, Vec2::Zero(), prof, mesh);
    const double err = (sol.field.values - radial.values).cwiseAbs().maxCoeff();
    report(4, err <= 5.0 * hn * hn, fmt("max-node error %.3e (limit %.3e)", err, 5.0 * hn * hn));
}

void degenerate() {
    const MeshPtr mesh = build_domain(DomainSpec::disk(1), 0.025);
    const Solution sol = solve(mesh, MaterialProfile::power(3), FinslerNorm::euclidean(), SourceTerm::constant(1.0));
    const double centre = sol.field.values(0);
    report(5, std::abs(centre - 0.4714) <= 5e-3, fmt("u(0) %.6f", centre));
}

void hopf(const TorsionFixture& fx) {
    const MaterialProfile m = MaterialProfile::power(2);
    const SourceTerm s = SourceTerm::constant(1.0);
    const HopfReport rep = hopf_check(fx.study.solutions.back().field, FinslerNorm::euclidean(), m, s, 0.5, 0.1);
    const BarrierProfile prof = shoot(RadialProblem::barrier(m, 2, 1.0, [](double) { return 0.0; }), 1.0);
    const double slope_err = std::abs(prof.shoot_slope - 1.0 / std::log(2.0));
    const bool ok = rep.min_normal_derivative >= 0.45 && rep.min_normal_derivative <= 0.55 &&
                    rep.comparison_violation >= -5.0 * rep.h * rep.h && slope_err <= 1e-6;
    report(6, ok, fmt("min normal derivative %.4f, violation %.3e (limit %.3e), slope error %.2e",
                      rep.min_normal_derivative, rep.comparison_violation, -5.0 * rep.h * rep.h, slope_err));
}

void regularity_integrals(const TorsionFixture& fx) {
    const auto& rows = fx.study.report.per_refinement;
    const RefinementRow& a = rows[rows.size() - 2];
    const RefinementRow& b = rows.back();
    const double hess_exact = pi / 2.0;
    const double weight_exact = 4.0 * std::sqrt(2.0) * pi / 3.0;
    const double e1 = std::abs(b.hessian_integral - hess_exact) / hess_exact;
    const double e2 = std::abs(b.weight_integral - weight_exact) / weight_exact;
    const double s1 = rel_change(a.hessian_integral, b.hessian_integral);
    const double s2 = rel_change(a.weight_integral, b.weight_integral);
    report(7, e1 <= 0.03 && e2 <= 0.03 && s1 <= 0.1 && s2 <= 0.1,
           fmt("hessian %.5f (rel err %.2e, step %.2e), weight %.5f (rel err %.2e, step %.2e)", b.hessian_integral, e1,
               s1, b.weight_integral, e2, s2));
}

void critical_set(const TorsionFixture& fx) {
    const auto& rows = fx.study.report.per_refinement;
    bool ok = rows.back().critical_fraction < 0.01;
    for (std::size_t i = 1; i < rows.size(); ++i) ok = ok && rows[i].critical_fraction < rows[i - 1].critical_fraction;
    report(8, ok, fmt("fractions %.5f %.5f %.5f", rows[0].critical_fraction, rows[1].critical_fraction,
                      rows[2].critical_fraction));
}

void sobolev() {
    const MaterialProfile m = MaterialProfile::power(4);
    std::vector<std::vector<SobolevEntry>> scans;
    for (double h : {0.05, 0.025}) {
        const Solution sol = solve(build_domain(DomainSpec::disk(1), h), m, FinslerNorm::euclidean(), SourceTerm::constant(1.0));
        scans.push_back(sobolev_scan(sol.field, m, {1.4, 1.6}));
    }
    const double s14 = rel_change(scans[0][0].integral, scans[1][0].integral);
    const double s16 = rel_change(scans[0][1].integral, scans[1][1].integral);
    report(9, s14 <= 0.1 && scans[1][0].covered,
           fmt("q=1.4: %.4f -> %.4f (step %.2e); q=1.6 recorded only: %.4f -> %.4f (step %.2e)", scans[0][0].integral,
               scans[1][0].integral, s14, scans[0][1].integral, scans[1][1].integral, s16));
}

void determinism(const std::string& cli, const fs::path& dir) {
    std::vector<fs::path> outs = {dir / "run_a", dir / "run_b"};
    bool ran = true;
    for (const fs::path& o : outs) {
        fs::remove_all(o);
        const std::string cmd = "\"" + cli + "\" regularity --out \"" + o.string() + "\" > /dev/null 2>&1";
        ran = ran && std::system(cmd.c_str()) == 0;
    }
    std::size_t compared = 0;
    bool same = ran;
    if (ran) {
        for (const auto& entry : fs::directory_iterator(outs[0])) {
            if (entry.path().extension() != ".csv") continue;
            ++compared;
            same = same && slurp(entry.path()) == slurp(outs[1] / entry.path().filename());
        }
    }
    report(10, ran && same && compared > 0, fmt("%zu CSV artifact(s) compared, runs %s", compared, ran ? "ok" : "failed"));
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: acceptance <aniso-binary> <scratch-dir>\n";
        return 2;
    }
    const fs::path dir = argv[2];
    fs::create_directories(dir);
    try {
        duality();
        structural();
        const TorsionFixture fx = torsion_fixture();
        torsion_oracle(fx);
        anisotropic();
        degenerate();
        hopf(fx);
        regularity_integrals(fx);
        critical_set(fx);
        sobolev();
        determinism(argv[1], dir);
    } catch (const std::exception& e) {
        std::cout << "acceptance aborted: " << e.what() << std::endl;
        return 1;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion(s) failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
