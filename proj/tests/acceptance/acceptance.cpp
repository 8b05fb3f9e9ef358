// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any criterion fails.

#include "h2n/diagnostics.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace h2n;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [fail: " << what << "]";
        }
    }
};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

struct NamedState {
    std::string name;
    SurfaceState st;
};

// Solved states of the generator suite, built once.
const std::vector<NamedState>& generator_suite() {
    static const std::vector<NamedState> suite = [] {
        std::vector<NamedState> out;
        out.push_back({"circle", plateau_solve(build_state(circle_loop(1, 512), 32, 96, 4.0), 1e-6, 2000)});
        for (auto [a, k] : {std::pair{0.1, 2}, std::pair{0.15, 3}, std::pair{0.05, 5}})
            out.push_back({"wobble(" + fmt(a) + "," + std::to_string(k) + ")",
                           plateau_solve(build_state(wobble_loop(1, 512, a, k), 32, 96, 4.0), 1e-6, 2000)});
        out.push_back({"crown", plateau_solve(build_state(crown_loop(1, 1024), 32, 96, 3.0), 1e-6, 2000)});
        return out;
    }();
    return suite;
}

const SurfaceState& barbot_grid() {
    static const SurfaceState st = barbot_state(barbot_crown_standard(1), 32, 96, 2.0);
    return st;
}

double interior_extreme(const SurfaceState& st, const Vec& v, bool want_max) {
    double out = want_max ? -1e300 : 1e300;
    for (int i : audited_vertices(st))
        if (std::isfinite(v(i))) out = want_max ? std::max(out, v(i)) : std::min(out, v(i));
    return out;
}

Vec circle_vec(int n, double a) {
    Vec x = Vec::Zero(n + 3);
    x(0) = std::cos(a);
    x(1) = std::sin(a);
    x(2) = 1.0;
    return x;
}

double chart_q_oracle(const Vec& u) { return u(0) * u(0) - u.tail(u.size() - 1).squaredNorm(); }

Vec random_null(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> N(0.0, 1.0);
    Vec u(2), v(n + 1);
    for (int i = 0; i < 2; ++i) u(i) = N(rng);
    for (int i = 0; i <= n; ++i) v(i) = N(rng);
    Vec x(n + 3);
    x << u.normalized(), v.normalized();
    return x;
}

Outcome c1_barbot_exactness() {
    Outcome o;
    double worst = 0.0, qsum = 0.0;
    for (int n = 1; n <= 3; ++n) {
        const BarbotCrown c = barbot_crown_standard(n);
        worst = std::max(worst, c.normalization_defect());
        for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs(bilinear(c.z[i], c.z[(i + 2) % 4]) + 0.25));
        o.require(subspace_signature<double>({c.z[0], c.z[1], c.z[2], c.z[3]}).is(2, 2, 0), "span signature n=" + std::to_string(n));
        qsum = std::max(qsum, std::abs(quad(Vec(c.z[0] + c.z[1] + c.z[2] + c.z[3])) + 1.0));
    }
    o.require(worst <= 1e-10, "crown normalization");
    o.require(qsum <= 1e-14, "q(z0+z1+z2+z3) = -1");
    o.detail << " defect=" << fmt(worst) << " |q(sum)+1|=" << fmt(qsum);
    return o;
}

Outcome c2_barbot_maximality() {
    Outcome o;
    const BarbotCrown c = barbot_crown_standard(1);
    const auto s32 = barbot_state(c, 32, 96, 2.0), s64 = barbot_state(c, 64, 192, 2.0);
    const double r32 = max_residual_norm(s32, mean_curvature_residual(s32));
    const double r64 = max_residual_norm(s64, mean_curvature_residual(s64));
    o.require(r32 <= 5e-3, "residual at m=32");
    o.require(r32 / r64 >= 3.0, "refinement factor");
    o.detail << " m32=" << fmt(r32) << " m64=" << fmt(r64) << " factor=" << fmt(r32 / r64);
    return o;
}

Outcome c3_rigidity() {
    Outcome o;
    for (const auto& [name, st] : generator_suite()) {
        if (!st.converged) {
            o.require(false, name + " not converged");
            continue;
        }
        const auto r = rigidity_audit(st);
        const double k = r.values.at("max_K"), ii = r.values.at("max_II2");
        o.require(k <= 5e-2, name + " max K");
        o.require(ii <= 2.1, name + " max |II|^2");
        o.detail << " " << name << ":K<=" << fmt(k) << ",II2<=" << fmt(ii);
    }
    const auto G = discrete_geometry(barbot_grid());
    const double kl = interior_extreme(barbot_grid(), G.K, false), kh = interior_extreme(barbot_grid(), G.K, true);
    const double il = interior_extreme(barbot_grid(), G.II2_fit, false), ih = interior_extreme(barbot_grid(), G.II2_fit, true);
    o.require(std::max(std::abs(kl), std::abs(kh)) <= 3e-2, "barbot K");
    o.require(std::max(std::abs(il - 2.0), std::abs(ih - 2.0)) <= 0.1, "barbot |II|^2");
    o.detail << " barbot:K in [" << fmt(kl) << "," << fmt(kh) << "],II2 in [" << fmt(il) << "," << fmt(ih) << "]";
    return o;
}

Outcome c4_gradient() {
    Outcome o;
    std::vector<const SurfaceState*> states;
    std::vector<std::string> names;
    for (const auto& ns : generator_suite()) states.push_back(&ns.st), names.push_back(ns.name);
    states.push_back(&barbot_grid());
    names.push_back("barbot");
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (!states[i]->converged && !states[i]->analytic) {
            o.require(false, names[i] + " not converged");
            continue;
        }
        const auto r = gradient_audit(*states[i], 16, 11);
        const double lo = r.values.at("min_grad2"), hi = r.values.at("max_grad2");
        o.require(r.samples >= 500, names[i] + " sample count");
        o.require(lo >= 1.0 - 1e-2 && hi <= 2.05, names[i] + " gradient range");
        o.detail << " " << names[i] << ":[" << fmt(lo) << "," << fmt(hi) << "]";
    }
    // Analytic crown-vertex horofunction on the Barbot grid.
    const BarbotCrown c = barbot_crown_standard(1);
    const auto& st = barbot_grid();
    double worst = 0.0;
    for (int i = 0; i < 4; ++i) {
        const auto h = Horofunction::from_vector(c.z[i]);
        for (int v = 0; v < st.mesh.vertex_count(); ++v) {
            const Eigen::Vector2d p = kSqrt2 * st.mesh.param(v);
            const auto T = barbot_surface_tangents(c, p(0), p(1));
            const Vec g = h.gradient(barbot_surface_point(c, p(0), p(1)).rep, {Vec(kSqrt2 * T[0]), Vec(kSqrt2 * T[1])});
            worst = std::max(worst, std::abs(quad(g) - 2.0));
        }
    }
    o.require(worst <= 1e-6, "analytic crown-vertex gradient");
    o.detail << " analytic|grad|^2-2<=" << fmt(worst);
    return o;
}

Outcome c5_spatial_distance() {
    Outcome o;
    for (const auto& [name, st] : generator_suite()) {
        if (!st.converged) {
            o.require(false, name + " not converged");
            continue;
        }
        const auto r = distance_ratio_audit(st, 200, 5);
        const double lo = r.values.at("min_ratio"), hi = r.values.at("max_ratio");
        o.require(lo >= 1.0 / 1.1 && hi <= kSqrt2 * 1.1, name + " ratio range");
        o.detail << " " << name << ":[" << fmt(lo) << "," << fmt(hi) << "]";
    }
    // Flat Barbot metric: induced length of a parameter displacement (ds, dt) is |(ds, dt)| / sqrt(2).
    const BarbotCrown c = barbot_crown_standard(1);
    double worst = 0.0;
    for (auto [s0, t0] : {std::pair{0.0, 0.0}, std::pair{1.5, -2.0}, std::pair{-3.0, 0.7}})
        for (auto [ds, dt] : {std::pair{20.0, 0.0}, std::pair{0.0, 20.0}, std::pair{-20.0, 0.0}}) {
            const double ratio = spatial_distance(barbot_surface_point(c, s0, t0), barbot_surface_point(c, s0 + ds, t0 + dt)) /
                                 (std::hypot(ds, dt) / kSqrt2);
            worst = std::max(worst, std::abs(ratio / kSqrt2 - 1.0));
        }
    o.require(worst <= 0.05, "barbot diagonal ratio");
    o.detail << " barbot:|ratio/sqrt2-1|<=" << fmt(worst);
    return o;
}

Outcome c6_uniqueness() {
    Outcome o;
    const auto& suite = generator_suite();
    const SurfaceState& circle = suite.front().st;
    double fiber = 0.0;
    for (int v = 0; v < circle.mesh.vertex_count(); ++v) fiber = std::max(fiber, std::abs(circle.X(v, 3)));
    o.require(circle.converged && fiber < 1e-8, "circle fiber displacement");
    const SurfaceState& crown = suite.back().st;
    const auto ref = barbot_state(barbot_crown_standard(1), crown.mesh.m, crown.mesh.s, crown.mesh.R);
    const BarbotCrown bc = barbot_crown_standard(1);
    double dmax = 0.0, dinner = 0.0, dset = 0.0;
    for (int v = 0; v < crown.mesh.vertex_count(); ++v) {
        const double d = (crown.position(v) - ref.position(v)).norm();
        dmax = std::max(dmax, d);
        if (crown.mesh.ring(v) > crown.mesh.m / 2) continue;
        dinner = std::max(dinner, d);
        // Distance to the orbit point with the same horofunction coordinates, ignoring the parametrization.
        const Vec x = crown.position(v);
        const double s = 0.5 * std::log(bilinear(x, bc.z[2]) / bilinear(x, bc.z[0]));
        const double t = 0.5 * std::log(bilinear(x, bc.z[3]) / bilinear(x, bc.z[1]));
        dset = std::max(dset, std::isfinite(s + t) ? (x - barbot_surface_point(bc, s, t).rep).norm() : INFINITY);
    }
    o.require(crown.converged, "crown not converged");
    o.require(dmax <= 1e-2, "crown distance to analytic Barbot grid");
    o.detail << " circle fiber=" << fmt(fiber) << " crown max=" << fmt(dmax) << " (inner half " << fmt(dinner) << ", inner half to surface " << fmt(dset)
             << ", boundary " << crown.boundary_mode << ")";
    return o;
}

Outcome c7_cross_ratio() {
    Outcome o;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> U(-2.0, 2.0), A(0.0, 2 * kPi);
    std::uniform_int_distribution<int> Ndim(1, 3);
    double chart_err = 0.0;
    std::size_t done = 0;
    while (done < 10000) {
        const int n = Ndim(rng);
        const Vec a0 = random_null(n, rng), b0 = random_null(n, rng);
        const double p = bilinear(a0, b0);
        if (std::abs(p) < 0.1) continue;
        const MinkowskiChart ch = MinkowskiChart::from_pair(a0, b0 / p);
        Vec u[4];
        for (auto& w : u) {
            w.resize(n + 1);
            for (int i = 0; i <= n; ++i) w(i) = U(rng);
        }
        const double den = chart_q_oracle(u[0] - u[3]) * chart_q_oracle(u[2] - u[1]);
        const double num = chart_q_oracle(u[0] - u[1]) * chart_q_oracle(u[2] - u[3]);
        if (std::abs(den) < 1e-2 || std::abs(num) < 1e-2) continue;
        const double oracle = chart_q_oracle(u[0] - u[1]) * chart_q_oracle(u[2] - u[3]) / den;
        const double b = cross_ratio_b(ch.apply(u[0]), ch.apply(u[1]), ch.apply(u[2]), ch.apply(u[3]));
        chart_err = std::max(chart_err, std::abs(b - oracle) / (1.0 + std::abs(oracle)));
        ++done;
    }
    double circ_err = 0.0;
    for (int k = 0; k < 10000; ++k) {
        double s[4];
        for (double& v : s) v = A(rng);
        // Well-separated samples keep <x, y> = cos(a - b) - 1 free of cancellation.
        bool close = false;
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j) close = close || circle_distance(s[i], s[j]) < 0.1;
        if (close) continue;
        double r;
        try {
            r = cross_ratio_real(rp1_from_angle(s[0]), rp1_from_angle(s[1]), rp1_from_angle(s[2]), rp1_from_angle(s[3]));
        } catch (const DomainError&) {
            continue;
        }
        if (std::abs(r) > 1e3 || std::abs(r) < 1e-3) continue;
        double b;
        try {
            b = cross_ratio_b(circle_vec(1, s[0]), circle_vec(1, s[1]), circle_vec(1, s[2]), circle_vec(1, s[3]));
        } catch (const DomainError&) {
            continue;
        }
        circ_err = std::max(circ_err, std::abs(b - r * r) / (1.0 + r * r));
    }
    const double r = cross_ratio_real({0, 1}, {1, 1}, {1, 0}, {2, 1});
    const double b = cross_ratio_b(circle_vec(1, kPi), circle_vec(1, kPi / 2), circle_vec(1, 0.0), circle_vec(1, 2 * std::atan(0.5)));
    o.require(chart_err <= 1e-10, "chart formula");
    o.require(circ_err <= 1e-12, "circle map squares");
    o.require(std::abs(r - 0.5) <= 1e-15 && std::abs(b - 0.25) <= 1e-12, "worked quadruple");
    o.detail << " chart=" << fmt(chart_err) << " circle=" << fmt(circ_err) << " worked=(" << r << "," << b << ")";
    return o;
}

Outcome c8_contraction() {
    Outcome o;
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::uniform_int_distribution<int> Ndim(1, 3);
    const double B = 3.0;
    double ratio = 0.0, formula = 0.0;
    std::size_t configs = 0, pairs = 0, chords = 0;
    while (configs < 1000) {
        const int n = Ndim(rng);
        const auto g = random_isometry<double>(n, rng);
        const Vec a = g(circle_vec(n, 0.0)), b = g(circle_vec(n, 2 * kPi / 3)), c = g(circle_vec(n, 4 * kPi / 3));
        const auto ch = tau_chart(a, b, c);
        Vec wx(n + 1), wy(n + 1);
        for (int i = 0; i <= n; ++i) wx(i) = U(rng), wy(i) = U(rng);
        const auto A = BoundaryPoint::from_vector(a), Bp = BoundaryPoint::from_vector(b), C = BoundaryPoint::from_vector(c);
        const auto X = ch.apply(wx), Y = ch.apply(wy);
        try {
            contraction_hypotheses(A, Bp, C, X, Y, B);
        } catch (const DomainError&) {
            continue;
        }
        const auto r = contraction_check(A, Bp, C, X, Y, B, 100, configs);
        ratio = std::max(ratio, r.max_ratio);
        formula = std::max(formula, r.max_chord_formula_error);
        pairs += r.pairs;
        chords += r.chords;
        ++configs;
    }
    o.require(ratio <= 0.5 + 1e-6, "contraction ratio");
    o.require(formula <= 1e-8, "chord closed form");
    o.detail << " configs=" << configs << " pairs=" << pairs << " chords=" << chords << " max_ratio=" << fmt(ratio)
             << " chord_err=" << fmt(formula);
    return o;
}

Outcome c9_boundary_extension() {
    Outcome o;
    const SurfaceState& circle = generator_suite().front().st;
    const auto rc = boundary_extension_audit(circle, static_cast<std::size_t>(circle.mesh.s), 3);
    o.require(rc.values.at("circle_map") == 1.0, "circle extension is not a circle map");
    const auto loop = wobble_loop(1, 512, 0.1, 2);
    double Bm[2] = {0, 0};
    for (int k = 0; k < 2; ++k) {
        const int m = 16 << k;
        const auto st = plateau_solve(build_state(loop, m, 3 * m, 3.0), 1e-6, 2000);
        if (!st.converged) {
            o.require(false, "wobble m=" + std::to_string(m) + " not converged");
            continue;
        }
        const auto r = boundary_extension_audit(st, static_cast<std::size_t>(st.mesh.s), 3);
        Bm[k] = r.values.at("B");
        o.require(r.pass && std::isfinite(Bm[k]), "wobble certificate m=" + std::to_string(m));
    }
    const double rel = Bm[0] > 0 ? std::abs(Bm[1] / Bm[0] - 1.0) : INFINITY;
    o.require(rel <= 0.2, "certificate stability under refinement");
    o.detail << " circle_map=" << rc.values.at("circle_map") << " B(m=16)=" << fmt(Bm[0]) << " B(m=32)=" << fmt(Bm[1])
             << " change=" << fmt(rel);
    return o;
}

Outcome c10_degeneration() {
    Outcome o;
    const auto loop = rigid_arc_loop(1, 400);
    const auto r = barbot_degeneration(loop, seeded_crown(loop), 60);
    o.require(r.first_below >= 0 && r.first_below <= 60, "rigid arc convergence");
    const auto crown = barbot_crown_standard(1);
    const auto f = barbot_degeneration(crown_graph(crown), crown, 10);
    double fixed = 0.0;
    for (double d : f.hausdorff) fixed = std::max(fixed, d);
    o.require(fixed <= 1e-12, "crown fixed point");
    o.detail << " first_below=" << r.first_below << " final=" << fmt(r.hausdorff.back()) << " crown_drift=" << fmt(fixed);
    return o;
}

Outcome c11_asymptotic() {
    Outcome o;
    const SurfaceState& wobble = generator_suite()[1].st;
    if (!wobble.converged) {
        o.require(false, "wobble not converged");
        return o;
    }
    const auto w = asymptotic_hyperbolicity_audit(wobble);
    o.require(std::abs(w.values.at("outer_ring_mean_K") + 1.0) <= 0.1, "wobble outer ring K");
    const SurfaceState& crown = generator_suite().back().st;
    bool crown_fails = true;
    std::string crown_k = "n/a";
    if (crown.converged) {
        const auto c = asymptotic_hyperbolicity_audit(crown);
        crown_fails = !c.pass;
        crown_k = fmt(c.values.at("outer_ring_mean_K"));
    }
    const auto b = asymptotic_hyperbolicity_audit(barbot_state(barbot_crown_standard(1), 32, 96, 4.0));
    o.require(crown_fails && !b.pass, "crown negative control passed");
    o.detail << " wobble outer K=" << fmt(w.values.at("outer_ring_mean_K")) << " crown outer K=" << crown_k
             << " barbot(R=4) outer K=" << fmt(b.values.at("outer_ring_mean_K"));
    return o;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(PSEUDOPLATEAU_BIN) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome c12_determinism() {
    Outcome o;
    const fs::path root = fs::temp_directory_path() / "pseudoplateau_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    o.require(run_cli("loop-gen --kind c1_wobble --amplitude 0.1 --frequency 3 --out " + root.string()) == 0, "loop-gen");
    const std::string cfg = "solve --loop " + (root / "loop.txt").string() +
                            " --rings 16 --sectors 48 --radius 3 --seed 9"
                            " --audits rigidity,gradient,distance_ratio,gromov,hessian,boundary_extension --out ";
    for (const char* run : {"run1", "run2"}) {
        const int code = run_cli(cfg + (root / run).string());
        o.require(code == 0 || code == 2, std::string(run) + " exit code " + std::to_string(code));
    }
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(root / "run1")) {
        const fs::path other = root / "run2" / e.path().filename();
        o.require(fs::exists(other) && slurp(e.path()) == slurp(other), e.path().filename().string() + " differs");
        ++files;
    }
    o.require(files >= 3, "too few output files");
    o.detail << " files compared=" << files;
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"barbot exactness", c1_barbot_exactness},
        {"barbot maximality", c2_barbot_maximality},
        {"rigidity bounds", c3_rigidity},
        {"gradient bounds", c4_gradient},
        {"spatial distance", c5_spatial_distance},
        {"plateau uniqueness", c6_uniqueness},
        {"cross-ratio identities", c7_cross_ratio},
        {"contraction lemma", c8_contraction},
        {"boundary extension", c9_boundary_extension},
        {"barbot degeneration", c10_degeneration},
        {"asymptotic hyperbolicity", c11_asymptotic},
        {"determinism", c12_determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ":" << o.detail.str()
                  << " (" << fmt(secs) << " s)" << std::endl;
        failed += o.pass ? 0 : 1;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
              << std::endl;
    return failed == 0 ? 0 : 1;
}
