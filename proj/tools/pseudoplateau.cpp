#include "h2n/diagnostics.hpp"
#include "h2n/einstein.hpp"
#include "h2n/plateau.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 2;
constexpr int kInvalid = 3;

// Input problems that map to exit code 3.
struct InvalidInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

const std::vector<std::string> kAllAudits{"rigidity", "gradient", "distance_ratio", "gromov",
                                          "asymptotic", "hessian", "boundary_extension"};

json num(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void save_loop(const fs::path& path, const h2n::LipschitzLoop& loop) {
    std::ostringstream s;
    h2n::write_loop(s, loop);
    write_text(path, s.str());
}

std::string csv_number(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

void prepare_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InvalidInput("cannot create output directory " + dir);
}

h2n::LipschitzLoop read_loop_file(const std::string& path) {
    if (!fs::exists(path)) throw InvalidInput("loop file not found: " + path);
    return h2n::load_loop(path);
}

json loop_summary(const h2n::LipschitzLoop& loop) {
    const h2n::LoopClass cls = h2n::loop_classify(loop);
    json j{{"n", loop.n()}, {"samples", loop.size()}, {"classification", h2n::to_string(cls)},
           {"lipschitz_margin", num(loop.lipschitz_margin())}, {"smooth", loop.smooth()}};
    if (cls != h2n::LoopClass::invalid) j["photon_arcs"] = h2n::photon_arcs(loop).size();
    return j;
}

// --- loop-gen ------------------------------------------------------------------------------

struct LoopGenOptions {
    std::string kind = "circle";
    int n = 1;
    std::size_t samples = 512;
    double amplitude = 0.1;
    int frequency = 3;
    std::vector<double> sin_coeffs, cos_coeffs;
    std::string out = "out";
};

int cmd_loop_gen(const LoopGenOptions& o) {
    h2n::LipschitzLoop loop = [&] {
        if (o.kind == "circle") return h2n::circle_loop(o.n, o.samples);
        if (o.kind == "c1_wobble") return h2n::wobble_loop(o.n, o.samples, o.amplitude, o.frequency);
        if (o.kind == "rigid_arc") return h2n::rigid_arc_loop(o.n, o.samples);
        if (o.kind == "crown") return h2n::crown_loop(o.n, o.samples);
        if (o.kind == "custom") return h2n::fourier_loop(o.n, o.samples, o.sin_coeffs, o.cos_coeffs);
        throw InvalidInput("unknown loop kind " + o.kind);
    }();
    const json summary = loop_summary(loop);
    if (summary["classification"] == "invalid") throw InvalidInput("generator parameters give an invalid loop");
    prepare_dir(o.out);
    save_loop(fs::path(o.out) / "loop.txt", loop);
    json report{{"command", "loop-gen"},
                {"config", {{"kind", o.kind}, {"n", o.n}, {"samples", o.samples}, {"amplitude", o.amplitude},
                            {"frequency", o.frequency}, {"sin", o.sin_coeffs}, {"cos", o.cos_coeffs}}},
                {"loop", summary}};
    write_json(fs::path(o.out) / "report.json", report);
    std::cout << "loop " << o.kind << ": " << summary["classification"].get<std::string>()
              << ", lipschitz margin " << loop.lipschitz_margin() << '\n';
    return kOk;
}

// --- audits --------------------------------------------------------------------------------

struct AuditOptions {
    std::vector<std::string> audits;
    std::uint64_t seed = 1;
    std::size_t gradient_boundary = 16;
    std::size_t distance_pairs = 200;
    std::size_t gromov_triples = 200;
    std::size_t hessian_samples = 200;
};

std::vector<std::string> expand_audits(const std::vector<std::string>& requested) {
    std::vector<std::string> out;
    for (const auto& a : requested) {
        if (a == "all") return kAllAudits;
        if (a == "none") continue;
        if (std::find(kAllAudits.begin(), kAllAudits.end(), a) == kAllAudits.end())
            throw InvalidInput("unknown audit " + a);
        if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
    }
    return out;
}

h2n::AuditReport run_audit(const std::string& name, const h2n::SurfaceState& st, const AuditOptions& o) {
    if (name == "rigidity") return h2n::rigidity_audit(st);
    if (name == "gradient") return h2n::gradient_audit(st, o.gradient_boundary, o.seed);
    if (name == "distance_ratio") return h2n::distance_ratio_audit(st, o.distance_pairs, o.seed);
    if (name == "gromov") return h2n::gromov_audit(st, o.gromov_triples, o.seed);
    if (name == "asymptotic") return h2n::asymptotic_hyperbolicity_audit(st);
    if (name == "hessian") {
        if (!st.loop) throw InvalidInput("hessian audit needs the boundary loop");
        return h2n::hessian_audit(st, st.loop->point(0.0), o.hessian_samples, o.seed);
    }
    return h2n::boundary_extension_audit(st, static_cast<std::size_t>(st.mesh.s), o.seed);
}

// Plot data next to the report: per-ring K profile, gradient histogram, distance scatter, extension map.
void write_plot_data(const fs::path& dir, const h2n::AuditReport& r) {
    auto column = [&](const char* key) -> const std::vector<double>& { return r.series.at(key); };
    if (r.audit == "rigidity") {
        std::string s = "ring,mean_K\n";
        const auto& k = column("ring_mean_K");
        for (std::size_t i = 0; i < k.size(); ++i) s += std::to_string(i) + "," + csv_number(k[i]) + "\n";
        write_text(dir / "k_profile.csv", s);
    } else if (r.audit == "gradient") {
        std::string s = "bin_low,bin_high,count\n";
        const auto& h = column("grad2_histogram");
        for (std::size_t i = 0; i < h.size(); ++i)
            s += csv_number(0.9 + 0.05 * static_cast<double>(i)) + "," + csv_number(0.9 + 0.05 * static_cast<double>(i + 1)) +
                 "," + csv_number(h[i]) + "\n";
        write_text(dir / "gradient_histogram.csv", s);
    } else if (r.audit == "distance_ratio") {
        std::string s = "graph_distance,spatial_distance,ratio\n";
        const auto& g = column("graph_distance");
        const auto& d = column("spatial_distance");
        for (std::size_t i = 0; i < g.size(); ++i) s += csv_number(g[i]) + "," + csv_number(d[i]) + "," + csv_number(d[i] / g[i]) + "\n";
        write_text(dir / "distance_scatter.csv", s);
    } else if (r.audit == "boundary_extension") {
        std::string s = "domain_angle,image_angle\n";
        const auto& a = column("domain_angle");
        const auto& b = column("image_angle");
        for (std::size_t i = 0; i < a.size(); ++i) s += csv_number(a[i]) + "," + csv_number(b[i]) + "\n";
        write_text(dir / "extension_map.csv", s);
    }
}

// Runs the audits, writes plot data, and returns (all passed, JSON array).
std::pair<bool, json> audit_state(const h2n::SurfaceState& st, const AuditOptions& o, const fs::path& dir) {
    bool all = true;
    json arr = json::array();
    for (const auto& name : expand_audits(o.audits)) {
        const h2n::AuditReport r = run_audit(name, st, o);
        write_plot_data(dir, r);
        arr.push_back(h2n::to_json(r));
        all = all && r.pass;
        std::cout << "audit " << r.audit << ": " << (r.pass ? "pass" : "FAIL") << '\n';
        for (const auto& c : r.checks)
            std::cout << "  " << c.name << " = " << c.value << ' ' << c.relation << ' ' << c.threshold
                      << (c.pass ? "" : "  (failed)") << '\n';
    }
    return {all, arr};
}

// --- solve ---------------------------------------------------------------------------------

struct SolveOptions {
    std::string loop;
    int rings = 32;
    int sectors = 96;
    double radius = 4.0;
    double tol = 1e-6;
    int max_iter = 2000;
    double dt0 = 0.2;
    std::string out = "out";
    AuditOptions audit;
};

json solver_json(const h2n::SurfaceState& st) {
    const auto& D = st.diag;
    json dt{{"steps", D.dt_history.size()}};
    if (!D.dt_history.empty()) {
        const auto [lo, hi] = std::minmax_element(D.dt_history.begin(), D.dt_history.end());
        dt["min"] = *lo;
        dt["max"] = *hi;
        dt["mean"] = std::accumulate(D.dt_history.begin(), D.dt_history.end(), 0.0) / static_cast<double>(D.dt_history.size());
        dt["last"] = D.dt_history.back();
    }
    json j{{"converged", st.converged},
           {"iterations", D.iterations},
           {"final_residual", num(D.final_residual)},
           {"halvings", D.halvings},
           {"dt", dt},
           {"boundary_mode", st.boundary_mode}};
    if (!D.failure.empty()) j["failure"] = D.failure;
    return j;
}

int cmd_solve(const SolveOptions& o) {
    if (o.rings <= 0 || o.sectors <= 0 || !(o.radius > 0) || !(o.tol > 0) || !(o.dt0 > 0))
        throw InvalidInput("rings, sectors, radius, tol and dt0 must be positive");
    expand_audits(o.audit.audits);
    const h2n::LipschitzLoop loop = read_loop_file(o.loop);
    h2n::SurfaceState st = h2n::build_state(loop, o.rings, o.sectors, o.radius);
    st = h2n::plateau_solve(std::move(st), o.tol, o.max_iter, o.dt0);
    prepare_dir(o.out);
    const fs::path dir(o.out);
    h2n::save_state((dir / "state.txt").string(), st);
    save_loop(dir / "loop.txt", loop);
    {
        std::string s = "iteration,residual\n";
        for (std::size_t i = 0; i < st.diag.residual_history.size(); ++i)
            s += std::to_string(i) + "," + csv_number(st.diag.residual_history[i]) + "\n";
        write_text(dir / "residual.csv", s);
    }
    json report{{"command", "solve"},
                {"config",
                 {{"loop", o.loop}, {"rings", o.rings}, {"sectors", o.sectors}, {"radius", o.radius}, {"tol", o.tol},
                  {"max_iter", o.max_iter}, {"dt0", o.dt0}, {"audits", o.audit.audits}, {"seed", o.audit.seed}}},
                {"loop", loop_summary(loop)},
                {"solver", solver_json(st)}};
    std::cout << (st.converged ? "converged" : "not converged") << " after " << st.diag.iterations
              << " iterations, residual " << st.diag.final_residual << '\n';
    if (st.converged) {
        auto [pass, audits] = audit_state(st, o.audit, dir);
        report["audits"] = audits;
        report["audits_pass"] = pass;
    }
    write_json(dir / "report.json", report);
    return st.converged ? kOk : kFailed;
}

// --- analytic ------------------------------------------------------------------------------

struct AnalyticOptions {
    std::string surface = "geodesic";
    int n = 1;
    int rings = 32;
    int sectors = 96;
    double radius = 4.0;
    std::string out = "out";
};

int cmd_analytic(const AnalyticOptions& o) {
    if (o.rings <= 1 || o.sectors < 3 || !(o.radius > 0)) throw InvalidInput("need rings >= 2, sectors >= 3, radius > 0");
    h2n::SurfaceState st = [&] {
        if (o.surface == "geodesic") return h2n::geodesic_disk_state(o.n, o.rings, o.sectors, o.radius);
        if (o.surface == "barbot") return h2n::barbot_state(h2n::barbot_crown_standard(o.n), o.rings, o.sectors, o.radius);
        throw InvalidInput("unknown analytic surface " + o.surface);
    }();
    prepare_dir(o.out);
    const fs::path dir(o.out);
    h2n::save_state((dir / "state.txt").string(), st);
    if (st.loop) save_loop(dir / "loop.txt", *st.loop);
    const h2n::Mat rho = h2n::mean_curvature_residual(st);
    json report{{"command", "analytic"},
                {"config", {{"surface", o.surface}, {"n", o.n}, {"rings", o.rings}, {"sectors", o.sectors}, {"radius", o.radius}}},
                {"mean_curvature_residual", num(h2n::max_residual_norm(st, rho))}};
    write_json(dir / "report.json", report);
    std::cout << o.surface << " surface written, mean curvature residual " << h2n::max_residual_norm(st, rho) << '\n';
    return kOk;
}

// --- audit ---------------------------------------------------------------------------------

struct AuditCommandOptions {
    std::string state;
    std::string loop;
    std::string out = "out";
    AuditOptions audit;
};

int cmd_audit(const AuditCommandOptions& o) {
    expand_audits(o.audit.audits);
    if (!fs::exists(o.state)) throw InvalidInput("state file not found: " + o.state);
    h2n::SurfaceState st = h2n::load_state(o.state);
    if (!st.converged && !st.analytic) throw InvalidInput("state is not converged");
    std::string loop_path = o.loop;
    if (loop_path.empty()) {
        const fs::path sibling = fs::path(o.state).parent_path() / "loop.txt";
        if (fs::exists(sibling)) loop_path = sibling.string();
    }
    if (!loop_path.empty()) {
        h2n::LipschitzLoop loop = read_loop_file(loop_path);
        if (loop.n() != st.n) throw InvalidInput("loop and state dimensions differ");
        st.loop = std::move(loop);
    }
    prepare_dir(o.out);
    auto [pass, audits] = audit_state(st, o.audit, fs::path(o.out));
    json report{{"command", "audit"},
                {"config", {{"state", o.state}, {"loop", loop_path}, {"audits", o.audit.audits}, {"seed", o.audit.seed}}},
                {"audits", audits},
                {"pass", pass}};
    write_json(fs::path(o.out) / "report.json", report);
    return pass ? kOk : kFailed;
}

void add_audit_flags(CLI::App* app, AuditOptions& a) {
    app->add_option("--audits", a.audits, "Audits to run: all, none, or any of " + [] {
        std::string s;
        for (const auto& x : kAllAudits) s += (s.empty() ? "" : ", ") + x;
        return s;
    }())->delimiter(',');
    app->add_option("--seed", a.seed, "Random seed for sampled audits");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Maximal surfaces in H^{2,n}: loop generation, asymptotic Plateau solving, and audits"};
    app.require_subcommand(1);

    LoopGenOptions gen;
    auto* g = app.add_subcommand("loop-gen", "Write a boundary loop file");
    g->add_option("--kind", gen.kind, "circle, c1_wobble, rigid_arc, crown or custom")
        ->check(CLI::IsMember({"circle", "c1_wobble", "rigid_arc", "crown", "custom"}));
    g->add_option("--n", gen.n, "Fiber sphere dimension");
    g->add_option("--samples", gen.samples, "Number of samples");
    g->add_option("--amplitude", gen.amplitude, "Wobble amplitude");
    g->add_option("--frequency", gen.frequency, "Wobble frequency");
    g->add_option("--sin", gen.sin_coeffs, "Custom loop: sine coefficients of the fiber angle")->delimiter(',');
    g->add_option("--cos", gen.cos_coeffs, "Custom loop: cosine coefficients of the fiber angle")->delimiter(',');
    g->add_option("--out", gen.out, "Output directory");

    SolveOptions solve;
    solve.audit.audits = {"none"};
    auto* s = app.add_subcommand("solve", "Solve the asymptotic Plateau problem for a loop");
    s->add_option("--loop", solve.loop, "Loop file")->required();
    s->add_option("--rings", solve.rings, "Mesh rings m");
    s->add_option("--sectors", solve.sectors, "Mesh sectors s");
    s->add_option("--radius", solve.radius, "Truncation radius R");
    s->add_option("--tol", solve.tol, "Residual tolerance");
    s->add_option("--max-iter", solve.max_iter, "Iteration limit");
    s->add_option("--dt0", solve.dt0, "Initial step size");
    s->add_option("--out", solve.out, "Output directory");
    add_audit_flags(s, solve.audit);

    AnalyticOptions an;
    auto* a = app.add_subcommand("analytic", "Write an analytically sampled surface");
    a->add_option("--surface", an.surface, "geodesic or barbot")->check(CLI::IsMember({"geodesic", "barbot"}));
    a->add_option("--n", an.n, "Fiber sphere dimension");
    a->add_option("--rings", an.rings, "Mesh rings m");
    a->add_option("--sectors", an.sectors, "Mesh sectors s");
    a->add_option("--radius", an.radius, "Truncation radius R");
    a->add_option("--out", an.out, "Output directory");

    AuditCommandOptions au;
    au.audit.audits = {"all"};
    auto* d = app.add_subcommand("audit", "Run diagnostics on a converged state");
    d->add_option("--state", au.state, "State file")->required();
    d->add_option("--loop", au.loop, "Loop file (default: loop.txt next to the state)");
    d->add_option("--out", au.out, "Output directory");
    add_audit_flags(d, au.audit);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        if (*g) return cmd_loop_gen(gen);
        if (*s) return cmd_solve(solve);
        if (*a) return cmd_analytic(an);
        return cmd_audit(au);
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const h2n::DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    }
}
