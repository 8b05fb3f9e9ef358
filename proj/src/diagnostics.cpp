#include "h2n/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <random>
#include <map>
#include <set>

namespace h2n {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

std::vector<double> ring_means(const SurfaceState& st, const Vec& K) {
    std::vector<double> out(static_cast<std::size_t>(st.mesh.m + 1), std::numeric_limits<double>::quiet_NaN());
    out[0] = K(0);
    for (int i = 1; i <= st.mesh.m; ++i) {
        double sum = 0.0;
        int cnt = 0;
        for (int j = 0; j < st.mesh.s; ++j) {
            const double k = K(st.mesh.index(i, j));
            if (std::isfinite(k)) {
                sum += k;
                ++cnt;
            }
        }
        if (cnt > 0) out[static_cast<std::size_t>(i)] = sum / cnt;
    }
    return out;
}

}  // namespace

void AuditReport::check_le(const std::string& name, double value, double threshold) {
    checks.push_back({name, value, "<=", threshold, value <= threshold});
}

void AuditReport::check_ge(const std::string& name, double value, double threshold) {
    checks.push_back({name, value, ">=", threshold, value >= threshold});
}

void AuditReport::finalize() {
    pass = !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const AuditCheck& c) { return c.pass; });
}

nlohmann::json to_json(const AuditReport& r) {
    nlohmann::json j;
    j["audit"] = r.audit;
    j["pass"] = r.pass;
    j["samples"] = r.samples;
    j["seed"] = r.seed;
    auto num = [](double v) -> nlohmann::json {
        if (std::isfinite(v)) return v;
        return nullptr;
    };
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name}, {"value", num(c.value)}, {"relation", c.relation}, {"threshold", c.threshold}, {"pass", c.pass}});
    j["checks"] = checks;
    nlohmann::json values = nlohmann::json::object();
    for (const auto& [k, v] : r.values) values[k] = num(v);
    j["values"] = values;
    if (!r.notes.empty()) j["notes"] = r.notes;
    return j;
}

void require_converged(const SurfaceState& st, const char* audit) {
    if (!st.converged && !st.analytic) throw DomainError(std::string(audit) + ": state is not converged");
}

std::vector<int> audited_vertices(const SurfaceState& st) {
    std::vector<int> out;
    for (int v = 0; v < st.mesh.vertex_count(); ++v)
        if (st.mesh.ring(v) <= st.mesh.m - 2) out.push_back(v);
    return out;
}

AuditReport rigidity_audit(const SurfaceState& st) {
    require_converged(st, "rigidity_audit");
    const DiscreteGeometry G = discrete_geometry(st);
    AuditReport r;
    r.audit = "rigidity";
    double kmax = -std::numeric_limits<double>::infinity(), kmin = std::numeric_limits<double>::infinity();
    double iimax = -std::numeric_limits<double>::infinity(), gauss_gap = 0.0;
    for (int v : audited_vertices(st)) {
        kmax = std::max(kmax, G.K(v));
        kmin = std::min(kmin, G.K(v));
        iimax = std::max(iimax, G.II2_fit(v));
        gauss_gap = std::max(gauss_gap, std::abs(G.II2_fit(v) - G.II2_gauss(v)));
        ++r.samples;
    }
    r.values["min_K"] = kmin;
    r.values["max_K"] = kmax;
    r.values["max_II2"] = iimax;
    r.values["max_gauss_discrepancy"] = gauss_gap;
    r.check_le("max_K", kmax, 5e-2);
    r.check_le("max_II2", iimax, 2.0 + 1e-1);
    r.series["ring_mean_K"] = ring_means(st, G.K);
    r.finalize();
    return r;
}

AuditReport gradient_audit(const SurfaceState& st, std::size_t boundary_samples, std::uint64_t seed) {
    require_converged(st, "gradient_audit");
    if (!st.loop) throw DomainError("gradient_audit: state has no boundary loop");
    if (boundary_samples == 0) throw DomainError("gradient_audit: need at least one boundary sample");
    const DiscreteGeometry G = discrete_geometry(st);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, kTwoPi);
    std::vector<Horofunction> horo;
    for (std::size_t i = 0; i < boundary_samples; ++i) horo.push_back(Horofunction::from_vector(st.loop->point(angle(rng))));

    AuditReport r;
    r.audit = "gradient";
    r.seed = seed;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, kmax = -lo;
    std::size_t skipped = 0;
    std::vector<double> hist(24, 0.0);  // bins of width 0.05 on [0.9, 2.1]
    for (int v : audited_vertices(st)) {
        kmax = std::max(kmax, G.K(v));
        const VertexFrame& fr = G.frames[static_cast<std::size_t>(v)];
        if (!fr.ok) continue;
        const std::vector<Vec> frame{fr.e[0], fr.e[1]};
        for (const auto& h : horo) {
            Vec grad;
            try {
                grad = h.gradient(fr.x, frame);
            } catch (const DomainError&) {
                ++skipped;
                continue;
            }
            const double g2 = quad(grad);
            lo = std::min(lo, g2);
            hi = std::max(hi, g2);
            const auto bin = static_cast<long>(std::floor((g2 - 0.9) / 0.05));
            hist[static_cast<std::size_t>(std::clamp(bin, 0L, 23L))] += 1.0;
            ++r.samples;
        }
    }
    r.values["min_grad2"] = lo;
    r.values["max_grad2"] = hi;
    r.values["two_minus_c"] = 2.0 + kmax;  // c = -max K
    r.values["skipped"] = static_cast<double>(skipped);
    r.check_ge("min_grad2", lo, 1.0 - 1e-2);
    r.check_le("max_grad2", hi, 2.0 + 5e-2);
    r.series["grad2_histogram"] = hist;
    r.finalize();
    return r;
}

SurfaceGraph::SurfaceGraph(const SurfaceState& st, int steiner) : vertices_(st.mesh.vertex_count()) {
    if (steiner < 0) throw DomainError("SurfaceGraph: steiner count must be nonnegative");
    std::vector<Vec> pos;
    for (int v = 0; v < vertices_; ++v) pos.push_back(st.position(v));
    std::map<std::pair<int, int>, int> edge_first;
    auto edge_nodes = [&](int a, int b) {
        // Nodes along edge a -> b, endpoints included.
        const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
        auto it = edge_first.find(key);
        if (it == edge_first.end()) {
            it = edge_first.emplace(key, static_cast<int>(pos.size())).first;
            for (int k = 1; k <= steiner; ++k) {
                const double t = static_cast<double>(k) / (steiner + 1);
                pos.push_back(normalize_timelike((1.0 - t) * st.position(key.first) + t * st.position(key.second)));
            }
        }
        std::vector<int> out{key.first};
        for (int k = 0; k < steiner; ++k) out.push_back(it->second + k);
        out.push_back(key.second);
        if (key.first != a) std::reverse(out.begin(), out.end());
        return out;
    };
    std::vector<std::vector<int>> face_nodes;
    for (const auto& F : st.mesh.faces) {
        std::set<int> nodes;
        for (int k = 0; k < 3; ++k)
            for (int x : edge_nodes(F[k], F[(k + 1) % 3])) nodes.insert(x);
        face_nodes.emplace_back(nodes.begin(), nodes.end());
    }
    adj_.assign(pos.size(), {});
    for (const auto& nodes : face_nodes)
        for (std::size_t i = 0; i < nodes.size(); ++i)
            for (std::size_t j = i + 1; j < nodes.size(); ++j) {
                const int a = nodes[i], b = nodes[j];
                // Spatial distance on the quadric: q(x - y) = 4 sinh^2(d / 2).
                const double chord = std::sqrt(std::max(quad(Vec(pos[static_cast<std::size_t>(a)] - pos[static_cast<std::size_t>(b)])), 0.0));
                const double len = 2.0 * std::asinh(0.5 * chord);
                adj_[static_cast<std::size_t>(a)].push_back({b, len});
                adj_[static_cast<std::size_t>(b)].push_back({a, len});
            }
}

std::vector<double> SurfaceGraph::distances(int source) const {
    std::vector<double> dist(adj_.size(), std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[static_cast<std::size_t>(source)] = 0.0;
    pq.push({0.0, source});
    while (!pq.empty()) {
        const auto [d, v] = pq.top();
        pq.pop();
        if (d > dist[static_cast<std::size_t>(v)]) continue;
        for (const auto& [w, len] : adj_[static_cast<std::size_t>(v)])
            if (d + len < dist[static_cast<std::size_t>(w)]) {
                dist[static_cast<std::size_t>(w)] = d + len;
                pq.push({d + len, w});
            }
    }
    dist.resize(static_cast<std::size_t>(vertices_));
    return dist;
}

AuditReport distance_ratio_audit(const SurfaceState& st, std::size_t pairs, std::uint64_t seed) {
    require_converged(st, "distance_ratio_audit");
    const std::vector<int> verts = audited_vertices(st);
    if (verts.size() < 2 || pairs == 0) throw DomainError("distance_ratio_audit: nothing to sample");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, verts.size() - 1);
    AuditReport r;
    r.audit = "distance_ratio";
    r.seed = seed;
    const SurfaceGraph graph(st);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    std::vector<double> dgraph, dspatial;
    // Ten targets per Dijkstra source.
    constexpr std::size_t kTargets = 10;
    while (r.samples < pairs) {
        const int a = verts[pick(rng)];
        const std::vector<double> dist = graph.distances(a);
        for (std::size_t k = 0; k < kTargets && r.samples < pairs;) {
            const int b = verts[pick(rng)];
            if (a == b) continue;
            const double d = dist[static_cast<std::size_t>(b)];
            const double sd = spatial_distance(st.position(a), st.position(b));
            const double ratio = sd / d;
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
            dgraph.push_back(d);
            dspatial.push_back(sd);
            ++r.samples;
            ++k;
        }
    }
    const double eps = 0.1;
    r.values["min_ratio"] = lo;
    r.values["max_ratio"] = hi;
    r.check_le("max_ratio", hi, std::numbers::sqrt2 * (1.0 + eps));
    r.check_ge("min_ratio", lo, 1.0 / (1.0 + eps));
    r.series["graph_distance"] = dgraph;
    r.series["spatial_distance"] = dspatial;
    r.finalize();
    return r;
}

AuditReport gromov_audit(const SurfaceState& st, std::size_t triples, std::uint64_t seed) {
    require_converged(st, "gromov_audit");
    const std::vector<int> verts = audited_vertices(st);
    if (verts.size() < 3 || triples == 0) throw DomainError("gromov_audit: nothing to sample");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, verts.size() - 1);
    std::uniform_real_distribution<double> angle(0.0, kTwoPi), coin(0.0, 1.0);
    AuditReport r;
    r.audit = "gromov";
    r.seed = seed;

    // Finite M1 over x on the surface and z, w on the surface or its boundary loop.
    double m1 = 0.0;
    auto draw = [&]() -> Vec {
        if (st.loop && coin(rng) < 1.0 / 3.0) return st.loop->point(angle(rng));
        return st.position(verts[pick(rng)]);
    };
    for (std::size_t k = 0; k < triples; ++k) {
        const Vec x = st.position(verts[pick(rng)]);
        const Vec z = draw(), w = draw();
        const double den = bilinear(z, x) * bilinear(x, w);
        if (std::abs(den) < 1e-300) continue;
        m1 = std::max(m1, std::abs(bilinear(z, w) / den));
    }
    // Triangle slack of the spatial distance, with the per-sample bound log(2 M1(x, y; z)).
    double slack = -std::numeric_limits<double>::infinity();
    std::size_t violations = 0;
    for (std::size_t k = 0; k < triples; ++k) {
        const Vec x = st.position(verts[pick(rng)]), y = st.position(verts[pick(rng)]), z = st.position(verts[pick(rng)]);
        const double s = spatial_distance(x, y) - spatial_distance(x, z) - spatial_distance(z, y);
        const double local = std::abs(bilinear(x, y) / (bilinear(x, z) * bilinear(z, y)));
        m1 = std::max(m1, local);
        if (s > std::log(2.0 * local) + 1e-9) ++violations;
        slack = std::max(slack, s);
        ++r.samples;
    }
    r.values["M1"] = m1;
    r.values["max_slack"] = slack;
    r.values["per_sample_violations"] = static_cast<double>(violations);
    r.check_le("max_slack", slack, std::log(2.0 * m1) + 1e-6);
    r.check_le("M1_finite", std::isfinite(m1) ? 0.0 : 1.0, 0.0);
    r.check_le("per_sample_violations", static_cast<double>(violations), 0.0);
    r.finalize();
    return r;
}

AuditReport asymptotic_hyperbolicity_audit(const SurfaceState& st) {
    require_converged(st, "asymptotic_hyperbolicity_audit");
    const DiscreteGeometry G = discrete_geometry(st);
    const std::vector<double> rings = ring_means(st, G.K);
    const int m = st.mesh.m;
    AuditReport r;
    r.audit = "asymptotic_hyperbolicity";
    r.samples = static_cast<std::size_t>(m - 1);
    if (!st.loop || !st.loop->smooth()) r.notes.emplace_back("boundary loop is not flagged smooth");
    const double outer = rings[static_cast<std::size_t>(m - 2)];
    double worst_rise = 0.0;
    for (int i = std::max(1, m / 2); i < m - 2; ++i)
        worst_rise = std::max(worst_rise, std::abs(rings[static_cast<std::size_t>(i + 1)] + 1.0) -
                                              std::abs(rings[static_cast<std::size_t>(i)] + 1.0));
    r.values["outer_ring_mean_K"] = outer;
    r.values["radius"] = st.mesh.R;
    r.values["max_monotonicity_violation"] = worst_rise;
    r.check_le("outer_ring_K_deviation", std::abs(outer + 1.0), 0.1);
    r.check_ge("radius", st.mesh.R, 4.0);
    r.check_le("max_monotonicity_violation", worst_rise, 2e-2);
    r.series["ring_mean_K"] = rings;
    r.finalize();
    return r;
}

AuditReport hessian_audit(const SurfaceState& st, const Vec& z, std::size_t samples, std::uint64_t seed) {
    require_converged(st, "hessian_audit");
    if (z.size() != st.dim()) throw DomainError("hessian_audit: dimension mismatch");
    const std::vector<VertexFrame> frames = vertex_frames(st);
    const DiskMesh& M = st.mesh;
    std::vector<int> verts;
    for (int v = 0; v < M.vertex_count(); ++v)
        if (M.ring(v) >= 2 && M.ring(v) <= M.m - 3) verts.push_back(v);
    if (verts.empty() || samples == 0) throw DomainError("hessian_audit: nothing to sample");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, verts.size() - 1);
    std::uniform_real_distribution<double> angle(0.0, kTwoPi);

    AuditReport r;
    r.audit = "hessian";
    r.seed = seed;
    std::vector<double> errors;
    std::size_t skipped = 0;
    for (std::size_t k = 0; k < samples; ++k) {
        const int v = verts[pick(rng)];
        const double psi = angle(rng);
        const VertexFrame& fr = frames[static_cast<std::size_t>(v)];
        const double pxz = bilinear(fr.x, z);
        if (!fr.ok || std::abs(pxz) <= 1e-9 * z.norm()) {
            ++skipped;
            continue;
        }
        const auto& nb = M.neighbors[static_cast<std::size_t>(v)];
        bool ok = true;
        Eigen::MatrixXd A(static_cast<Eigen::Index>(nb.size()), 5);
        Eigen::VectorXd y(static_cast<Eigen::Index>(nb.size()));
        const double h0 = std::log(std::abs(pxz));
        const Eigen::Vector2d P0 = M.param(v);
        for (std::size_t i = 0; i < nb.size(); ++i) {
            const double p = bilinear(st.position(nb[i]), z);
            if (p * pxz <= 0) ok = false;
            const Eigen::Vector2d d = M.param(nb[i]) - P0;
            A.row(static_cast<Eigen::Index>(i)) << d(0), d(1), 0.5 * d(0) * d(0), d(0) * d(1), 0.5 * d(1) * d(1);
            y(static_cast<Eigen::Index>(i)) = std::log(std::abs(p)) - h0;
        }
        if (!ok) {
            ++skipped;
            continue;
        }
        const Eigen::VectorXd c = A.colPivHouseholderQr().solve(y);
        Eigen::Matrix2d Hh;
        Hh << c(2), c(3), c(3), c(4);
        const Eigen::Vector2d dh(c(0), c(1));
        const Eigen::Vector2d dir = fr.S * Eigen::Vector2d(std::cos(psi), std::sin(psi));  // unit direction in the chart
        const Eigen::Matrix2d ginv = fr.g.inverse();
        double lhs = dir.dot(Hh * dir);
        for (int kk = 0; kk < 2; ++kk) {
            double gamma = 0.0;  // Gamma^k(dir, dir)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    for (int l = 0; l < 2; ++l)
                        gamma += dir(i) * dir(j) * ginv(kk, l) *
                                 bilinear(fr.H_raw[static_cast<std::size_t>(i + j)], fr.J[static_cast<std::size_t>(l)]);
            lhs -= gamma * dh(kk);
        }
        const Vec u = dir(0) * fr.J[0] + dir(1) * fr.J[1];
        Vec IIuu = Vec::Zero(st.dim());
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) IIuu += dir(i) * dir(j) * fr.H[static_cast<std::size_t>(i + j)];
        const double dhu = bilinear(u, z) / pxz;
        const double beta = bilinear(IIuu, z) / pxz;
        const double rhs = quad(u) - dhu * dhu + beta;
        errors.push_back(std::abs(lhs - rhs) / (quad(u) + dhu * dhu + std::abs(beta)));
        ++r.samples;
    }
    const double med = median(errors);
    r.values["median_relative_error"] = med;
    r.values["skipped"] = static_cast<double>(skipped);
    if (skipped > 0) r.notes.push_back(std::to_string(skipped) + " samples skipped (x orthogonal to z or incomplete star)");
    r.check_le("median_relative_error", errors.empty() ? std::numeric_limits<double>::infinity() : med, 0.15);
    r.finalize();
    return r;
}

// ---------------------------------------------------------------------------------------------
// Discrete conformal flattening

namespace {

struct HypTriangle {
    std::array<double, 3> angle{};     // angle at corner k (opposite edge k)
    std::array<std::array<double, 3>, 3> dA{};  // dA[k][e] = d angle_k / d length_e
    bool valid = false;
};

HypTriangle hyperbolic_triangle(const std::array<double, 3>& l) {
    HypTriangle t;
    for (int k = 0; k < 3; ++k) {
        const double a = l[k], b = l[(k + 1) % 3], c = l[(k + 2) % 3];
        if (!(a < b + c)) return t;
    }
    for (int k = 0; k < 3; ++k) {
        const double a = l[k], b = l[(k + 1) % 3], c = l[(k + 2) % 3];
        const double cA = (std::cosh(b) * std::cosh(c) - std::cosh(a)) / (std::sinh(b) * std::sinh(c));
        t.angle[k] = std::acos(std::clamp(cA, -1.0, 1.0));
    }
    for (int k = 0; k < 3; ++k) {
        const int k1 = (k + 1) % 3, k2 = (k + 2) % 3;
        const double a = l[k], b = l[k1], c = l[k2];
        const double da = std::sinh(a) / (std::sinh(b) * std::sinh(c) * std::sin(t.angle[k]));
        t.dA[k][k] = da;
        t.dA[k][k1] = -da * std::cos(t.angle[k2]);  // b is opposite corner k1; the adjacent angle is at k2
        t.dA[k][k2] = -da * std::cos(t.angle[k1]);
    }
    t.valid = std::isfinite(t.dA[0][0]) && std::isfinite(t.dA[1][1]) && std::isfinite(t.dA[2][2]);
    return t;
}

struct FlatSystem {
    Vec F;
    Eigen::SparseMatrix<double> Jac;
    bool valid = true;
};

}  // namespace

FlatteningResult discrete_flattening(const SurfaceState& st, double tol, int max_iter) {
    const DiskMesh& M = st.mesh;
    const int V = M.vertex_count();
    std::vector<std::array<double, 3>> base;  // hyperbolic length of the edge opposite each corner
    for (const auto& F : M.faces) {
        std::array<double, 3> l{};
        for (int k = 0; k < 3; ++k)
            l[k] = spatial_distance(st.position(F[(k + 1) % 3]), st.position(F[(k + 2) % 3]));
        base.push_back(l);
    }
    auto lengths = [&](const Vec& u, std::size_t f) {
        std::array<double, 3> l{};
        const auto& F = M.faces[f];
        for (int k = 0; k < 3; ++k) {
            const int i = F[(k + 1) % 3], j = F[(k + 2) % 3];
            l[k] = 2.0 * std::asinh(std::exp(0.5 * (u(i) + u(j))) * std::sinh(0.5 * base[f][k]));
        }
        return l;
    };
    auto system = [&](const Vec& u, bool with_jacobian) {
        FlatSystem S;
        S.F = Vec::Zero(V);
        std::vector<Eigen::Triplet<double>> trip;
        for (std::size_t f = 0; f < M.faces.size(); ++f) {
            const auto& F = M.faces[f];
            const auto l = lengths(u, f);
            const HypTriangle t = hyperbolic_triangle(l);
            if (!t.valid) {
                S.valid = false;
                return S;
            }
            for (int k = 0; k < 3; ++k) S.F(F[k]) += t.angle[k];
            if (!with_jacobian) continue;
            // d length_e / d u_i = tanh(length_e / 2) for both endpoints of edge e.
            for (int k = 0; k < 3; ++k)
                for (int e = 0; e < 3; ++e) {
                    const double dl = std::tanh(0.5 * l[e]) * t.dA[k][e];
                    trip.emplace_back(F[k], F[(e + 1) % 3], dl);
                    trip.emplace_back(F[k], F[(e + 2) % 3], dl);
                }
        }
        if (with_jacobian) {
            S.Jac.resize(V, V);
            S.Jac.setFromTriplets(trip.begin(), trip.end());
        }
        return S;
    };

    Vec target = Vec::Constant(V, kTwoPi);
    {
        const FlatSystem S0 = system(Vec::Zero(V), false);
        if (!S0.valid) throw DomainError("discrete_flattening: input triangle violates the triangle inequality");
        for (int v = 0; v < V; ++v)
            if (M.on_boundary(v)) target(v) = S0.F(v);
    }

    FlatteningResult out;
    out.u = Vec::Zero(V);
    FlatSystem S = system(out.u, true);
    Vec res = S.F - target;
    for (int it = 0; it < max_iter && res.cwiseAbs().maxCoeff() >= tol; ++it) {
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(S.Jac);
        if (lu.info() != Eigen::Success) throw DomainError("discrete_flattening: singular Jacobian");
        const Vec step = lu.solve(-res);
        double t = 1.0;
        bool accepted = false;
        for (int back = 0; back < 40; ++back, t *= 0.5) {
            const Vec trial = out.u + t * step;
            FlatSystem T = system(trial, true);
            if (!T.valid) continue;
            const Vec tres = T.F - target;
            if (tres.norm() < (1.0 - 1e-4 * t) * res.norm()) {
                out.u = trial;
                S = std::move(T);
                res = tres;
                accepted = true;
                break;
            }
        }
        ++out.newton_iterations;
        if (!accepted) break;
    }
    out.residual = res.cwiseAbs().maxCoeff();
    if (!(out.residual < std::max(tol, 1e-8))) throw DomainError("discrete_flattening: Newton iteration did not converge");

    // Layout in the hyperboloid model z^2 - x^2 - y^2 = 1.
    auto mink = [](const Eigen::Vector3d& a, const Eigen::Vector3d& b) { return a(0) * b(0) + a(1) * b(1) - a(2) * b(2); };
    std::vector<Eigen::Vector3d> pos(static_cast<std::size_t>(V));
    auto edge_len = [&](int a, int b) {
        const double d0 = spatial_distance(st.position(a), st.position(b));
        return 2.0 * std::asinh(std::exp(0.5 * (out.u(a) + out.u(b))) * std::sinh(0.5 * d0));
    };
    pos[0] = {0.0, 0.0, 1.0};
    {
        const int b = M.index(1, 0);
        const double l = edge_len(0, b);
        pos[static_cast<std::size_t>(b)] = {std::sinh(l), 0.0, std::cosh(l)};
    }
    // Places x given p and q, where (p, q, x) is a positively oriented cyclic rotation of a face.
    auto place = [&](int p, int q, int x) {
        const Eigen::Vector3d P = pos[static_cast<std::size_t>(p)], Q = pos[static_cast<std::size_t>(q)];
        Eigen::Matrix2d G;
        G << mink(P, P), mink(P, Q), mink(Q, P), mink(Q, Q);
        const Eigen::Vector2d rhs(-std::cosh(edge_len(p, x)), -std::cosh(edge_len(q, x)));
        const Eigen::Vector2d ab = G.partialPivLu().solve(rhs);
        const Eigen::Vector3d base_pt = ab(0) * P + ab(1) * Q;
        // Unit spacelike normal to span(P, Q).
        Eigen::Vector3d Nv(P(1) * Q(2) - P(2) * Q(1), P(2) * Q(0) - P(0) * Q(2), -(P(0) * Q(1) - P(1) * Q(0)));
        Nv /= std::sqrt(std::max(mink(Nv, Nv), 1e-300));
        const double gamma = std::sqrt(std::max(-1.0 - mink(base_pt, base_pt), 0.0));
        Eigen::Vector3d X = base_pt + gamma * Nv;
        Eigen::Matrix3d D;
        D << P, Q, X;
        if (D.determinant() < 0) X = base_pt - gamma * Nv;
        pos[static_cast<std::size_t>(x)] = X;
    };
    // Ring 1 around the center, then each later ring from two vertices of the ring inside it,
    // which keeps layout errors from compounding along a ring.
    for (int j = 1; j < M.s; ++j) place(0, M.index(1, j - 1), M.index(1, j));
    for (int i = 1; i < M.m; ++i)
        for (int j = 0; j < M.s; ++j) place(M.index(i, j), M.index(i, j - 1), M.index(i + 1, j));
    out.disk.resize(V, 3);
    for (int v = 0; v < V; ++v) out.disk.row(v) = pos[static_cast<std::size_t>(v)].transpose();
    for (int j = 0; j < M.s; ++j) {
        const Eigen::Vector3d& p = pos[static_cast<std::size_t>(M.index(M.m, j))];
        double a = std::atan2(p(1), p(0));
        if (a < 0) a += kTwoPi;
        if (a >= kTwoPi) a -= kTwoPi;
        out.boundary_angle.push_back(a);
    }
    return out;
}

BoundaryExtension boundary_extension(const SurfaceState& st, std::size_t rays, double A, std::size_t quadruples,
                                     std::uint64_t seed) {
    require_converged(st, "boundary_extension");
    if (!st.loop) throw DomainError("boundary_extension: state has no boundary loop");
    const int s = st.mesh.s;
    if (rays < 4 || rays > static_cast<std::size_t>(s)) throw DomainError("boundary_extension: rays must lie in [4, sectors]");
    FlatteningResult flat = discrete_flattening(st);
    std::vector<std::pair<double, Vec>> pts;
    for (std::size_t r = 0; r < rays; ++r) {
        const int j = static_cast<int>((r * static_cast<std::size_t>(s)) / rays);
        pts.emplace_back(flat.boundary_angle[static_cast<std::size_t>(j)], st.loop->point(st.mesh.angle(j)));
    }
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<double> dom;
    std::vector<Vec> img;
    for (auto& [a, x] : pts) {
        dom.push_back(a);
        img.push_back(x);
    }
    SampledBoundaryMap map(std::move(dom), std::move(img));
    QSCertificate cert = qs_certify(map, A, quadruples, seed);
    return BoundaryExtension{std::move(map), cert, std::move(flat)};
}

AuditReport boundary_extension_audit(const SurfaceState& st, std::size_t rays, std::uint64_t seed) {
    require_converged(st, "boundary_extension_audit");
    const BoundaryExtension ext = boundary_extension(st, rays, 2.0, 20000, seed);
    AuditReport r;
    r.audit = "boundary_extension";
    r.seed = seed;
    r.samples = ext.certificate.quadruples_tested;
    r.values["A"] = ext.certificate.A;
    r.values["B"] = ext.certificate.B;
    r.values["newton_iterations"] = ext.flattening.newton_iterations;
    r.values["flattening_residual"] = ext.flattening.residual;
    r.values["circle_map"] = circle_map_test(ext.map, 1e-6, seed) ? 1.0 : 0.0;
    r.check_le("B", ext.certificate.B, std::numeric_limits<double>::max());
    std::vector<double> image_angle;
    for (const Vec& y : ext.map.image) {
        double a = std::atan2(y(1), y(0));
        if (a < 0) a += kTwoPi;
        image_angle.push_back(a);
    }
    r.series["domain_angle"] = ext.map.domain;
    r.series["image_angle"] = image_angle;
    r.finalize();
    return r;
}

// ---------------------------------------------------------------------------------------------
// Renormalization experiments

double contraction_margin(const std::vector<double>& theta, const std::vector<Vec>& fibers) {
    const std::size_t k = theta.size();
    if (k < 2) throw DomainError("contraction_margin: need at least two samples");
    double worst = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = (i + 1) % k;
        const double ds = circle_distance(theta[i], theta[j]);
        if (ds <= 0) continue;
        worst = std::max(worst, sphere_distance(fibers[i], fibers[j]) / ds);
    }
    return 1.0 - worst;
}

namespace {

// Graph coordinates of an isotropic vector, rescaled by a positive factor so |u| = 1.
std::pair<double, Vec> graph_coordinates(const Vec& y) {
    const double nu = y.head(2).norm();
    if (!(nu > 0)) throw DomainError("graph_coordinates: vector has no circle component");
    double t = std::atan2(y(1), y(0));
    if (t < 0) t += kTwoPi;
    Vec f = y.tail(y.size() - 2) / nu;
    return {t, f / f.norm()};
}

LipschitzLoop graph_of(int n, const std::vector<Vec>& points) {
    std::vector<double> th;
    std::vector<Vec> f;
    for (const Vec& p : points) {
        auto [t, v] = graph_coordinates(p);
        th.push_back(t);
        f.push_back(v);
    }
    return LipschitzLoop(n, std::move(th), std::move(f));
}

}  // namespace

QuasiperiodicityReport quasiperiodicity_probe(const LipschitzLoop& loop, std::size_t triples, std::uint64_t seed) {
    if (loop_classify(loop) != LoopClass::positive) throw DomainError("quasiperiodicity_probe: loop is not positive");
    const std::size_t k = loop.size();
    if (k < 4) throw DomainError("quasiperiodicity_probe: need at least four samples");
    QuasiperiodicityReport rep;
    rep.seed = seed;
    rep.base_margin = contraction_margin(loop.theta(), loop.fibers());
    rep.min_margin = std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    std::vector<Vec> pts;
    for (std::size_t i = 0; i < k; ++i) pts.push_back(loop.sample_point(i));
    while (rep.triples < triples) {
        std::array<std::size_t, 3> idx{pick(rng), pick(rng), pick(rng)};
        std::sort(idx.begin(), idx.end());
        if (idx[0] == idx[1] || idx[1] == idx[2]) continue;
        const Isometry<double> g =
            standardize_triple<double>(pts[idx[0]], pts[idx[1]], pts[idx[2]]);
        std::vector<Vec> image;
        for (const Vec& p : pts) image.push_back(g.matrix * p);
        const LipschitzLoop renorm = graph_of(loop.n(), image);
        const double margin = contraction_margin(renorm.theta(), renorm.fibers());
        rep.margins.push_back(margin);
        rep.min_margin = std::min(rep.min_margin, margin);
        ++rep.triples;
    }
    return rep;
}

BarbotCrown seeded_crown(const LipschitzLoop& loop) {
    const auto arcs = photon_arcs(loop);
    if (arcs.empty()) throw DomainError("seeded_crown: loop has no photon arc");
    return seed_crown(loop.point(arcs.front().begin), loop.point(arcs.front().end));
}

LipschitzLoop crown_graph(const BarbotCrown& crown) {
    std::vector<Vec> pts(crown.z.begin(), crown.z.end());
    return graph_of(crown.n(), pts);
}

double graph_hausdorff(const LipschitzLoop& a, const LipschitzLoop& b, std::size_t resolution) {
    if (a.n() != b.n()) throw DomainError("graph_hausdorff: dimension mismatch");
    const double h = kTwoPi / static_cast<double>(resolution);
    std::vector<Vec> fa(resolution), fb(resolution);
    for (std::size_t i = 0; i < resolution; ++i) {
        fa[i] = a.fiber(h * static_cast<double>(i));
        fb[i] = b.fiber(h * static_cast<double>(i));
    }
    // Exact (up to the grid refinement) whenever the distance is below the window half-width.
    const double window = 0.05;
    const auto wsteps = static_cast<long>(std::ceil(window / h));
    auto directed = [&](const std::vector<Vec>& from, const LipschitzLoop& to, const std::vector<Vec>& to_grid) {
        double worst = 0.0;
        for (std::size_t i = 0; i < resolution; ++i) {
            const double t = h * static_cast<double>(i);
            double best = sphere_distance(from[i], to_grid[i]);
            long best_j = 0;
            const long reach = std::min(wsteps, static_cast<long>(std::ceil(best / h)));
            for (long dj = -reach; dj <= reach; ++dj) {
                const auto j = static_cast<std::size_t>((static_cast<long>(i) + dj + static_cast<long>(resolution)) %
                                                        static_cast<long>(resolution));
                const double d = std::hypot(h * static_cast<double>(dj), sphere_distance(from[i], to_grid[j]));
                if (d < best) {
                    best = d;
                    best_j = dj;
                }
            }
            // Refine between grid neighbours by golden-section search on the continuous graph.
            double lo = h * static_cast<double>(best_j - 1), hi = h * static_cast<double>(best_j + 1);
            auto dist = [&](double off) { return std::hypot(off, sphere_distance(from[i], to.fiber(t + off))); };
            const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
            for (int it = 0; it < 40; ++it) {
                const double m1 = hi - gr * (hi - lo), m2 = lo + gr * (hi - lo);
                if (dist(m1) < dist(m2)) hi = m2;
                else lo = m1;
            }
            best = std::min(best, dist(0.5 * (lo + hi)));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(fa, b, fb), directed(fb, a, fa));
}

DegenerationReport barbot_degeneration(const LipschitzLoop& loop, const BarbotCrown& crown, int iters,
                                       std::size_t samples, double threshold) {
    if (iters < 0) throw DomainError("barbot_degeneration: iters must be nonnegative");
    if (loop.n() != crown.n()) throw DomainError("barbot_degeneration: dimension mismatch");
    if (loop_classify(loop) == LoopClass::positive) throw DomainError("barbot_degeneration: positive loop has no photon arc");
    if (photon_arcs(loop).empty()) throw DomainError("barbot_degeneration: loop has no photon arc");
    DegenerationReport rep;
    rep.crown = crown;
    rep.threshold = threshold;
    const LipschitzLoop target = crown_graph(crown);
    const Mat g = cartan_element(crown, 4.0, 2.0).matrix;
    constexpr std::size_t hausdorff_resolution = 8192;

    // Eigenvalue of g on each crown vertex; g is the identity on the orthogonal complement.
    std::array<double, 4> eig{};
    for (int i = 0; i < 4; ++i) {
        const Vec& z = crown.z[static_cast<std::size_t>(i)];
        eig[static_cast<std::size_t>(i)] = (g * z).dot(z) / z.squaredNorm();
    }
    Eigen::Matrix4d gram;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            gram(i, j) = bilinear(crown.z[static_cast<std::size_t>(i)], crown.z[static_cast<std::size_t>(j)]);
    const Eigen::Matrix4d gram_inv = gram.inverse();

    // Base samples: a uniform grid plus the crown vertex angles, which are corners of the limit.
    // Each sample is split into crown coordinates and a complement part. Coordinates at rounding
    // level are zeroed: g^k expands them exponentially, and a point on an invariant edge must stay there.
    struct Split {
        Eigen::Vector4d c;
        Vec w;
    };
    std::vector<Split> base;
    auto split = [&](const Vec& p, bool snap) {
        Eigen::Vector4d r;
        for (int j = 0; j < 4; ++j) r(j) = bilinear(crown.z[static_cast<std::size_t>(j)], p);
        Split sp{gram_inv * r, p};
        for (int i = 0; i < 4; ++i) sp.w -= sp.c(i) * crown.z[static_cast<std::size_t>(i)];
        if (snap) {
            const double scale = std::max(sp.c.cwiseAbs().maxCoeff(), sp.w.norm());
            for (int i = 0; i < 4; ++i)
                if (std::abs(sp.c(i)) <= 1e-12 * scale) sp.c(i) = 0.0;
            if (sp.w.norm() <= 1e-12 * scale) sp.w.setZero();
        }
        return sp;
    };
    for (std::size_t i = 0; i < samples; ++i)
        base.push_back(split(loop.point(kTwoPi * static_cast<double>(i) / static_cast<double>(samples)), true));
    // Near a crown vertex on the loop, g^k stretches offsets of order (min/max eigenvalue ratio)^k
    // across whole edges. Those offsets are sampled on a log scale, split exactly from the vertex.
    const auto [emin, emax] = std::minmax_element(eig.begin(), eig.end());
    const double depth = iters * std::log(*emax / *emin) + 20.0;
    for (double t : target.theta()) {
        const Split vertex = split(loop.point(t), true);
        base.push_back(vertex);
        if ((vertex.c.array() != 0).count() != 1 || vertex.w.norm() != 0) continue;
        int iv = 0;
        vertex.c.cwiseAbs().maxCoeff(&iv);
        const int opp = (iv + 2) % 4;
        for (double u = 3.0; u <= depth; u += 0.05)
            for (double sign : {-1.0, 1.0}) {
                const Vec delta = loop.point_offset(t, sign * std::exp(-u));
                Split off = split(delta, true);
                // The opposite coordinate is second order; isotropy gives it without cancellation:
                // <z_i, delta> = -q(delta) / (2 s) where the vertex sample is s z_i.
                const double qa = delta.head(2).squaredNorm(), qb = delta.tail(delta.size() - 2).squaredNorm();
                const double qd = std::abs(qa - qb) <= 1e-12 * (qa + qb) ? 0.0 : qa - qb;
                off.c(opp) = -qd / (2.0 * vertex.c(iv)) / gram(iv, opp);
                off.w = delta;
                for (int i = 0; i < 4; ++i) off.w -= off.c(i) * crown.z[static_cast<std::size_t>(i)];
                if (off.w.norm() <= 1e-12 * delta.norm()) off.w.setZero();
                base.push_back(Split{vertex.c + off.c, vertex.w + off.w});
            }
    }

    // g^k is applied in closed form to the fixed base samples, in log scale to avoid overflow.
    // Iterating on resampled graphs instead amplifies interpolation error near the repelling vertex.
    for (int k = 0; k <= iters; ++k) {
        std::vector<Vec> image;
        image.reserve(base.size());
        for (const Split& sp : base) {
            std::array<double, 4> logw{};
            double top = sp.w.norm() > 0 ? 0.0 : -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < 4; ++i) {
                logw[i] = sp.c(static_cast<int>(i)) != 0 ? k * std::log(eig[i]) : -std::numeric_limits<double>::infinity();
                top = std::max(top, logw[i]);
            }
            Vec y = std::exp(-top) * sp.w;
            for (std::size_t i = 0; i < 4; ++i)
                if (sp.c(static_cast<int>(i)) != 0) y += std::exp(logw[i] - top) * sp.c(static_cast<int>(i)) * crown.z[i];
            image.push_back(y);
        }
        const double d = graph_hausdorff(graph_of(loop.n(), image), target, hausdorff_resolution);
        rep.hausdorff.push_back(d);
        if (rep.first_below < 0 && d < threshold) rep.first_below = k;
    }
    return rep;
}

}  // namespace h2n
