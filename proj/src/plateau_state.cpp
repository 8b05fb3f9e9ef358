#include "h2n/plateau.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>

namespace h2n {

DiskMesh DiskMesh::build(int m, int s, double R) {
    if (m < 2 || s < 3) throw DomainError("DiskMesh: need m >= 2 and s >= 3");
    if (!(R > 0)) throw DomainError("DiskMesh: R must be positive");
    DiskMesh M;
    M.m = m;
    M.s = s;
    M.R = R;
    for (int j = 0; j < s; ++j) M.faces.push_back({0, M.index(1, j), M.index(1, j + 1)});
    for (int i = 1; i < m; ++i)
        for (int j = 0; j < s; ++j) {
            const int a = M.index(i, j), b = M.index(i + 1, j), c = M.index(i + 1, j + 1), d = M.index(i, j + 1);
            M.faces.push_back({a, b, c});
            M.faces.push_back({a, c, d});
        }
    const int V = M.vertex_count();
    std::vector<std::set<int>> nb(static_cast<std::size_t>(V));
    M.vertex_faces.assign(static_cast<std::size_t>(V), {});
    for (std::size_t f = 0; f < M.faces.size(); ++f)
        for (int k = 0; k < 3; ++k) {
            const int v = M.faces[f][k];
            nb[static_cast<std::size_t>(v)].insert(M.faces[f][(k + 1) % 3]);
            nb[static_cast<std::size_t>(v)].insert(M.faces[f][(k + 2) % 3]);
            M.vertex_faces[static_cast<std::size_t>(v)].push_back(static_cast<int>(f));
        }
    M.neighbors.reserve(static_cast<std::size_t>(V));
    for (auto& s_ : nb) M.neighbors.emplace_back(s_.begin(), s_.end());
    return M;
}

int DiskMesh::index(int ring, int sector) const {
    if (ring == 0) return 0;
    return 1 + (ring - 1) * s + ((sector % s) + s) % s;
}

double DiskMesh::angle(int sector) const { return 2.0 * std::numbers::pi * sector / s; }

Eigen::Vector2d DiskMesh::param(int v) const {
    const double r = radius(ring(v));
    const double t = angle(sector(v));
    return {r * std::cos(t), r * std::sin(t)};
}

double face_min_eigenvalue(const SurfaceState& st, int f) {
    const auto& F = st.mesh.faces[static_cast<std::size_t>(f)];
    const Vec a = st.position(F[0]);
    const Vec u = st.position(F[1]) - a, w = st.position(F[2]) - a;
    const double uu = quad(u), ww = quad(w), uw = bilinear(u, w);
    const double tr = uu + ww, det = uu * ww - uw * uw;
    if (!std::isfinite(tr) || !std::isfinite(det)) return -1.0;
    return 0.5 * (tr - std::sqrt(std::max(tr * tr - 4.0 * det, 0.0)));
}

int first_nonspacelike_face(const SurfaceState& st) {
    for (std::size_t f = 0; f < st.mesh.faces.size(); ++f)
        if (!(face_min_eigenvalue(st, static_cast<int>(f)) > 0.0)) return static_cast<int>(f);
    return -1;
}

namespace {

SurfaceState empty_state(int n, int m, int s, double R) {
    SurfaceState st;
    st.mesh = DiskMesh::build(m, s, R);
    st.n = n;
    const int V = st.mesh.vertex_count();
    st.X = Mat::Zero(V, n + 3);
    st.pinned.assign(static_cast<std::size_t>(V), false);
    for (int v = 0; v < V; ++v) st.pinned[static_cast<std::size_t>(v)] = st.mesh.on_boundary(v);
    return st;
}

std::size_t poisson_samples(double rho) {
    const double want = 40.0 / std::max(1.0 - rho, 1e-12);
    std::size_t K = 1024;
    while (static_cast<double>(K) < want && K < 65536) K *= 2;
    return K;
}

// Normalized Poisson average of the loop lift at the Klein-disk point rho e^{it}.
Vec poisson_point(const std::vector<Vec>& xi, std::size_t stride, double rho, double t) {
    const std::size_t K = xi.size() / stride;
    Vec acc = Vec::Zero(xi[0].size());
    for (std::size_t k = 0; k < K; ++k) {
        const double phi = 2.0 * std::numbers::pi * (static_cast<double>(k) + 0.5) / static_cast<double>(K);
        const double P = (1.0 - rho * rho) / (1.0 - 2.0 * rho * std::cos(t - phi) + rho * rho);
        acc += P * xi[k * stride];
    }
    acc /= static_cast<double>(K);
    return normalize_timelike(acc);
}

}  // namespace

SurfaceState build_state(const LipschitzLoop& loop, int m, int s, double R) {
    if (m < 8) throw DomainError("build_state: need m >= 8");
    if (s < 3 * m) throw DomainError("build_state: need s >= 3m");
    const LoopClass cls = loop_classify(loop);
    if (cls == LoopClass::invalid) throw DomainError("build_state: loop is not semi-positive");
    SurfaceState st = empty_state(loop.n(), m, s, R);
    st.loop = loop;

    const std::size_t Kmax = poisson_samples(std::tanh(R));
    std::vector<Vec> xi(Kmax);
    for (std::size_t k = 0; k < Kmax; ++k)
        xi[k] = loop.point(2.0 * std::numbers::pi * (static_cast<double>(k) + 0.5) / static_cast<double>(Kmax));
    // Kmax is a power of two, so the stride below divides it exactly.
    auto poisson = [&](int ring, double t) {
        const double rho = std::tanh(st.mesh.radius(ring));
        return poisson_point(xi, Kmax / std::min(Kmax, poisson_samples(rho)), rho, t);
    };
    for (int v = 0; v < st.mesh.vertex_count(); ++v) {
        const int i = st.mesh.ring(v);
        if (i == m) continue;
        st.X.row(v) = poisson(i, st.mesh.angle(st.mesh.sector(v))).transpose();
    }
    for (int j = 0; j < s; ++j)
        st.X.row(st.mesh.index(m, j)) = boundary_ray_point(loop, st.mesh.angle(j), R).rep.transpose();
    st.boundary_mode = "ray";
    if (first_nonspacelike_face(st) >= 0) {
        for (int j = 0; j < s; ++j) st.X.row(st.mesh.index(m, j)) = poisson(m, st.mesh.angle(j)).transpose();
        st.boundary_mode = "poisson";
    }
    const int bad = first_nonspacelike_face(st);
    if (bad >= 0) throw DomainError("build_state: initial face " + std::to_string(bad) + " is not spacelike");
    return st;
}

SurfaceState geodesic_disk_state(int n, int m, int s, double R) {
    SurfaceState st = empty_state(n, m, s, R);
    const PointedPlane P = standard_pointed_plane(n);
    for (int v = 0; v < st.mesh.vertex_count(); ++v)
        st.X.row(v) = P.point(st.mesh.radius(st.mesh.ring(v)), st.mesh.angle(st.mesh.sector(v))).transpose();
    st.analytic = true;
    st.boundary_mode = "analytic";
    st.loop = circle_loop(n, static_cast<std::size_t>(s));
    return st;
}

SurfaceState barbot_state(const BarbotCrown& crown, int m, int s, double R) {
    SurfaceState st = empty_state(crown.n(), m, s, R);
    for (int v = 0; v < st.mesh.vertex_count(); ++v) {
        const Eigen::Vector2d p = std::numbers::sqrt2 * st.mesh.param(v);
        st.X.row(v) = barbot_surface_point(crown, p(0), p(1)).rep.transpose();
    }
    st.analytic = true;
    st.boundary_mode = "analytic";
    if ((crown.z[0] - barbot_crown_standard(crown.n()).z[0]).norm() < 1e-12 &&
        (crown.z[1] - barbot_crown_standard(crown.n()).z[1]).norm() < 1e-12)
        st.loop = crown_loop(crown.n(), static_cast<std::size_t>(s - s % 4));
    return st;
}

void write_state(std::ostream& out, const SurfaceState& st) {
    out << "h2n-surface v1 n=" << st.n << " rings=" << st.mesh.m << " sectors=" << st.mesh.s << " R="
        << std::setprecision(17) << st.mesh.R;
    if (st.analytic) out << " status=analytic";
    else if (st.converged) out << " status=converged";
    out << '\n';
    for (int v = 0; v < st.mesh.vertex_count(); ++v) {
        out << st.mesh.ring(v) << ' ' << st.mesh.sector(v);
        for (int k = 0; k < st.dim(); ++k) out << ' ' << st.X(v, k);
        out << ' ' << (st.pinned[static_cast<std::size_t>(v)] ? 1 : 0) << '\n';
    }
}

SurfaceState read_state(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DomainError("state file: missing header");
    std::istringstream hs(line);
    std::string magic, version, tok;
    hs >> magic >> version;
    if (magic != "h2n-surface" || version != "v1") throw DomainError("state file: bad header");
    int n = -1, m = -1, s = -1;
    double R = -1;
    std::string status;
    while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw DomainError("state file: bad header field " + tok);
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        try {
            if (key == "n") n = std::stoi(val);
            else if (key == "rings") m = std::stoi(val);
            else if (key == "sectors") s = std::stoi(val);
            else if (key == "R") R = std::stod(val);
            else if (key == "status") status = val;
            else throw DomainError("state file: unknown header field " + key);
        } catch (const std::logic_error&) {
            throw DomainError("state file: bad header value " + tok);
        }
    }
    if (n < 0 || m < 2 || s < 3 || !(R > 0)) throw DomainError("state file: incomplete header");
    if (!status.empty() && status != "converged" && status != "analytic") throw DomainError("state file: bad status " + status);
    SurfaceState st = empty_state(n, m, s, R);
    st.converged = status == "converged";
    st.analytic = status == "analytic";
    if (st.analytic) st.boundary_mode = "analytic";
    std::vector<bool> seen(static_cast<std::size_t>(st.mesh.vertex_count()), false);
    for (int line_no = 0; line_no < st.mesh.vertex_count(); ++line_no) {
        if (!std::getline(in, line)) throw DomainError("state file: truncated");
        std::istringstream ls(line);
        int i, j, pin;
        if (!(ls >> i >> j)) throw DomainError("state file: bad vertex line");
        if (i < 0 || i > m || j < 0 || j >= s || (i == 0 && j != 0)) throw DomainError("state file: vertex index out of range");
        const int v = st.mesh.index(i, j);
        for (int k = 0; k < n + 3; ++k)
            if (!(ls >> st.X(v, k))) throw DomainError("state file: bad coordinates");
        if (!(ls >> pin)) throw DomainError("state file: missing pinned flag");
        st.pinned[static_cast<std::size_t>(v)] = pin != 0;
        seen[static_cast<std::size_t>(v)] = true;
        if (std::abs(quad(Vec(st.X.row(v).transpose())) + 1.0) > 1e-8) throw DomainError("state file: vertex off the quadric");
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) throw DomainError("state file: missing vertices");
    return st;
}

void save_state(const std::string& path, const SurfaceState& st) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write state file " + path);
    write_state(out, st);
}

SurfaceState load_state(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open state file " + path);
    return read_state(in);
}

}  // namespace h2n
