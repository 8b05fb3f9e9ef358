#pragma once

#include "h2n/hspace.hpp"

#include <Eigen/Sparse>

#include <array>
#include <complex>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace h2n {

// Polar triangulation of a disk of radius R: a center vertex plus m rings of s sectors.
struct DiskMesh {
    int m = 0;
    int s = 0;
    double R = 0.0;
    std::vector<std::array<int, 3>> faces;
    std::vector<std::vector<int>> neighbors;
    std::vector<std::vector<int>> vertex_faces;

    static DiskMesh build(int m, int s, double R);

    [[nodiscard]] int vertex_count() const { return 1 + m * s; }
    [[nodiscard]] int index(int ring, int sector) const;
    [[nodiscard]] int ring(int v) const { return v == 0 ? 0 : 1 + (v - 1) / s; }
    [[nodiscard]] int sector(int v) const { return v == 0 ? 0 : (v - 1) % s; }
    [[nodiscard]] double radius(int ring) const { return R * ring / m; }
    [[nodiscard]] double angle(int sector) const;
    // Cartesian parameter (r cos t, r sin t).
    [[nodiscard]] Eigen::Vector2d param(int v) const;
    [[nodiscard]] bool on_boundary(int v) const { return ring(v) == m; }
};

struct SolverDiagnostics {
    std::vector<double> residual_history;
    std::vector<double> dt_history;
    int iterations = 0;
    int halvings = 0;
    double final_residual = 0.0;
    std::string failure;
};

struct SurfaceState {
    DiskMesh mesh;
    int n = 1;
    Mat X;  // one row per vertex
    std::vector<bool> pinned;
    SolverDiagnostics diag;
    bool converged = false;
    bool analytic = false;
    std::string boundary_mode;
    std::optional<LipschitzLoop> loop;

    [[nodiscard]] Vec position(int v) const { return X.row(v).transpose(); }
    [[nodiscard]] int dim() const { return n + 3; }
};

// Smallest eigenvalue of the q-Gram of the edge vectors of face f.
double face_min_eigenvalue(const SurfaceState& st, int f);
// Index of the first face whose Gram is not positive definite, or -1.
int first_nonspacelike_face(const SurfaceState& st);

SurfaceState build_state(const LipschitzLoop& loop, int m, int s, double R);
SurfaceState geodesic_disk_state(int n, int m, int s, double R);
// Vertex at polar (r, t) goes to the orbit point with flat coordinates sqrt(2) r (cos t, sin t).
SurfaceState barbot_state(const BarbotCrown& crown, int m, int s, double R);

// Quadratic 1-ring fit x(P) ~ x_v + J dP + H(dP, dP)/2 in the Cartesian parameter chart.
struct VertexFrame {
    Vec x;
    std::array<Vec, 2> J;        // tangent (projected) chart derivatives
    std::array<Vec, 3> H_raw;    // fitted second derivatives 11, 12, 22
    std::array<Vec, 3> H;        // their normal parts
    Eigen::Matrix2d g;           // induced metric in the chart
    Eigen::Matrix2d S;           // g^{-1/2}
    std::array<Vec, 2> e;        // orthonormal tangent frame J S
    bool ok = false;

    [[nodiscard]] Vec normal_part(const Vec& v) const;
    [[nodiscard]] Vec tangent_part(const Vec& v) const;
    // II(e_a, e_b) in the orthonormal frame.
    [[nodiscard]] Vec II(int a, int b) const;
    // sum over a,b of -q(II(e_a,e_b)).
    [[nodiscard]] double II_norm2() const;
};

std::vector<VertexFrame> vertex_frames(const SurfaceState& st);

// Cotangent Laplacian from the chord q-metric and mixed Voronoi areas.
struct CotanLaplacian {
    Eigen::SparseMatrix<double> L;
    Vec area;
};
CotanLaplacian cotan_laplacian(const SurfaceState& st);

// sqrt(-q(v)) for a normal vector: its length in the orthonormal frame adapted to (x, T, N).
double normal_aux_norm(const Vec& v);

// Normal part of (L x)/A - 2x at free vertices; zero rows at pinned vertices.
Mat mean_curvature_residual(const SurfaceState& st);
Mat mean_curvature_residual(const SurfaceState& st, const std::vector<VertexFrame>& frames, const CotanLaplacian& lap);
double max_residual_norm(const SurfaceState& st, const Mat& rho);

SurfaceState plateau_solve(SurfaceState st, double tol, int max_iter, double dt0 = 0.2);

struct DiscreteGeometry {
    std::vector<Eigen::Matrix2d> face_gram;
    Vec area;        // mixed Voronoi area from intrinsic edge lengths
    Vec K;           // NaN on the boundary ring
    Vec II2_gauss;   // 2(K + 1)
    Vec II2_fit;     // direct 1-ring fit
    Mat rho;
    Vec rho_norm;
    std::vector<std::complex<double>> q4;
    Vec holomorphicity;  // NaN where the 1-ring fit is incomplete
    std::vector<VertexFrame> frames;
    std::vector<double> edge_length;  // per (v, neighbor index) in mesh.neighbors order
};

DiscreteGeometry discrete_geometry(const SurfaceState& st);

struct QuarticData {
    std::vector<std::complex<double>> q4;
    Vec holomorphicity;
};
QuarticData quartic_differential(const SurfaceState& st);
QuarticData quartic_differential(const SurfaceState& st, const std::vector<VertexFrame>& frames);

enum class AnalyticSurface { barbot, geodesic };
AnalyticSurface analytic_surface_from_string(const std::string& name);
// max |<R^N(e1,e2) alpha, beta> + 2 |alpha ^ beta|^2| over sample points, frame rotated by the given angle.
double ricci_identity_check(AnalyticSurface surface, int n, double frame_rotation = 0.0, int samples = 16);

// Text format: header "h2n-surface v1 n= rings= sectors= R= [status=converged|analytic]", then one
// line "ring sector x_1 .. x_{n+3} pinned" per vertex.
void write_state(std::ostream& out, const SurfaceState& st);
SurfaceState read_state(std::istream& in);
void save_state(const std::string& path, const SurfaceState& st);
SurfaceState load_state(const std::string& path);

}  // namespace h2n
