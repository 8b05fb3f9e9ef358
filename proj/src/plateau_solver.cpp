#include "h2n/plateau.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <limits>

namespace h2n {

namespace {

bool try_step(const SurfaceState& st, const Mat& delta, double dt, Mat& out) {
    out = st.X;
    for (int v = 0; v < st.mesh.vertex_count(); ++v) {
        if (st.pinned[static_cast<std::size_t>(v)]) continue;
        const Vec y = st.position(v) + dt * delta.row(v).transpose();
        const double qy = quad(y);
        if (!(qy < 0) || !y.allFinite()) return false;
        out.row(v) = (y / std::sqrt(-qy)).transpose();
    }
    return true;
}

}  // namespace

SurfaceState plateau_solve(SurfaceState st, double tol, int max_iter, double dt0) {
    if (!(tol > 0)) throw DomainError("plateau_solve: tol must be positive");
    if (!(dt0 > 0)) throw DomainError("plateau_solve: dt0 must be positive");
    SolverDiagnostics& D = st.diag;
    D = SolverDiagnostics{};
    st.converged = false;

    const int V = st.mesh.vertex_count();
    std::vector<int> slot(static_cast<std::size_t>(V), -1);
    int nfree = 0;
    for (int v = 0; v < V; ++v)
        if (!st.pinned[static_cast<std::size_t>(v)]) slot[static_cast<std::size_t>(v)] = nfree++;

    double dt = dt0;
    int clean = 0;
    for (int it = 0;; ++it) {
        const auto frames = vertex_frames(st);
        const CotanLaplacian lap = cotan_laplacian(st);
        const Mat rho = mean_curvature_residual(st, frames, lap);
        const double rn = max_residual_norm(st, rho);
        D.residual_history.push_back(rn);
        D.final_residual = rn;
        if (max_iter <= 0) {
            D.failure = "max_iter must be positive";
            break;
        }
        if (rn < tol) {
            st.converged = true;
            break;
        }
        if (it >= max_iter) {
            D.failure = "iteration limit reached";
            break;
        }

        // Preconditioned normal step: (diag(A) - L/2) delta = A rho on free vertices.
        std::vector<Eigen::Triplet<double>> trip;
        for (int k = 0; k < lap.L.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator e(lap.L, k); e; ++e) {
                const int r = slot[static_cast<std::size_t>(e.row())], c = slot[static_cast<std::size_t>(e.col())];
                if (r >= 0 && c >= 0) trip.emplace_back(r, c, -0.5 * e.value());
            }
        for (int v = 0; v < V; ++v)
            if (slot[static_cast<std::size_t>(v)] >= 0) trip.emplace_back(slot[static_cast<std::size_t>(v)], slot[static_cast<std::size_t>(v)], lap.area(v));
        Eigen::SparseMatrix<double> S(nfree, nfree);
        S.setFromTriplets(trip.begin(), trip.end());
        Mat rhs(nfree, st.dim());
        for (int v = 0; v < V; ++v)
            if (slot[static_cast<std::size_t>(v)] >= 0) rhs.row(slot[static_cast<std::size_t>(v)]) = lap.area(v) * rho.row(v);

        Mat sol;
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(S);
        if (ldlt.info() == Eigen::Success) sol = ldlt.solve(rhs);
        if (ldlt.info() != Eigen::Success || !sol.allFinite()) {
            Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(S);
            if (lu.info() != Eigen::Success) {
                D.failure = "singular step system";
                break;
            }
            sol = lu.solve(rhs);
        }
        Mat delta = Mat::Zero(V, st.dim());
        for (int v = 0; v < V; ++v) {
            const int k = slot[static_cast<std::size_t>(v)];
            if (k < 0) continue;
            const VertexFrame& fr = frames[static_cast<std::size_t>(v)];
            const Vec d = sol.row(k).transpose();
            delta.row(v) = (fr.ok ? fr.normal_part(d) : Vec(d + bilinear(d, fr.x) * fr.x)).transpose();
        }

        Mat next;
        bool accepted = false;
        while (dt >= 1e-8) {
            if (try_step(st, delta, dt, next)) {
                const Mat prev = st.X;
                st.X = next;
                if (first_nonspacelike_face(st) < 0) {
                    accepted = true;
                    break;
                }
                st.X = prev;
            }
            dt /= 2.0;
            clean = 0;
            ++D.halvings;
        }
        if (!accepted) {
            D.failure = "step size underflow";
            break;
        }
        D.dt_history.push_back(dt);
        ++D.iterations;
        if (++clean >= 20) {
            dt = std::min(dt * 1.1, dt0);
            clean = 0;
        }
    }
    return st;
}

}  // namespace h2n
