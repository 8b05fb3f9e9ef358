#include "h2n/plateau.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

namespace h2n {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Projection onto x^perp for q(x) = -1.
Vec tproj(const Vec& y, const Vec& x) { return y + bilinear(y, x) * x; }

Eigen::Matrix2d inverse_sqrt(const Eigen::Matrix2d& g, bool& ok) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(g);
    const Eigen::Vector2d ev = es.eigenvalues();
    ok = ev.minCoeff() > 0.0 && ev.allFinite();
    if (!ok) return Eigen::Matrix2d::Identity();
    return es.eigenvectors() * ev.cwiseInverse().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

std::vector<int> fit_stencil(const DiskMesh& M, int v) {
    const auto& one = M.neighbors[static_cast<std::size_t>(v)];
    if (one.size() >= 6) return one;
    std::set<int> two(one.begin(), one.end());
    for (int w : one)
        for (int u : M.neighbors[static_cast<std::size_t>(w)])
            if (u != v) two.insert(u);
    return {two.begin(), two.end()};
}

}  // namespace

Vec VertexFrame::normal_part(const Vec& v) const {
    Vec y = tproj(v, x);
    for (const auto& f : e) y -= bilinear(y, f) * f;
    return y;
}

Vec VertexFrame::tangent_part(const Vec& v) const { return bilinear(v, e[0]) * e[0] + bilinear(v, e[1]) * e[1]; }

Vec VertexFrame::II(int a, int b) const {
    Vec out = Vec::Zero(x.size());
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out += S(a, i) * S(j, b) * H[static_cast<std::size_t>(i + j)];
    return out;
}

double VertexFrame::II_norm2() const {
    return -(quad(II(0, 0)) + 2.0 * quad(II(0, 1)) + quad(II(1, 1)));
}

std::vector<VertexFrame> vertex_frames(const SurfaceState& st) {
    const DiskMesh& M = st.mesh;
    const int V = M.vertex_count();
    std::vector<VertexFrame> out(static_cast<std::size_t>(V));
    for (int v = 0; v < V; ++v) {
        VertexFrame& fr = out[static_cast<std::size_t>(v)];
        fr.x = st.position(v);
        const std::vector<int> nb = fit_stencil(M, v);
        const Eigen::Vector2d P0 = M.param(v);
        Eigen::MatrixXd A(static_cast<Eigen::Index>(nb.size()), 5);
        Mat dX(static_cast<Eigen::Index>(nb.size()), st.dim());
        for (std::size_t k = 0; k < nb.size(); ++k) {
            const Eigen::Vector2d d = M.param(nb[k]) - P0;
            const auto r = static_cast<Eigen::Index>(k);
            A.row(r) << d(0), d(1), 0.5 * d(0) * d(0), d(0) * d(1), 0.5 * d(1) * d(1);
            dX.row(r) = st.X.row(nb[k]) - st.X.row(v);
        }
        const Mat C = A.colPivHouseholderQr().solve(dX);
        fr.J[0] = tproj(C.row(0).transpose(), fr.x);
        fr.J[1] = tproj(C.row(1).transpose(), fr.x);
        for (int k = 0; k < 3; ++k) fr.H_raw[static_cast<std::size_t>(k)] = C.row(2 + k).transpose();
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) fr.g(a, b) = bilinear(fr.J[static_cast<std::size_t>(a)], fr.J[static_cast<std::size_t>(b)]);
        bool ok = false;
        fr.S = inverse_sqrt(fr.g, ok);
        fr.ok = ok && nb.size() >= 5;
        for (int a = 0; a < 2; ++a) fr.e[static_cast<std::size_t>(a)] = fr.S(0, a) * fr.J[0] + fr.S(1, a) * fr.J[1];
        for (int k = 0; k < 3; ++k) fr.H[static_cast<std::size_t>(k)] = fr.normal_part(fr.H_raw[static_cast<std::size_t>(k)]);
    }
    return out;
}

CotanLaplacian cotan_laplacian(const SurfaceState& st) {
    const DiskMesh& M = st.mesh;
    const int V = M.vertex_count();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(M.faces.size() * 12);
    Vec area = Vec::Zero(V);
    for (const auto& F : M.faces) {
        std::array<double, 3> cot{}, L2{};
        double Af = 0.0;
        for (int k = 0; k < 3; ++k) {
            const Vec a = st.position(F[k]);
            const Vec u = st.position(F[(k + 1) % 3]) - a, w = st.position(F[(k + 2) % 3]) - a;
            const double uu = quad(u), ww = quad(w), uw = bilinear(u, w);
            const double A2 = std::sqrt(std::max(uu * ww - uw * uw, 1e-300));
            cot[k] = uw / A2;
            L2[k] = quad(Vec(w - u));
            Af = A2 / 2.0;
            const int ib = F[(k + 1) % 3], ic = F[(k + 2) % 3];
            trip.emplace_back(ib, ic, 0.5 * cot[k]);
            trip.emplace_back(ic, ib, 0.5 * cot[k]);
            trip.emplace_back(ib, ib, -0.5 * cot[k]);
            trip.emplace_back(ic, ic, -0.5 * cot[k]);
        }
        const bool obtuse = cot[0] < 0 || cot[1] < 0 || cot[2] < 0;
        for (int k = 0; k < 3; ++k) {
            const int k1 = (k + 1) % 3, k2 = (k + 2) % 3;
            double val = (L2[k1] * cot[k1] + L2[k2] * cot[k2]) / 8.0;
            if (obtuse) val = cot[k] < 0 ? Af / 2.0 : Af / 4.0;
            area(F[k]) += val;
        }
    }
    CotanLaplacian out;
    out.L.resize(V, V);
    out.L.setFromTriplets(trip.begin(), trip.end());
    out.area = area;
    return out;
}

double normal_aux_norm(const Vec& v) { return std::sqrt(std::max(-quad(v), 0.0)); }

Mat mean_curvature_residual(const SurfaceState& st, const std::vector<VertexFrame>& frames, const CotanLaplacian& lap) {
    const Mat LX = lap.L * st.X;
    Mat rho = Mat::Zero(st.X.rows(), st.X.cols());
    for (int v = 0; v < st.mesh.vertex_count(); ++v) {
        if (st.pinned[static_cast<std::size_t>(v)]) continue;
        const Vec D = LX.row(v).transpose() / lap.area(v) - 2.0 * st.position(v);
        const VertexFrame& fr = frames[static_cast<std::size_t>(v)];
        rho.row(v) = (fr.ok ? fr.normal_part(D) : tproj(D, fr.x)).transpose();
    }
    return rho;
}

Mat mean_curvature_residual(const SurfaceState& st) {
    return mean_curvature_residual(st, vertex_frames(st), cotan_laplacian(st));
}

double max_residual_norm(const SurfaceState& st, const Mat& rho) {
    double worst = 0.0;
    for (int v = 0; v < st.mesh.vertex_count(); ++v) {
        if (st.pinned[static_cast<std::size_t>(v)]) continue;
        const double r = normal_aux_norm(rho.row(v).transpose());
        if (!std::isfinite(r)) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, r);
    }
    return worst;
}

QuarticData quartic_differential(const SurfaceState& st, const std::vector<VertexFrame>& frames) {
    const DiskMesh& M = st.mesh;
    const int V = M.vertex_count();
    QuarticData out;
    out.q4.resize(static_cast<std::size_t>(V));
    out.holomorphicity = Vec::Constant(V, kNaN);
    for (int v = 0; v < V; ++v) {
        const VertexFrame& fr = frames[static_cast<std::size_t>(v)];
        if (!fr.ok) {
            out.q4[static_cast<std::size_t>(v)] = {kNaN, kNaN};
            continue;
        }
        const Vec alpha = 0.5 * (fr.II(0, 0) - fr.II(1, 1));
        const Vec beta = fr.II(0, 1);
        out.q4[static_cast<std::size_t>(v)] = {-quad(alpha) + quad(beta), 2.0 * bilinear(alpha, beta)};
    }
    for (int v = 0; v < V; ++v) {
        const VertexFrame& fr = frames[static_cast<std::size_t>(v)];
        const auto& nb = M.neighbors[static_cast<std::size_t>(v)];
        if (!fr.ok || M.on_boundary(v) || nb.size() < 3) continue;
        bool complete = true;
        for (int w : nb) complete = complete && frames[static_cast<std::size_t>(w)].ok;
        if (!complete) continue;

        // Normal derivatives D_k H_ij from a linear fit of N_v(H_ij) over the closed 1-ring.
        const Eigen::Vector2d P0 = M.param(v);
        Eigen::MatrixXd A(static_cast<Eigen::Index>(nb.size() + 1), 3);
        A.row(0) << 1.0, 0.0, 0.0;
        for (std::size_t k = 0; k < nb.size(); ++k) {
            const Eigen::Vector2d d = M.param(nb[k]) - P0;
            A.row(static_cast<Eigen::Index>(k + 1)) << 1.0, d(0), d(1);
        }
        const auto qr = A.colPivHouseholderQr();
        std::array<std::array<Vec, 3>, 2> DH;
        for (int ij = 0; ij < 3; ++ij) {
            Mat Y(A.rows(), st.dim());
            Y.row(0) = fr.H[static_cast<std::size_t>(ij)].transpose();
            for (std::size_t k = 0; k < nb.size(); ++k)
                Y.row(static_cast<Eigen::Index>(k + 1)) =
                    fr.normal_part(frames[static_cast<std::size_t>(nb[k])].H[static_cast<std::size_t>(ij)]).transpose();
            const Mat c = qr.solve(Y);
            DH[0][static_cast<std::size_t>(ij)] = fr.normal_part(c.row(1).transpose());
            DH[1][static_cast<std::size_t>(ij)] = fr.normal_part(c.row(2).transpose());
        }
        const Eigen::Matrix2d ginv = fr.g.inverse();
        auto Hn = [&](int i, int j) -> const Vec& { return fr.H[static_cast<std::size_t>(i + j)]; };
        auto Dk = [&](int k, int i, int j) -> const Vec& { return DH[static_cast<std::size_t>(k)][static_cast<std::size_t>(i + j)]; };
        // Gamma^k_ij = g^{kl} <x_ij, J_l>.
        auto Gamma = [&](int k, int i, int j) {
            double s = 0.0;
            for (int l = 0; l < 2; ++l)
                s += ginv(k, l) * bilinear(fr.H_raw[static_cast<std::size_t>(i + j)], fr.J[static_cast<std::size_t>(l)]);
            return s;
        };
        std::array<Vec, 2> C;
        for (int j = 0; j < 2; ++j) {
            Vec c = Dk(0, 1, j) - Dk(1, 0, j);
            for (int l = 0; l < 2; ++l) c += -Gamma(l, 0, j) * Hn(1, l) + Gamma(l, 1, j) * Hn(0, l);
            C[static_cast<std::size_t>(j)] = c;
        }
        double r2 = 0.0;
        for (int b = 0; b < 2; ++b) {
            const Vec cb = fr.S.determinant() * (fr.S(0, b) * C[0] + fr.S(1, b) * C[1]);
            r2 += std::max(-quad(cb), 0.0);
        }
        out.holomorphicity(v) = std::sqrt(r2);
    }
    return out;
}

QuarticData quartic_differential(const SurfaceState& st) { return quartic_differential(st, vertex_frames(st)); }

DiscreteGeometry discrete_geometry(const SurfaceState& st) {
    const DiskMesh& M = st.mesh;
    const int V = M.vertex_count();
    DiscreteGeometry G;
    G.frames = vertex_frames(st);
    const CotanLaplacian lap = cotan_laplacian(st);
    G.rho = mean_curvature_residual(st, G.frames, lap);
    G.rho_norm = Vec::Zero(V);
    for (int v = 0; v < V; ++v) G.rho_norm(v) = normal_aux_norm(G.rho.row(v).transpose());

    // Intrinsic edge lengths with a second-order correction for the chord's normal excursion.
    auto normal_q = [&](int a, int b) {
        return quad(G.frames[static_cast<std::size_t>(a)].normal_part(st.position(b) - st.position(a)));
    };
    auto length = [&](int a, int b) {
        const double d = std::acosh(std::max(1.0, -bilinear(st.position(a), st.position(b))));
        return std::sqrt(std::max(d * d + (normal_q(a, b) + normal_q(b, a)) / 6.0, 1e-300));
    };
    for (int v = 0; v < V; ++v)
        for (int w : M.neighbors[static_cast<std::size_t>(v)]) G.edge_length.push_back(length(v, w));

    Vec angle = Vec::Zero(V);
    G.area = Vec::Zero(V);
    for (const auto& F : M.faces) {
        Eigen::Matrix2d gram;
        const Vec a = st.position(F[0]);
        const Vec u = st.position(F[1]) - a, w = st.position(F[2]) - a;
        gram << quad(u), bilinear(u, w), bilinear(u, w), quad(w);
        G.face_gram.push_back(gram);

        std::array<double, 3> l{};
        for (int k = 0; k < 3; ++k) l[k] = length(F[(k + 1) % 3], F[(k + 2) % 3]);
        std::array<double, 3> E{};
        for (int k = 0; k < 3; ++k) {
            const double a_ = l[k], b_ = l[(k + 1) % 3], c_ = l[(k + 2) % 3];
            const double cA = (std::cosh(b_) * std::cosh(c_) - std::cosh(a_)) / (std::sinh(b_) * std::sinh(c_));
            angle(F[k]) += std::acos(std::clamp(cA, -1.0, 1.0));
            E[k] = std::acos(std::clamp((b_ * b_ + c_ * c_ - a_ * a_) / (2.0 * b_ * c_), -1.0, 1.0));
        }
        const double sp = (l[0] + l[1] + l[2]) / 2.0;
        const double Af = std::sqrt(std::max(sp * (sp - l[0]) * (sp - l[1]) * (sp - l[2]), 0.0));
        const bool obtuse = E[0] > std::numbers::pi / 2 || E[1] > std::numbers::pi / 2 || E[2] > std::numbers::pi / 2;
        for (int k = 0; k < 3; ++k) {
            const int k1 = (k + 1) % 3, k2 = (k + 2) % 3;
            double val = (l[k1] * l[k1] / std::tan(E[k1]) + l[k2] * l[k2] / std::tan(E[k2])) / 8.0;
            if (obtuse) val = E[k] > std::numbers::pi / 2 ? Af / 2.0 : Af / 4.0;
            G.area(F[k]) += val;
        }
    }
    G.K = Vec::Constant(V, kNaN);
    for (int v = 1; v < V; ++v)
        if (!M.on_boundary(v)) G.K(v) = -1.0 + (2.0 * std::numbers::pi - angle(v)) / G.area(v);
    if (M.m > 1) {
        double sum = 0.0;
        for (int j = 0; j < M.s; ++j) sum += G.K(M.index(1, j));
        G.K(0) = sum / M.s;
    }
    G.II2_gauss = 2.0 * (G.K.array() + 1.0);
    G.II2_fit = Vec::Constant(V, kNaN);
    for (int v = 0; v < V; ++v)
        if (G.frames[static_cast<std::size_t>(v)].ok) G.II2_fit(v) = G.frames[static_cast<std::size_t>(v)].II_norm2();
    QuarticData qd = quartic_differential(st, G.frames);
    G.q4 = std::move(qd.q4);
    G.holomorphicity = std::move(qd.holomorphicity);
    return G;
}

AnalyticSurface analytic_surface_from_string(const std::string& name) {
    if (name == "barbot") return AnalyticSurface::barbot;
    if (name == "geodesic" || name == "plane") return AnalyticSurface::geodesic;
    throw DomainError("unknown analytic surface '" + name + "'");
}

namespace {

struct AnalyticJet {
    Vec x;
    std::array<Vec, 2> T;
    std::array<Vec, 3> H;  // x_ss, x_st, x_tt
    std::array<Mat, 2> G;  // Killing generators with G_a x = T_a; empty for a flat normal frame
};

AnalyticJet analytic_jet(AnalyticSurface surface, int n, double s, double t) {
    AnalyticJet j;
    const int D = n + 3;
    if (surface == AnalyticSurface::barbot) {
        const BarbotCrown c = barbot_crown_standard(n);
        j.x = barbot_surface_point(c, s, t).rep;
        const auto T = barbot_surface_tangents(c, s, t);
        j.T = {T[0], T[1]};
        j.H = {Vec(std::exp(s) * c.z[0] + std::exp(-s) * c.z[2]), Vec::Zero(D),
               Vec(std::exp(t) * c.z[1] + std::exp(-t) * c.z[3])};
        const Mat Q = BilinearForm<double>(n).matrix();
        for (int a = 0; a < 2; ++a) {
            const Vec& p = c.z[static_cast<std::size_t>(a)];
            const Vec& m = c.z[static_cast<std::size_t>(a + 2)];
            j.G[static_cast<std::size_t>(a)] = -4.0 * (p * (Q * m).transpose() - m * (Q * p).transpose());
        }
        return j;
    }
    const double w = std::sqrt(1.0 + s * s + t * t);
    j.x = Vec::Zero(D);
    j.x << s, t, w, Vec::Zero(D - 3);
    j.T[0] = Vec::Zero(D);
    j.T[1] = Vec::Zero(D);
    j.T[0](0) = 1.0;
    j.T[0](2) = s / w;
    j.T[1](1) = 1.0;
    j.T[1](2) = t / w;
    for (auto& h : j.H) h = Vec::Zero(D);
    const double w3 = w * w * w;
    j.H[0](2) = (1.0 + t * t) / w3;
    j.H[1](2) = -s * t / w3;
    j.H[2](2) = (1.0 + s * s) / w3;
    return j;
}

}  // namespace

double ricci_identity_check(AnalyticSurface surface, int n, double frame_rotation, int samples) {
    if (n < 1) throw DomainError("ricci_identity_check: n must be >= 1");
    if (samples < 1) throw DomainError("ricci_identity_check: samples must be positive");
    const int D = n + 3;
    double worst = 0.0;
    for (int k = 0; k < samples; ++k) {
        const double phi = 2.0 * std::numbers::pi * k / samples;
        const double r = 0.3 + 0.9 * k / samples;
        const AnalyticJet j = analytic_jet(surface, n, r * std::cos(phi), r * std::sin(phi));

        std::vector<Vec> basis{j.x, j.T[0], j.T[1]};
        std::vector<Vec> nf;
        {
            std::vector<Vec> ortho;
            for (const Vec& b : basis) {
                Vec w = b;
                for (const Vec& o : ortho) w -= bilinear(w, o) / quad(o) * o;
                ortho.push_back(w);
            }
            for (int e = 0; e < D && static_cast<int>(nf.size()) < n; ++e) {
                Vec w = Vec::Unit(D, e);
                for (int pass = 0; pass < 2; ++pass) {
                    for (const Vec& o : ortho) w -= bilinear(w, o) / quad(o) * o;
                    for (const Vec& o : nf) w -= bilinear(w, o) / quad(o) * o;
                }
                const double qw = quad(w);
                if (qw < -1e-8) nf.push_back(w / std::sqrt(-qw));
            }
        }
        if (static_cast<int>(nf.size()) != n) throw DomainError("ricci_identity_check: normal frame completion failed");
        const int N = n;
        // Normal projection in the frame; g_N = -q.
        auto coords = [&](const Vec& v) {
            Vec c(N);
            for (int l = 0; l < N; ++l) c(l) = -bilinear(v, nf[static_cast<std::size_t>(l)]);
            return c;
        };

        Eigen::Matrix2d g;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) g(a, b) = bilinear(j.T[static_cast<std::size_t>(a)], j.T[static_cast<std::size_t>(b)]);
        bool ok = false;
        const Eigen::Matrix2d S = inverse_sqrt(g, ok);
        if (!ok) throw DomainError("ricci_identity_check: degenerate tangent plane");
        const Eigen::Matrix2d Rot = Eigen::Rotation2Dd(frame_rotation).toRotationMatrix();
        const Eigen::Matrix2d B = S * Rot;  // columns: rotated orthonormal frame in chart coordinates

        std::array<Vec, 3> h;  // normal coordinates of II in the chart
        for (int k2 = 0; k2 < 3; ++k2) h[static_cast<std::size_t>(k2)] = coords(j.H[static_cast<std::size_t>(k2)]);
        auto IIe = [&](int a, int b) {
            Vec out = Vec::Zero(N);
            for (int i = 0; i < 2; ++i)
                for (int l = 0; l < 2; ++l) out += B(i, a) * B(l, b) * h[static_cast<std::size_t>(i + l)];
            return out;
        };
        const Vec alpha = 0.5 * (IIe(0, 0) - IIe(1, 1));
        const Vec beta = IIe(0, 1);

        Mat Rn = Mat::Zero(N, N);
        if (j.G[0].size() != 0) {
            std::array<Mat, 2> om;
            for (int a = 0; a < 2; ++a) {
                om[static_cast<std::size_t>(a)] = Mat::Zero(N, N);
                for (int kk = 0; kk < N; ++kk)
                    om[static_cast<std::size_t>(a)].row(kk) =
                        coords(j.G[static_cast<std::size_t>(a)] * nf[static_cast<std::size_t>(kk)]).transpose();
            }
            // Row k of omega_a holds the frame coefficients of nabla_a n_k.
            const Mat R_st = om[1] * om[0] - om[0] * om[1];
            Rn = R_st.transpose() * B.determinant();
        }
        // Rn maps coordinates of xi to coordinates of R^N(e1, e2) xi.
        const double lhs = (Rn * alpha).dot(beta);
        const double wedge = alpha.squaredNorm() * beta.squaredNorm() - std::pow(alpha.dot(beta), 2);
        worst = std::max(worst, std::abs(lhs + 2.0 * wedge));
    }
    return worst;
}

}  // namespace h2n
