#include "h2n/hspace.hpp"

#include <cmath>

namespace h2n {

Vec normalize_timelike(const Vec& x) {
    const double qx = quad(x);
    if (!(qx < 0)) throw DomainError("normalize_timelike: vector is not timelike");
    return x / std::sqrt(-qx);
}

HPoint HPoint::from_vector(const Vec& x) { return HPoint{normalize_timelike(x)}; }

double spatial_distance(const Vec& x, const Vec& y) {
    const double p = std::abs(bilinear(x, y));
    return p > 1.0 ? std::acosh(p) : 0.0;
}

double spatial_distance(const HPoint& x, const HPoint& y) { return spatial_distance(x.rep, y.rep); }

Horofunction Horofunction::from_vector(const Vec& z, bool normalize) {
    if (z.norm() == 0.0) throw DomainError("Horofunction: zero vector");
    if (std::abs(quad(z)) > 1e-10 * z.squaredNorm()) throw DomainError("Horofunction: vector is not isotropic");
    return Horofunction{normalize ? Vec(z / z.norm()) : z};
}

double Horofunction::value(const Vec& x, double tol) const {
    const double p = bilinear(x, z0);
    if (std::abs(p) <= tol * x.norm() * z0.norm()) throw DomainError("horofunction: point lies on the orthogonal of z0");
    return std::log(std::abs(p));
}

Vec Horofunction::gradient(const Vec& x, const std::vector<Vec>& frame, double tol) const {
    const double p = bilinear(x, z0);
    if (std::abs(p) <= 1e-12 * x.norm() * z0.norm()) throw DomainError("horofunction: point lies on the orthogonal of z0");
    Vec proj = Vec::Zero(x.size());
    for (std::size_t i = 0; i < frame.size(); ++i) {
        for (std::size_t j = 0; j < frame.size(); ++j) {
            const double g = bilinear(frame[i], frame[j]);
            if (i == j ? std::abs(std::abs(g) - 1.0) > tol : std::abs(g) > tol)
                throw DomainError("horofunction_gradient: frame is not orthonormal");
        }
        proj += quad(frame[i]) * bilinear(z0, frame[i]) * frame[i];
    }
    return proj / p;
}

HPoint ideal_barycenter(const Vec& a, const Vec& b, const Vec& c) {
    if (triple_class(a, b, c) != TripleClass::positive) throw DomainError("ideal_barycenter: triple is not positive");
    Vec u1 = normalize_null(a, 1e-6), u2 = normalize_null(b, 1e-6), u3 = normalize_null(c, 1e-6);
    if (bilinear(u1, u2) > 0) u2 = -u2;
    if (bilinear(u1, u3) > 0) u3 = -u3;
    if (bilinear(u2, u3) > 0) throw DomainError("ideal_barycenter: no sign-consistent lift");
    const double p12 = std::abs(bilinear(u1, u2)), p13 = std::abs(bilinear(u1, u3)), p23 = std::abs(bilinear(u2, u3));
    const double l1 = std::sqrt(p23 / (p12 * p13));
    const double l2 = std::sqrt(p13 / (p12 * p23));
    const double l3 = std::sqrt(p12 / (p13 * p23));
    return HPoint::from_vector(l1 * u1 + l2 * u2 + l3 * u3);
}

HPoint ideal_barycenter(const BoundaryPoint& a, const BoundaryPoint& b, const BoundaryPoint& c) {
    return ideal_barycenter(a.rep, b.rep, c.rep);
}

Vec PointedPlane::point(double r, double theta) const {
    return std::cosh(r) * q_pt.rep + std::sinh(r) * (std::cos(theta) * U[0] + std::sin(theta) * U[1]);
}

double PointedPlane::gram_defect() const {
    const Mat G = gram<double>({q_pt.rep, U[0], U[1]});
    Mat want = Mat::Identity(3, 3);
    want(0, 0) = -1.0;
    return (G - want).cwiseAbs().maxCoeff();
}

PointedPlane pointed_plane_from_triple(const BoundaryPoint& a, const BoundaryPoint& b, const BoundaryPoint& c) {
    const HPoint q = ideal_barycenter(a, b, c);
    std::vector<Vec> U;
    for (const Vec* v : {&a.rep, &b.rep, &c.rep}) {
        Vec w = *v + bilinear(*v, q.rep) * q.rep;
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& f : U) w -= bilinear(w, f) * f;
        const double qw = quad(w);
        if (qw > 1e-10 && U.size() < 2) U.push_back(w / std::sqrt(qw));
    }
    if (U.size() != 2) throw DomainError("pointed_plane_from_triple: degenerate plane");
    return PointedPlane{q, {U[0], U[1]}};
}

PointedPlane standard_pointed_plane(int n) {
    const BilinearForm<double> F(n);
    return PointedPlane{HPoint{F.basis(2)}, {F.basis(0), F.basis(1)}};
}

namespace {

Vec plane_component(const PointedPlane& P, const Vec& x) {
    return -bilinear(x, P.q_pt.rep) * P.q_pt.rep + bilinear(x, P.U[0]) * P.U[0] + bilinear(x, P.U[1]) * P.U[1];
}

}  // namespace

HPoint radial_graph(const PointedPlane& P, const HPoint& p, const Vec& w) {
    if ((plane_component(P, p.rep) - p.rep).norm() > 1e-9 * (1.0 + p.rep.norm()))
        throw DomainError("radial_graph: base point is not on the plane");
    if (plane_component(P, w).norm() > 1e-9 * (1.0 + w.norm())) throw DomainError("radial_graph: w is not orthogonal to the plane");
    const double qw = quad(w);
    if (qw > 1e-12 * (1.0 + w.squaredNorm())) throw DomainError("radial_graph: w must satisfy q(w) <= 0");
    return HPoint{(p.rep + w) / std::sqrt(1.0 - qw)};
}

std::pair<HPoint, Vec> radial_project(const PointedPlane& P, const HPoint& x, double tol) {
    const Vec u = plane_component(P, x.rep);
    const double qu = quad(u);
    if (!(qu < -tol)) throw DomainError("radial_project: plane component is not timelike");
    const double s = std::sqrt(-qu);
    return {HPoint{u / s}, (x.rep - u) / s};
}

HPoint barbot_surface_point(const BarbotCrown& crown, double s, double t) {
    return HPoint{std::exp(s) * crown.z[0] + std::exp(t) * crown.z[1] + std::exp(-s) * crown.z[2] +
                  std::exp(-t) * crown.z[3]};
}

std::array<Vec, 2> barbot_surface_tangents(const BarbotCrown& crown, double s, double t) {
    return {Vec(std::exp(s) * crown.z[0] - std::exp(-s) * crown.z[2]), Vec(std::exp(t) * crown.z[1] - std::exp(-t) * crown.z[3])};
}

HPoint boundary_ray_point(const LipschitzLoop& loop, double theta, double R) {
    if (!(R > 0)) throw DomainError("boundary_ray_point: R must be positive");
    Vec x(loop.n() + 3);
    x(0) = std::sinh(R) * std::cos(theta);
    x(1) = std::sinh(R) * std::sin(theta);
    x.tail(loop.n() + 1) = std::cosh(R) * loop.fiber(theta);
    return HPoint{x};
}

}  // namespace h2n
