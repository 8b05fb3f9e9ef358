#pragma once

#include "h2n/einstein.hpp"

#include <utility>
#include <vector>

namespace h2n {

struct HPoint {
    Vec rep;  // q(rep) = -1

    static HPoint from_vector(const Vec& x);
    [[nodiscard]] int n() const { return form_n(rep.size()); }
};

// Rescales a timelike vector to q = -1.
Vec normalize_timelike(const Vec& x);

double spatial_distance(const Vec& x, const Vec& y);
double spatial_distance(const HPoint& x, const HPoint& y);

struct Horofunction {
    Vec z0;

    // Unit auxiliary norm representative of the ray of z.
    static Horofunction from_vector(const Vec& z, bool normalize = true);
    [[nodiscard]] double value(const Vec& x, double tol = 1e-12) const;
    [[nodiscard]] double value(const HPoint& x, double tol = 1e-12) const { return value(x.rep, tol); }
    // Projection of z0 onto span(frame) divided by <x, z0>. The frame Gram must be diagonal with entries +-1.
    [[nodiscard]] Vec gradient(const Vec& x, const std::vector<Vec>& frame, double tol = 1e-8) const;
};

HPoint ideal_barycenter(const Vec& a, const Vec& b, const Vec& c);
HPoint ideal_barycenter(const BoundaryPoint& a, const BoundaryPoint& b, const BoundaryPoint& c);

struct PointedPlane {
    HPoint q_pt;
    std::array<Vec, 2> U;

    [[nodiscard]] Vec point(double r, double theta) const;
    [[nodiscard]] double gram_defect() const;
};

PointedPlane pointed_plane_from_triple(const BoundaryPoint& a, const BoundaryPoint& b, const BoundaryPoint& c);
// Plane through e3 with U = span(e1, e2).
PointedPlane standard_pointed_plane(int n);

// x = (p + w) / sqrt(1 - q(w)) for p on the plane and w orthogonal to it.
HPoint radial_graph(const PointedPlane& P, const HPoint& p, const Vec& w);
std::pair<HPoint, Vec> radial_project(const PointedPlane& P, const HPoint& x, double tol = 1e-10);

// e^s z0 + e^t z1 + e^-s z2 + e^-t z3.
HPoint barbot_surface_point(const BarbotCrown& crown, double s, double t);
// d/ds and d/dt of the orbit map.
std::array<Vec, 2> barbot_surface_tangents(const BarbotCrown& crown, double s, double t);

// sinh(R)(cos t, sin t, 0) + cosh(R)(0, 0, f(t)).
HPoint boundary_ray_point(const LipschitzLoop& loop, double theta, double R);

}  // namespace h2n
