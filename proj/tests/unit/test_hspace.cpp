#include "h2n/hspace.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace h2n;

namespace {

constexpr double kPi = std::numbers::pi;

Vec circle_vec(int n, double a) {
    Vec x = Vec::Zero(n + 3);
    x(0) = std::cos(a);
    x(1) = std::sin(a);
    x(2) = 1.0;
    return x;
}

}  // namespace

TEST(SpatialDistance, PlaneAndCausalPairs) {
    const PointedPlane P = standard_pointed_plane(2);
    for (double r : {0.0, 0.5, 2.0, 6.0}) EXPECT_NEAR(spatial_distance(P.q_pt.rep, P.point(r, 1.1)), r, 1e-7);
    Vec y = Vec::Zero(5);
    y(3) = 1.0;
    y(2) = 0.0;
    Vec x = Vec::Zero(5);
    x(2) = 1.0;
    EXPECT_EQ(spatial_distance(x, y), 0.0);
}

TEST(SpatialDistance, SymmetricAndInvariant) {
    std::mt19937_64 rng(8);
    const PointedPlane P = standard_pointed_plane(2);
    const Vec x = P.point(1.3, 0.2), y = P.point(0.7, 2.9);
    const double d = spatial_distance(x, y);
    EXPECT_EQ(d, spatial_distance(y, x));
    for (int k = 0; k < 20; ++k) {
        const auto g = random_isometry<double>(2, rng);
        EXPECT_NEAR(spatial_distance(g(x), g(y)), d, 1e-10 * (1 + d));
    }
}

TEST(Horofunction, RescalingShiftsValue) {
    const PointedPlane P = standard_pointed_plane(1);
    const Vec z = circle_vec(1, 0.4), x = P.point(0.8, 2.0);
    const auto h1 = Horofunction::from_vector(z, false);
    const auto h3 = Horofunction::from_vector(3.0 * z, false);
    EXPECT_NEAR(h3.value(x) - h1.value(x), std::log(3.0), 1e-14);
    Vec perp = Vec::Zero(4);
    perp << std::cos(0.4), std::sin(0.4), 1.0, 0.0;
    Vec on_orth = Vec::Zero(4);
    on_orth << -std::sin(0.4), std::cos(0.4), 0.0, 0.0;
    EXPECT_THROW(h1.value(on_orth), DomainError);
    EXPECT_THROW(Horofunction::from_vector(Vec::Unit(4, 0)), DomainError);
}

TEST(Horofunction, BusemannOnThePlane) {
    // On H^2 the Busemann function of the boundary point e1 + e3 decreases at unit speed towards it.
    const PointedPlane P = standard_pointed_plane(0);
    const auto h = Horofunction::from_vector(circle_vec(0, 0.0), false);
    for (double r : {0.5, 1.0, 3.0})
        EXPECT_NEAR(h.value(P.point(r, 0.0)) - h.value(P.q_pt), -r, 1e-10);
}

TEST(Horofunction, AmbientGradientUnitOnH2) {
    const PointedPlane P = standard_pointed_plane(0);
    const auto h = Horofunction::from_vector(circle_vec(0, 1.2));
    for (double r : {0.0, 0.7, 2.5}) {
        const Vec x = P.point(r, 0.4);
        const Vec t1 = std::sinh(r) * P.q_pt.rep + std::cosh(r) * (std::cos(0.4) * P.U[0] + std::sin(0.4) * P.U[1]);
        const Vec t2 = -std::sin(0.4) * P.U[0] + std::cos(0.4) * P.U[1];
        const Vec g = h.gradient(x, {t1, t2});
        EXPECT_NEAR(quad(g), 1.0, 1e-9);
    }
    EXPECT_THROW(h.gradient(P.q_pt.rep, {Vec::Unit(3, 0) * 2.0}), DomainError);
}

TEST(Barycenter, Equilateral) {
    for (int n = 0; n <= 2; ++n) {
        const HPoint b = ideal_barycenter(circle_vec(n, 0), circle_vec(n, 2 * kPi / 3), circle_vec(n, 4 * kPi / 3));
        Vec want = Vec::Zero(n + 3);
        want(2) = 1.0;
        EXPECT_LT(std::min((b.rep - want).norm(), (b.rep + want).norm()), 1e-12);
        const PointedPlane P = pointed_plane_from_triple(BoundaryPoint::from_vector(circle_vec(n, 0)),
                                                         BoundaryPoint::from_vector(circle_vec(n, 2 * kPi / 3)),
                                                         BoundaryPoint::from_vector(circle_vec(n, 4 * kPi / 3)));
        EXPECT_LT(P.gram_defect(), 1e-10);
        for (const Vec& u : P.U) EXPECT_NEAR(u.tail(n + 1).norm(), 0.0, 1e-12);
    }
}

TEST(Barycenter, Equivariant) {
    std::mt19937_64 rng(21);
    const Vec a = circle_vec(2, 0.1), b = circle_vec(2, 1.9), c = circle_vec(2, 4.0);
    const Vec x = ideal_barycenter(a, b, c).rep;
    for (int k = 0; k < 20; ++k) {
        const auto g = random_isometry<double>(2, rng);
        const Vec y = ideal_barycenter(g(a), g(b), g(c)).rep;
        EXPECT_LT(std::min((y - g(x)).norm(), (y + g(x)).norm()), 1e-9 * (1 + y.norm()));
    }
}

TEST(Barycenter, WeightedProductsEqual) {
    Vec u[3] = {circle_vec(1, 0.3), circle_vec(1, 2.0), circle_vec(1, 5.1)};
    for (int i = 1; i < 3; ++i)
        if (bilinear(u[0], u[i]) > 0) u[i] = -u[i];
    const double p01 = std::abs(bilinear(u[0], u[1])), p02 = std::abs(bilinear(u[0], u[2])),
                 p12 = std::abs(bilinear(u[1], u[2]));
    const double l[3] = {std::sqrt(p12 / (p01 * p02)), std::sqrt(p02 / (p01 * p12)), std::sqrt(p01 / (p02 * p12))};
    EXPECT_NEAR(l[0] * l[1] * p01, 1.0, 1e-12);
    EXPECT_NEAR(l[0] * l[2] * p02, 1.0, 1e-12);
    EXPECT_NEAR(l[1] * l[2] * p12, 1.0, 1e-12);
    EXPECT_THROW(ideal_barycenter(u[0], u[0], u[1]), DomainError);
}

TEST(RadialGraph, NormalizationAndRoundTrip) {
    const PointedPlane P = standard_pointed_plane(3);
    const HPoint p{P.point(0.9, 0.3)};
    Vec w = Vec::Zero(6);
    w(3) = 1.0;
    w(4) = std::sqrt(2.0);
    ASSERT_NEAR(quad(w), -3.0, 1e-14);
    const HPoint x = radial_graph(P, p, w);
    EXPECT_NEAR(quad(x.rep), -1.0, 1e-14);
    EXPECT_LT((x.rep - 0.5 * (p.rep + w)).norm(), 1e-14);
    const auto [pp, ww] = radial_project(P, x);
    EXPECT_LT((pp.rep - p.rep).norm(), 1e-12);
    EXPECT_LT((ww - w).norm(), 1e-12);
    EXPECT_LT((radial_graph(P, p, Vec::Zero(6)).rep - p.rep).norm(), 1e-15);
    EXPECT_THROW(radial_graph(P, p, P.U[0]), DomainError);
    Vec far = Vec::Zero(6);
    far(3) = 1.0;
    EXPECT_THROW(radial_project(P, HPoint{far}, 1e-10), DomainError);
}

TEST(Barbot, OrbitIdentities) {
    for (int n = 1; n <= 3; ++n) {
        const BarbotCrown c = barbot_crown_standard(n);
        const Vec x = barbot_surface_point(c, 0, 0).rep;
        EXPECT_NEAR(quad(x), -1.0, 1e-14);
        const auto T = barbot_surface_tangents(c, 0, 0);
        EXPECT_NEAR(quad(T[0]), 0.5, 1e-14);
        EXPECT_NEAR(quad(T[1]), 0.5, 1e-14);
        EXPECT_NEAR(bilinear(T[0], T[1]), 0.0, 1e-14);
        const double h = 1e-5;
        const Vec fd = (barbot_surface_point(c, h, 0).rep - barbot_surface_point(c, -h, 0).rep) / (2 * h);
        EXPECT_LT((fd - T[0]).norm(), 1e-8);
        for (double t : {0.5, 2.0, 7.0})
            for (auto [l, m] : {std::pair{1.0, 0.0}, std::pair{0.3, 2.0}}) {
                const double ip = bilinear(x, barbot_surface_point(c, l * t, m * t).rep);
                const double want = -0.5 * (std::cosh(l * t) + std::cosh(m * t));
                EXPECT_NEAR(ip, want, 1e-12 * std::abs(want));
            }
    }
}

TEST(Barbot, FlatInducedMetric) {
    const BarbotCrown c = barbot_crown_standard(2);
    for (double s : {-2.0, 0.0, 1.5})
        for (double t : {-1.0, 0.3}) {
            const auto T = barbot_surface_tangents(c, s, t);
            EXPECT_NEAR(quad(T[0]), 0.5, 1e-12);
            EXPECT_NEAR(quad(T[1]), 0.5, 1e-12);
            EXPECT_NEAR(bilinear(T[0], T[1]), 0.0, 1e-12);
        }
}

TEST(Barbot, VertexHorofunctionGradient) {
    const BarbotCrown c = barbot_crown_standard(2);
    for (int i = 0; i < 4; ++i) {
        const auto h = Horofunction::from_vector(c.z[i]);
        for (double s : {-1.0, 0.0, 2.0})
            for (double t : {-0.5, 1.0}) {
                const Vec x = barbot_surface_point(c, s, t).rep;
                const auto T = barbot_surface_tangents(c, s, t);
                const Vec g = h.gradient(x, {Vec(T[0] * std::sqrt(2.0)), Vec(T[1] * std::sqrt(2.0))});
                EXPECT_NEAR(quad(g), 2.0, 1e-10);
            }
    }
}

TEST(Barbot, DiagonalDistanceRatio) {
    // Along s -> (s, 0) the induced length is s / sqrt(2) and the spatial distance is acosh((cosh s + 1) / 2).
    const BarbotCrown c = barbot_crown_standard(1);
    const Vec x = barbot_surface_point(c, 0, 0).rep;
    double prev = 0.0;
    for (double s : {5.0, 20.0, 200.0}) {
        const double ratio = spatial_distance(x, barbot_surface_point(c, s, 0).rep) / (s / std::sqrt(2.0));
        EXPECT_NEAR(ratio, std::sqrt(2.0) * std::acosh(0.5 * (std::cosh(s) + 1.0)) / s, 1e-9);
        EXPECT_GT(ratio, prev);
        EXPECT_LE(ratio, std::sqrt(2.0) + 1e-12);
        prev = ratio;
    }
    EXPECT_GT(prev, 0.99 * std::sqrt(2.0));
}

TEST(BoundaryRay, ConvergesToLoopPoint) {
    const auto loop = wobble_loop(2, 256, 0.1, 3);
    for (double R : {2.0, 4.0, 8.0}) {
        for (double th : {0.0, 1.3, 4.0}) {
            const Vec x = boundary_ray_point(loop, th, R).rep;
            EXPECT_NEAR(quad(x), -1.0, 1e-12 * x.squaredNorm());
            const Vec p = loop.point(th);
            const double d = std::min((x.normalized() - p.normalized()).norm(), (x.normalized() + p.normalized()).norm());
            EXPECT_LE(d, 2 * std::exp(-2 * R));
        }
    }
    const auto flat = circle_loop(1, 64);
    const Vec x = boundary_ray_point(flat, 0.7, 3.0).rep;
    EXPECT_EQ(x(3), 0.0);
    EXPECT_THROW(boundary_ray_point(flat, 0.7, 0.0), DomainError);
}
