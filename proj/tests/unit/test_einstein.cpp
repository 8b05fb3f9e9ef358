#include "h2n/einstein.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>
#include <sstream>

using namespace h2n;

namespace {

constexpr double kPi = std::numbers::pi;

Vec circle_point(int n, double a) {
    Vec x = Vec::Zero(n + 3);
    x << std::cos(a), std::sin(a), 1.0, Vec::Zero(n);
    return x;
}

// Crown-edge point between consecutive vertices.
Vec edge_point(const BarbotCrown& c, int i, double t) { return std::cos(t) * c.z[i] + std::sin(t) * c.z[(i + 1) % 4]; }

}  // namespace

TEST(BoundaryPoint, NormalizesAndFixesSign) {
    Vec x(4);
    x << -3, 0, 0, 3;
    const BoundaryPoint p = BoundaryPoint::from_vector(x);
    EXPECT_NEAR(p.u().norm(), 1.0, 1e-15);
    EXPECT_NEAR(p.v().norm(), 1.0, 1e-15);
    EXPECT_GT(p.rep(0), 0.0);
    EXPECT_TRUE(projectively_equal(p.rep, x));
    Vec bad(4);
    bad << 1, 0, 2, 0;
    EXPECT_THROW(BoundaryPoint::from_vector(bad), DomainError);
}

TEST(Transversality, CrownAndCircle) {
    const BarbotCrown c = barbot_crown_standard(1);
    EXPECT_FALSE(transverse(c.z[0], c.z[1]));
    EXPECT_TRUE(transverse(c.z[0], c.z[2]));
    // <x_0, x_pi> = cos(pi) - 1 = -2.
    EXPECT_NEAR(bilinear(circle_point(1, 0), circle_point(1, kPi)), -2.0, 1e-15);
    EXPECT_TRUE(transverse(circle_point(1, 0), circle_point(1, kPi)));
}

TEST(TripleClass, Examples) {
    for (int n = 1; n <= 3; ++n) {
        EXPECT_EQ(triple_class(circle_point(n, 0.1), circle_point(n, 2.0), circle_point(n, 4.0)), TripleClass::positive);
        const BarbotCrown c = barbot_crown_standard(n);
        EXPECT_EQ(triple_class(c.z[0], c.z[1], edge_point(c, 1, 0.4)), TripleClass::nonnegative_degenerate);
    }
    EXPECT_THROW(triple_class(circle_point(1, 0.1), circle_point(1, 0.1), circle_point(1, 1.0)), DomainError);
}

TEST(Photon, CrownEdgesArePhotons) {
    const BarbotCrown c = barbot_crown_standard(2);
    for (int i = 0; i < 4; ++i) {
        const Photon ph(c.z[i], c.z[(i + 1) % 4]);
        EXPECT_TRUE(ph.contains(edge_point(c, i, 0.7)));
        EXPECT_FALSE(ph.contains(c.z[(i + 2) % 4]));
    }
    EXPECT_THROW(Photon(c.z[0], c.z[2]), DomainError);
}

TEST(MinkowskiChart, LiftIsIsotropicAndInverts) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> N(0.0, 1.0);
    for (int n = 1; n <= 3; ++n) {
        const BarbotCrown c = barbot_crown_standard(n);
        const MinkowskiChart ch = MinkowskiChart::from_pair(c.z[0] / bilinear(c.z[0], c.z[2]), c.z[2]);
        EXPECT_TRUE(ch.valid(1e-12));
        for (int k = 0; k < 50; ++k) {
            Vec u(n + 1);
            for (int i = 0; i <= n; ++i) u(i) = N(rng);
            const Vec x = ch.lift(u);
            EXPECT_NEAR(quad(x), 0.0, 1e-12 * x.squaredNorm());
            EXPECT_LT((ch.inverse(x) - u).norm(), 1e-10);
        }
    }
}

TEST(MinkowskiChart, LinesMapToPhotonsAndCircles) {
    const BarbotCrown c = barbot_crown_standard(2);
    const MinkowskiChart ch = MinkowskiChart::from_pair(c.z[0] / bilinear(c.z[0], c.z[2]), c.z[2]);
    Vec p(3), light(3), space(3);
    p << 0.3, -0.2, 0.5;
    light << 1.0, 0.6, 0.8;  // q = 0
    space << 1.0, 0.2, 0.0;  // q > 0
    const Photon ph(ch.lift(p), ch.lift(p + light));
    const SpacelikeCircle circ(ch.lift(p), ch.lift(p + space), ch.a0);
    for (double t : {-3.0, -0.5, 0.25, 2.0, 7.0}) {
        EXPECT_TRUE(ph.contains(ch.lift(p + t * light), 1e-9));
        EXPECT_TRUE(circ.contains(ch.lift(p + t * space), 1e-9));
    }
}

TEST(TauChart, SendsTripleToStandardPosition) {
    for (int n = 1; n <= 3; ++n) {
        const Vec a = circle_point(n, 0.3), b = circle_point(n, 2.1), c = circle_point(n, 4.4);
        const MinkowskiChart ch = tau_chart(a, b, c);
        EXPECT_TRUE(ch.valid(1e-10));
        const Vec wb = ch.inverse(b), wc = ch.inverse(c);
        EXPECT_NEAR(wb(0), -1.0, 1e-10);
        EXPECT_NEAR(wc(0), 1.0, 1e-10);
        EXPECT_NEAR(wb.tail(n).norm() + wc.tail(n).norm(), 0.0, 1e-10);
    }
}

TEST(TauChart, DiamondDistanceIsInvariant) {
    std::mt19937_64 rng(4);
    const int n = 2;
    const auto a = BoundaryPoint::from_vector(circle_point(n, 0.3));
    const auto b = BoundaryPoint::from_vector(circle_point(n, 2.1));
    const auto c = BoundaryPoint::from_vector(circle_point(n, 4.4));
    const auto ch = tau_chart(a, b, c);
    Vec wx(3), wy(3);
    wx << 0.1, 0.2, -0.3;
    wy << -0.4, 0.1, 0.2;
    const auto x = ch.apply(wx), y = ch.apply(wy);
    const double d = diamond_distance(a, b, c, x, y);
    EXPECT_NEAR(d, (wx - wy).norm(), 1e-10);
    for (int k = 0; k < 20; ++k) {
        const auto g = random_isometry<double>(n, rng);
        auto G = [&](const BoundaryPoint& p) { return BoundaryPoint::from_vector(g(p.rep)); };
        EXPECT_NEAR(diamond_distance(G(a), G(b), G(c), G(x), G(y)), d, 1e-9);
    }
}

TEST(Quadruples, CyclicOrderIsPositive) {
    const Vec a = circle_point(1, 0.2), b = circle_point(1, 1.5), c = circle_point(1, 3.0), d = circle_point(1, 4.9);
    EXPECT_TRUE(quadruple_positive(a, b, c, d));
    EXPECT_FALSE(quadruple_positive(a, c, b, d));
}

TEST(Diamond, ContainsPointsBetweenBAndC) {
    const auto a = BoundaryPoint::from_vector(circle_point(1, 0.0));
    const auto b = BoundaryPoint::from_vector(circle_point(1, 2.0));
    const auto c = BoundaryPoint::from_vector(circle_point(1, 4.0));
    const Diamond D(a, b, c);
    EXPECT_TRUE(D.contains(BoundaryPoint::from_vector(circle_point(1, 3.0))));
    EXPECT_TRUE(D.contains(BoundaryPoint::from_vector(circle_point(1, 5.5))));
    EXPECT_FALSE(D.contains(BoundaryPoint::from_vector(circle_point(1, 1.0))));
    const Diamond E(a, b, c, Diamond::Side::avoiding_c);
    EXPECT_TRUE(E.contains(BoundaryPoint::from_vector(circle_point(1, 1.0))));
    EXPECT_FALSE(E.contains(BoundaryPoint::from_vector(circle_point(1, 3.0))));
}

TEST(LipschitzLoop, ClassificationOfGenerators) {
    for (int n = 1; n <= 3; ++n) {
        const auto circle = circle_loop(n, 256);
        EXPECT_EQ(loop_classify(circle), LoopClass::positive);
        for (double t : {0.0, 1.0, 4.0}) EXPECT_NEAR(circle.fiber(t)(0), 1.0, 1e-15);
        const auto wobble = wobble_loop(n, 256, 0.1, 3);
        EXPECT_EQ(loop_classify(wobble), LoopClass::positive);
        EXPECT_GT(wobble.lipschitz_margin(), 0.0);
        const auto rigid = rigid_arc_loop(n, 400);
        EXPECT_EQ(loop_classify(rigid), LoopClass::semipositive);
        const auto arcs = photon_arcs(rigid);
        ASSERT_EQ(arcs.size(), 1u);
        EXPECT_NEAR(arcs[0].begin, 0.0, 1e-12);
        EXPECT_NEAR(arcs[0].end, kPi / 2, 1e-12);
        const auto crown = crown_loop(n, 400);
        EXPECT_EQ(loop_classify(crown), LoopClass::semipositive);
        EXPECT_EQ(photon_arcs(crown).size(), 4u);
    }
}

TEST(LipschitzLoop, GlobalIsometryIsInvalid) {
    std::vector<double> th;
    std::vector<Vec> f;
    for (int k = 0; k < 128; ++k) {
        th.push_back(2 * kPi * k / 128);
        Vec v(2);
        v << std::cos(th.back()), std::sin(th.back());
        f.push_back(v);
    }
    EXPECT_EQ(loop_classify(LipschitzLoop(1, th, f)), LoopClass::invalid);
}

TEST(LipschitzLoop, FiberInterpolatesGeodesically) {
    const auto w = wobble_loop(2, 64, 0.2, 2);
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
        const double t0 = w.theta()[i], t1 = w.theta()[i + 1];
        const Vec mid = w.fiber(0.5 * (t0 + t1));
        EXPECT_NEAR(sphere_distance(mid, w.fibers()[i]), sphere_distance(mid, w.fibers()[i + 1]), 1e-12);
    }
}

TEST(LipschitzLoop, PointOffsetMatchesDifference) {
    const auto loop = rigid_arc_loop(2, 400);
    for (double t : {0.0, 0.7, kPi / 2, 3.0})
        for (double eps : {-1e-3, -1e-6, 1e-6, 1e-3}) {
            const Vec d = loop.point_offset(t, eps);
            const Vec oracle = loop.point(t + eps) - loop.point(t);
            EXPECT_LT((d - oracle).norm(), 1e-12);
        }
    // Far below the resolution of t + eps, the offset keeps its first-order size.
    const Vec tiny = loop.point_offset(0.7, 1e-30);
    EXPECT_NEAR(tiny.head(2).norm(), 1e-30, 1e-42);
}

TEST(LoopFile, RoundTripsAndValidates) {
    const auto w = wobble_loop(2, 32, 0.1, 3);
    std::stringstream ss;
    write_loop(ss, w);
    const auto r = read_loop(ss);
    ASSERT_EQ(r.size(), w.size());
    EXPECT_TRUE(r.smooth());
    for (std::size_t i = 0; i < r.size(); ++i) {
        EXPECT_DOUBLE_EQ(r.theta()[i], w.theta()[i]);
        EXPECT_LT((r.fibers()[i] - w.fibers()[i]).norm(), 1e-15);
    }
    std::stringstream near("einstein-loop v1 n=1 samples=3\n0 1.0000001 0\n2 0 1\n4 1 0\n");
    EXPECT_NEAR(read_loop(near).fibers()[0].norm(), 1.0, 1e-15);
    std::stringstream far("einstein-loop v1 n=1 samples=3\n0 1.1 0\n2 0 1\n4 1 0\n");
    EXPECT_THROW(read_loop(far), DomainError);
    std::stringstream bad("einstein-loop v2 n=1 samples=1\n0 1 0\n");
    EXPECT_THROW(read_loop(bad), DomainError);
}

TEST(BarbotCrown, StandardInvariants) {
    for (int n = 1; n <= 3; ++n) {
        const BarbotCrown c = barbot_crown_standard(n);
        EXPECT_LT(c.normalization_defect(), 1e-15);
        EXPECT_TRUE(subspace_signature<double>({c.z[0], c.z[1], c.z[2], c.z[3]}).is(2, 2, 0));
        EXPECT_NEAR(quad(Vec(c.z[0] + c.z[1] + c.z[2] + c.z[3])), -1.0, 1e-15);
    }
}

TEST(BarbotCrown, SeedFromOrthogonalPair) {
    std::mt19937_64 rng(8);
    for (int n = 1; n <= 3; ++n) {
        const BarbotCrown s = barbot_crown_standard(n);
        for (int k = 0; k < 20; ++k) {
            const auto g = random_isometry<double>(n, rng);
            const BarbotCrown c = seed_crown(g(s.z[0]), g(s.z[1]));
            EXPECT_LT(c.normalization_defect(), 1e-10);
            EXPECT_TRUE(projectively_equal(c.z[0], g(s.z[0]), 1e-9));
            EXPECT_TRUE(projectively_equal(c.z[1], g(s.z[1]), 1e-9));
            EXPECT_NEAR(quad(Vec(c.z[0] + c.z[1] + c.z[2] + c.z[3])), -1.0, 1e-10);
        }
        EXPECT_THROW(seed_crown(s.z[0], s.z[2]), DomainError);
    }
}
