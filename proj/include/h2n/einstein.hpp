#pragma once

#include "h2n/qcore.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace h2n {

// Point of the Einstein quadric, stored as (u, v) with |u| = |v| = 1 and the
// first nonzero coordinate of u positive.
struct BoundaryPoint {
    Vec rep;

    static BoundaryPoint from_vector(const Vec& x, double tol = 1e-8);
    [[nodiscard]] int n() const { return form_n(rep.size()); }
    [[nodiscard]] Vec u() const { return rep.head(2); }
    [[nodiscard]] Vec v() const { return rep.tail(rep.size() - 2); }
};

// Scales an isotropic vector to |u| = |v| = 1 keeping its ray (double-cover lift).
Vec normalize_null(const Vec& x, double tol = 1e-8);
bool projectively_equal(const Vec& a, const Vec& b, double tol = 1e-9);
bool transverse(const Vec& a, const Vec& b, double tol = 1e-8);
bool transverse(const BoundaryPoint& a, const BoundaryPoint& b, double tol = 1e-8);

enum class TripleClass { positive, nonnegative_degenerate, negative };
const char* to_string(TripleClass c);
TripleClass triple_class(const Vec& a, const Vec& b, const Vec& c, double tol = 1e-8);
TripleClass triple_class(const BoundaryPoint& a, const BoundaryPoint& b, const BoundaryPoint& c, double tol = 1e-8);

struct Photon {
    std::array<Vec, 2> basis;
    Photon(const Vec& p, const Vec& q, double tol = 1e-9);
    [[nodiscard]] bool contains(const Vec& x, double tol = 1e-9) const;
};

struct SpacelikeCircle {
    std::array<Vec, 3> basis;
    SpacelikeCircle(const Vec& a, const Vec& b, const Vec& c, double tol = 1e-9);
    [[nodiscard]] bool contains(const Vec& x, double tol = 1e-9) const;
};

// Quadratic form of the chart space R^{1,n}: u0^2 - |u'|^2.
double chart_q(const Vec& u);

// psi(u) = sum u_i F_i - b0 + q(u)/2 a0, with F_0 positive and F_k negative unit vectors.
struct MinkowskiChart {
    Vec a0;
    Vec b0;
    std::vector<Vec> F;

    static MinkowskiChart from_pair(const Vec& a0, const Vec& b0, double tol = 1e-9);
    [[nodiscard]] int n() const { return form_n(a0.size()); }
    [[nodiscard]] Vec lift(const Vec& u) const;
    [[nodiscard]] BoundaryPoint apply(const Vec& u) const { return BoundaryPoint::from_vector(lift(u)); }
    [[nodiscard]] Vec inverse(const Vec& x, double tol = 1e-10) const;
    [[nodiscard]] Vec inverse(const BoundaryPoint& x, double tol = 1e-10) const { return inverse(x.rep, tol); }
    [[nodiscard]] bool valid(double tol = 1e-12) const;
};

// Chart for a with b at (-1,0,..,0) and c at (1,0,..,0).
MinkowskiChart tau_chart(const Vec& a, const Vec& b, const Vec& c);
MinkowskiChart tau_chart(const BoundaryPoint& a, const BoundaryPoint& b, const BoundaryPoint& c);

// Open diamond {|w'| < min(w0 + 1, 1 - w0)} in tau-chart coordinates.
bool in_standard_diamond(const Vec& w, double tol = 0.0);

struct Diamond {
    enum class Side { containing_c, avoiding_c };
    std::array<BoundaryPoint, 3> tau;
    Side side = Side::containing_c;

    Diamond(const BoundaryPoint& a, const BoundaryPoint& b, const BoundaryPoint& c, Side s = Side::containing_c);
    [[nodiscard]] bool contains(const BoundaryPoint& x) const;
};

double diamond_distance(const BoundaryPoint& a, const BoundaryPoint& b, const BoundaryPoint& c,
                        const BoundaryPoint& x, const BoundaryPoint& y, double tol = 1e-9);
bool quadruple_positive(const Vec& a, const Vec& b, const Vec& c, const Vec& d, double tol = 1e-8);
bool quadruple_positive(const BoundaryPoint& a, const BoundaryPoint& b, const BoundaryPoint& c,
                        const BoundaryPoint& d, double tol = 1e-8);

double circle_distance(double a, double b);
double sphere_distance(const Vec& a, const Vec& b);

// Sampled graph of a 1-Lipschitz map S^1 -> S^n.
class LipschitzLoop {
public:
    LipschitzLoop(int n, std::vector<double> theta, std::vector<Vec> f, bool smooth = false);

    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] std::size_t size() const { return theta_.size(); }
    [[nodiscard]] const std::vector<double>& theta() const { return theta_; }
    [[nodiscard]] const std::vector<Vec>& fibers() const { return f_; }
    [[nodiscard]] bool smooth() const { return smooth_; }
    [[nodiscard]] Vec fiber(double theta) const;
    // Lift (cos t, sin t, f(t)) on the double cover.
    [[nodiscard]] Vec point(double theta) const;
    [[nodiscard]] Vec sample_point(std::size_t i) const;
    // point(t + eps) - point(t), without cancellation for tiny eps.
    [[nodiscard]] Vec point_offset(double theta, double eps) const;
    [[nodiscard]] double lipschitz_margin() const;

private:
    int n_;
    std::vector<double> theta_;
    std::vector<Vec> f_;
    bool smooth_;
};

enum class LoopClass { positive, semipositive, invalid };
const char* to_string(LoopClass c);
LoopClass loop_classify(const LipschitzLoop& loop, double tol = 1e-9);

struct Arc {
    std::size_t first = 0;  // sample indices, cyclic
    std::size_t last = 0;
    double begin = 0.0;
    double end = 0.0;  // may be < begin when the arc wraps through 0
};
std::vector<Arc> photon_arcs(const LipschitzLoop& loop, double tol = 1e-9);

struct BarbotCrown {
    std::array<Vec, 4> z;

    [[nodiscard]] int n() const { return form_n(z[0].size()); }
    [[nodiscard]] std::array<BoundaryPoint, 4> vertices() const;
    // Worst deviation from the normalization <z_i,z_i> = <z_i,z_{i+1}> = 0, <z_i,z_{i+2}> = -1/4.
    [[nodiscard]] double normalization_defect() const;
};

BarbotCrown barbot_crown_standard(int n);
// Completes an orthogonal isotropic pair (v1, v2) to a normalized crown.
BarbotCrown seed_crown(const Vec& v1, const Vec& v2, double tol = 1e-9);
Isometry<double> cartan_element(const BarbotCrown& crown, double lambda, double mu);

LipschitzLoop circle_loop(int n, std::size_t samples);
LipschitzLoop wobble_loop(int n, std::size_t samples, double amplitude, int frequency);
// Fiber angle phi(t) = sum_k a_k sin(k t) + b_k cos(k t) in the (e1, e2) plane of S^n.
LipschitzLoop fourier_loop(int n, std::size_t samples, const std::vector<double>& sin_coeffs,
                           const std::vector<double>& cos_coeffs);
// Rigid on [0, pi/2], slope -1/3 elsewhere.
LipschitzLoop rigid_arc_loop(int n, std::size_t samples);
// The standard crown traced as a graph: fiber angle is a triangle wave with vertices at k pi/2.
LipschitzLoop crown_loop(int n, std::size_t samples);

LipschitzLoop read_loop(std::istream& in);
void write_loop(std::ostream& out, const LipschitzLoop& loop);
LipschitzLoop load_loop(const std::string& path);
void save_loop(const std::string& path, const LipschitzLoop& loop);

}  // namespace h2n
