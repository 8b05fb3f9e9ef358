#include "h2n/einstein.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <sstream>

namespace h2n {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double reduce_angle(double t) {
    double r = std::fmod(t, kTwoPi);
    if (r < 0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    return r;
}

// Gram-Schmidt of the natural basis against fixed vectors, keeping vectors with nonzero norm.
std::vector<Vec> orthogonal_complement(const std::vector<Vec>& fixed_null_pair, const std::vector<Vec>& fixed_unit,
                                       int dim, std::size_t want) {
    std::vector<Vec> out;
    for (int i = 0; i < dim && out.size() < want; ++i) {
        Vec v = Vec::Unit(dim, i);
        for (int pass = 0; pass < 2; ++pass) {
            if (fixed_null_pair.size() == 2) {
                const Vec& a = fixed_null_pair[0];
                const Vec& b = fixed_null_pair[1];
                const double ab = bilinear(a, b);
                v -= (bilinear(v, b) / ab) * a + (bilinear(v, a) / ab) * b;
            }
            for (const auto& f : fixed_unit) v -= (bilinear(v, f) / quad(f)) * f;
            for (const auto& f : out) v -= (bilinear(v, f) / quad(f)) * f;
        }
        const double qv = quad(v);
        if (std::abs(qv) <= 1e-8) continue;
        out.push_back(v / std::sqrt(std::abs(qv)));
    }
    if (out.size() != want) throw DomainError("orthogonal complement is degenerate");
    return out;
}

}  // namespace

Vec normalize_null(const Vec& x, double tol) {
    const int n = form_n(x.size());
    (void)n;
    const double nu = x.head(2).norm();
    const double nv = x.tail(x.size() - 2).norm();
    if (nu == 0.0 || nv == 0.0) throw DomainError("boundary point: zero component");
    if (std::abs(nu * nu - nv * nv) > tol * (nu * nu + nv * nv)) throw DomainError("boundary point: vector is not isotropic");
    Vec y(x.size());
    y.head(2) = x.head(2) / nu;
    y.tail(x.size() - 2) = x.tail(x.size() - 2) / nv;
    return y;
}

BoundaryPoint BoundaryPoint::from_vector(const Vec& x, double tol) {
    Vec y = normalize_null(x, tol);
    const double lead = std::abs(y(0)) > 1e-14 ? y(0) : y(1);
    if (lead < 0) y = -y;
    return BoundaryPoint{y};
}

bool projectively_equal(const Vec& a, const Vec& b, double tol) {
    if (a.size() != b.size()) return false;
    const Vec x = normalize_null(a, 1e-6);
    const Vec y = normalize_null(b, 1e-6);
    return (x - y).cwiseAbs().maxCoeff() <= tol || (x + y).cwiseAbs().maxCoeff() <= tol;
}

bool transverse(const Vec& a, const Vec& b, double tol) {
    return std::abs(bilinear(a, b)) > tol * a.norm() * b.norm();
}

bool transverse(const BoundaryPoint& a, const BoundaryPoint& b, double tol) { return transverse(a.rep, b.rep, tol); }

const char* to_string(TripleClass c) {
    switch (c) {
        case TripleClass::positive: return "positive";
        case TripleClass::negative: return "negative";
        default: return "nonnegative_degenerate";
    }
}

TripleClass triple_class(const Vec& a, const Vec& b, const Vec& c, double tol) {
    if (projectively_equal(a, b) || projectively_equal(a, c) || projectively_equal(b, c))
        throw DomainError("triple_class: coincident points");
    const auto sig = subspace_signature<double>({normalize_null(a, 1e-6), normalize_null(b, 1e-6), normalize_null(c, 1e-6)}, tol);
    if (sig.is(2, 1, 0)) return TripleClass::positive;
    if (sig.is(1, 2, 0)) return TripleClass::negative;
    return TripleClass::nonnegative_degenerate;
}

TripleClass triple_class(const BoundaryPoint& a, const BoundaryPoint& b, const BoundaryPoint& c, double tol) {
    return triple_class(a.rep, b.rep, c.rep, tol);
}

namespace {

bool in_span(const std::vector<Vec>& basis, const Vec& x, double tol) {
    Mat B(x.size(), static_cast<Eigen::Index>(basis.size()));
    for (std::size_t i = 0; i < basis.size(); ++i) B.col(static_cast<Eigen::Index>(i)) = basis[i].normalized();
    const Vec y = x.normalized();
    const Vec coef = B.colPivHouseholderQr().solve(y);
    return (B * coef - y).norm() <= tol;
}

}  // namespace

Photon::Photon(const Vec& p, const Vec& q, double tol) : basis{p, q} {
    if (!subspace_signature<double>({p.normalized(), q.normalized()}, tol).is(0, 0, 2) || (p.normalized() - q.normalized()).norm() < tol ||
        (p.normalized() + q.normalized()).norm() < tol)
        throw DomainError("Photon: basis does not span an isotropic plane");
}

bool Photon::contains(const Vec& x, double tol) const { return in_span({basis[0], basis[1]}, x, tol); }

SpacelikeCircle::SpacelikeCircle(const Vec& a, const Vec& b, const Vec& c, double tol) : basis{a, b, c} {
    if (!subspace_signature<double>({a.normalized(), b.normalized(), c.normalized()}, tol).is(2, 1, 0))
        throw DomainError("SpacelikeCircle: span is not of signature (2,1)");
}

bool SpacelikeCircle::contains(const Vec& x, double tol) const {
    return std::abs(quad(x.normalized())) <= tol && in_span({basis[0], basis[1], basis[2]}, x, tol);
}

double chart_q(const Vec& u) { return u(0) * u(0) - u.tail(u.size() - 1).squaredNorm(); }

MinkowskiChart MinkowskiChart::from_pair(const Vec& a0, const Vec& b0, double tol) {
    if (a0.size() != b0.size()) throw DomainError("MinkowskiChart: dimension mismatch");
    if (std::abs(quad(a0)) > tol * a0.squaredNorm() || std::abs(quad(b0)) > tol * b0.squaredNorm())
        throw DomainError("MinkowskiChart: a0, b0 must be isotropic");
    if (std::abs(bilinear(a0, b0) - 1.0) > 1e-9) throw DomainError("MinkowskiChart: <a0,b0> must equal 1");
    const int dim = static_cast<int>(a0.size());
    MinkowskiChart ch{a0, b0, orthogonal_complement({a0, b0}, {}, dim, static_cast<std::size_t>(dim - 2))};
    auto pos = std::find_if(ch.F.begin(), ch.F.end(), [](const Vec& f) { return quad(f) > 0; });
    if (pos == ch.F.end()) throw DomainError("MinkowskiChart: complement has no positive direction");
    std::rotate(ch.F.begin(), pos, pos + 1);
    if (!ch.valid(1e-9)) throw DomainError("MinkowskiChart: complement is not of signature (1,n)");
    return ch;
}

Vec MinkowskiChart::lift(const Vec& u) const {
    if (u.size() != static_cast<Eigen::Index>(F.size())) throw DomainError("MinkowskiChart: coordinate dimension mismatch");
    Vec x = -b0 + 0.5 * chart_q(u) * a0;
    for (std::size_t i = 0; i < F.size(); ++i) x += u(static_cast<Eigen::Index>(i)) * F[i];
    return x;
}

Vec MinkowskiChart::inverse(const Vec& x, double tol) const {
    const double p = bilinear(x, a0);
    if (std::abs(p) <= tol * x.norm() * a0.norm()) throw DomainError("MinkowskiChart: point lies on the light cone of a");
    const Vec x0 = -x / p;
    Vec u(static_cast<Eigen::Index>(F.size()));
    for (std::size_t i = 0; i < F.size(); ++i) {
        const double s = i == 0 ? 1.0 : -1.0;
        u(static_cast<Eigen::Index>(i)) = s * bilinear(x0, F[i]);
    }
    return u;
}

bool MinkowskiChart::valid(double tol) const {
    if (std::abs(quad(a0)) > tol || std::abs(quad(b0)) > tol || std::abs(bilinear(a0, b0) - 1.0) > tol) return false;
    for (std::size_t i = 0; i < F.size(); ++i) {
        if (std::abs(bilinear(F[i], a0)) > tol || std::abs(bilinear(F[i], b0)) > tol) return false;
        for (std::size_t j = 0; j < F.size(); ++j) {
            const double want = i != j ? 0.0 : (i == 0 ? 1.0 : -1.0);
            if (std::abs(bilinear(F[i], F[j]) - want) > tol) return false;
        }
    }
    return true;
}

MinkowskiChart tau_chart(const Vec& a, const Vec& b, const Vec& c) {
    if (triple_class(a, b, c) != TripleClass::positive) throw DomainError("tau_chart: triple is not positive");
    const Vec an = normalize_null(a, 1e-6);
    const double P = bilinear(b, c) / (bilinear(b, an) * bilinear(c, an));
    const Vec a0 = std::sqrt(-P / 2.0) * an;
    const Vec bp = -b / bilinear(b, a0);
    const Vec cp = -c / bilinear(c, a0);
    const Vec E = (cp - bp) / 2.0;
    const Vec b0 = a0 / 2.0 - (bp + cp) / 2.0;
    const int dim = static_cast<int>(a.size());
    MinkowskiChart ch{a0, b0, {E}};
    auto rest = orthogonal_complement({a0, b0}, {E}, dim, static_cast<std::size_t>(dim - 3));
    ch.F.insert(ch.F.end(), rest.begin(), rest.end());
    return ch;
}

MinkowskiChart tau_chart(const BoundaryPoint& a, const BoundaryPoint& b, const BoundaryPoint& c) {
    return tau_chart(a.rep, b.rep, c.rep);
}

bool in_standard_diamond(const Vec& w, double tol) {
    const double r = w.tail(w.size() - 1).norm();
    return r < std::min(w(0) + 1.0, 1.0 - w(0)) + tol;
}

Diamond::Diamond(const BoundaryPoint& a, const BoundaryPoint& b, const BoundaryPoint& c, Side s) : tau{a, b, c}, side(s) {
    if (triple_class(a, b, c) != TripleClass::positive) throw DomainError("Diamond: triple is not positive");
}

bool Diamond::contains(const BoundaryPoint& x) const {
    const auto ch = tau_chart(tau[0], tau[1], tau[2]);
    const Vec w = ch.inverse(x);
    const double r = w.tail(w.size() - 1).norm();
    return side == Side::containing_c ? w(0) + 1.0 > r : w(0) + 1.0 < -r;
}

double diamond_distance(const BoundaryPoint& a, const BoundaryPoint& b, const BoundaryPoint& c, const BoundaryPoint& x,
                        const BoundaryPoint& y, double tol) {
    const auto ch = tau_chart(a, b, c);
    const Vec wx = ch.inverse(x);
    const Vec wy = ch.inverse(y);
    if (!in_standard_diamond(wx, tol) || !in_standard_diamond(wy, tol))
        throw DomainError("diamond_distance: point outside the diamond");
    return (wx - wy).norm();
}

bool quadruple_positive(const Vec& a, const Vec& b, const Vec& c, const Vec& d, double tol) {
    for (const auto& t : {std::array<const Vec*, 3>{&a, &b, &c}, std::array<const Vec*, 3>{&a, &b, &d},
                          std::array<const Vec*, 3>{&a, &c, &d}, std::array<const Vec*, 3>{&b, &c, &d}}) {
        if (triple_class(*t[0], *t[1], *t[2], tol) != TripleClass::positive)
            throw DomainError("quadruple_positive: degenerate or negative sub-triple");
    }
    const Vec w = tau_chart(a, b, c).inverse(d);
    return w(0) - 1.0 > 0.0;
}

bool quadruple_positive(const BoundaryPoint& a, const BoundaryPoint& b, const BoundaryPoint& c, const BoundaryPoint& d,
                        double tol) {
    return quadruple_positive(a.rep, b.rep, c.rep, d.rep, tol);
}

double circle_distance(double a, double b) {
    const double d = std::fmod(std::abs(a - b), kTwoPi);
    return std::min(d, kTwoPi - d);
}

double sphere_distance(const Vec& a, const Vec& b) { return 2.0 * std::atan2((a - b).norm(), (a + b).norm()); }

LipschitzLoop::LipschitzLoop(int n, std::vector<double> theta, std::vector<Vec> f, bool smooth)
    : n_(n), smooth_(smooth) {
    if (n < 1) throw DomainError("LipschitzLoop: n must be at least 1");
    if (theta.size() != f.size()) throw DomainError("LipschitzLoop: sample count mismatch");
    if (theta.empty()) throw DomainError("LipschitzLoop: no samples");
    std::vector<std::size_t> order(theta.size());
    std::iota(order.begin(), order.end(), 0);
    for (auto& t : theta) t = reduce_angle(t);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return theta[i] < theta[j]; });
    for (std::size_t i : order) {
        if (!theta_.empty() && theta[i] - theta_.back() <= 1e-14) continue;
        Vec v = f[i];
        if (v.size() != n + 1) throw DomainError("LipschitzLoop: fiber dimension mismatch");
        const double nv = v.norm();
        if (std::abs(nv - 1.0) > 1e-6) throw DomainError("LipschitzLoop: fiber sample is not a unit vector");
        theta_.push_back(theta[i]);
        f_.push_back(v / nv);
    }
}

Vec LipschitzLoop::fiber(double t) const {
    t = reduce_angle(t);
    const std::size_t k = theta_.size();
    if (k == 1) return f_[0];
    auto it = std::upper_bound(theta_.begin(), theta_.end(), t);
    std::size_t hi = static_cast<std::size_t>(it - theta_.begin()) % k;
    std::size_t lo = (hi + k - 1) % k;
    double span = theta_[hi] - theta_[lo];
    double off = t - theta_[lo];
    if (span <= 0) span += kTwoPi;
    if (off < 0) off += kTwoPi;
    const double s = off / span;
    const Vec& a = f_[lo];
    const Vec& b = f_[hi];
    const double w = sphere_distance(a, b);
    if (w < 1e-12) return a;
    if (std::abs(w - std::numbers::pi) < 1e-12) throw DomainError("LipschitzLoop: antipodal consecutive samples");
    Vec r = (std::sin((1 - s) * w) * a + std::sin(s * w) * b) / std::sin(w);
    return r / r.norm();
}

Vec LipschitzLoop::point_offset(double t, double eps) const {
    t = reduce_angle(t);
    const std::size_t k = theta_.size();
    Vec d = Vec::Zero(n_ + 3);
    const double h = std::sin(eps / 2);
    d(0) = -2.0 * std::sin(t + eps / 2) * h;
    d(1) = 2.0 * std::cos(t + eps / 2) * h;
    if (k == 1 || eps == 0) return d;
    // The segment containing t on the side of eps.
    auto it = eps > 0 ? std::upper_bound(theta_.begin(), theta_.end(), t) : std::lower_bound(theta_.begin(), theta_.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - theta_.begin()) % k;
    const std::size_t lo = (hi + k - 1) % k;
    double span = theta_[hi] - theta_[lo];
    double off = t - theta_[lo];
    if (span <= 0) span += kTwoPi;
    if (off < 0) off += kTwoPi;
    if (off > span) off -= kTwoPi;
    const double s1 = off / span, s2 = (off + eps) / span;
    if (s2 < 0 || s2 > 1) {
        d.tail(n_ + 1) = fiber(t + eps) - fiber(t);
        return d;
    }
    const Vec& a = f_[lo];
    const Vec& b = f_[hi];
    const double w = sphere_distance(a, b);
    if (w < 1e-12) return d;
    const double hs = std::sin(eps / span * w / 2);
    d.tail(n_ + 1) = (-2.0 * std::cos((2.0 - s1 - s2) * w / 2) * hs * a + 2.0 * std::cos((s1 + s2) * w / 2) * hs * b) / std::sin(w);
    return d;
}

Vec LipschitzLoop::point(double t) const {
    Vec x(n_ + 3);
    x(0) = std::cos(t);
    x(1) = std::sin(t);
    x.tail(n_ + 1) = fiber(t);
    return x;
}

Vec LipschitzLoop::sample_point(std::size_t i) const {
    Vec x(n_ + 3);
    x(0) = std::cos(theta_[i]);
    x(1) = std::sin(theta_[i]);
    x.tail(n_ + 1) = f_[i];
    return x;
}

double LipschitzLoop::lipschitz_margin() const {
    const std::size_t k = theta_.size();
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = (i + 1) % k;
        m = std::min(m, circle_distance(theta_[i], theta_[j]) - sphere_distance(f_[i], f_[j]));
    }
    return m;
}

const char* to_string(LoopClass c) {
    switch (c) {
        case LoopClass::positive: return "positive";
        case LoopClass::semipositive: return "semipositive";
        default: return "invalid";
    }
}

LoopClass loop_classify(const LipschitzLoop& loop, double tol) {
    const auto& th = loop.theta();
    const auto& f = loop.fibers();
    const std::size_t k = th.size();
    if (k < 3) throw DomainError("loop_classify: fewer than 3 samples");
    double gmin = std::numeric_limits<double>::infinity();
    double gabs = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            const double g = circle_distance(th[i], th[j]) - sphere_distance(f[i], f[j]);
            gmin = std::min(gmin, g);
            gabs = std::max(gabs, std::abs(g));
        }
    if (gmin > tol) return LoopClass::positive;
    if (gmin < -tol || gabs <= tol) return LoopClass::invalid;
    return LoopClass::semipositive;
}

std::vector<Arc> photon_arcs(const LipschitzLoop& loop, double tol) {
    const auto& th = loop.theta();
    const auto& f = loop.fibers();
    const std::size_t k = th.size();
    auto rigid = [&](std::size_t i, std::size_t j) {
        return circle_distance(th[i], th[j]) - sphere_distance(f[i], f[j]) <= tol;
    };
    auto edge = [&](std::size_t i) { return rigid(i, (i + 1) % k); };
    std::vector<Arc> arcs;
    if (k < 2) return arcs;
    std::size_t start = 0;
    bool any_rigid = false, any_loose = false;
    for (std::size_t i = 0; i < k; ++i) (edge(i) ? any_rigid : any_loose) = true;
    if (!any_rigid) return arcs;
    if (any_loose)
        for (std::size_t i = 0; i < k; ++i)
            if (!edge((i + k - 1) % k) && edge(i)) {
                start = i;
                break;
            }
    std::size_t done = 0;
    std::size_t i = start;
    while (done < k) {
        if (!edge(i)) {
            i = (i + 1) % k;
            ++done;
            continue;
        }
        std::vector<std::size_t> members{i};
        std::size_t j = i;
        while (done < k && edge(j)) {
            const std::size_t nxt = (j + 1) % k;
            bool ok = true;
            for (std::size_t m : members)
                if (!rigid(m, nxt)) {
                    ok = false;
                    break;
                }
            if (!ok) break;
            members.push_back(nxt);
            j = nxt;
            ++done;
        }
        arcs.push_back(Arc{i, j, th[i], th[j]});
        i = j;
    }
    return arcs;
}

std::array<BoundaryPoint, 4> BarbotCrown::vertices() const {
    return {BoundaryPoint::from_vector(z[0]), BoundaryPoint::from_vector(z[1]), BoundaryPoint::from_vector(z[2]),
            BoundaryPoint::from_vector(z[3])};
}

double BarbotCrown::normalization_defect() const {
    double d = 0.0;
    for (int i = 0; i < 4; ++i) {
        d = std::max(d, std::abs(quad(z[i])));
        d = std::max(d, std::abs(bilinear(z[i], z[(i + 1) % 4])));
        d = std::max(d, std::abs(bilinear(z[i], z[(i + 2) % 4]) + 0.25));
    }
    return d;
}

BarbotCrown barbot_crown_standard(int n) {
    if (n < 1) throw DomainError("barbot_crown_standard: n must be at least 1");
    const double s = 1.0 / (2.0 * std::numbers::sqrt2);
    BarbotCrown c;
    for (auto& z : c.z) z = Vec::Zero(n + 3);
    c.z[0] << 1, 0, 1, 0, Vec::Zero(n - 1);
    c.z[1] << 0, 1, 0, 1, Vec::Zero(n - 1);
    c.z[2] << -1, 0, 1, 0, Vec::Zero(n - 1);
    c.z[3] << 0, -1, 0, 1, Vec::Zero(n - 1);
    for (auto& z : c.z) z *= s;
    return c;
}

BarbotCrown seed_crown(const Vec& v1, const Vec& v2, double tol) {
    const double scale = v1.norm() * v2.norm();
    if (std::abs(quad(v1)) > tol * v1.squaredNorm() || std::abs(quad(v2)) > tol * v2.squaredNorm() ||
        std::abs(bilinear(v1, v2)) > tol * scale)
        throw DomainError("seed_crown: seeds must span an isotropic plane");
    Mat A(2, v1.size());
    A.row(0) = lower(v1).transpose();
    A.row(1) = lower(v2).transpose();
    const Mat AAt = A * A.transpose();
    auto min_norm = [&](double r0, double r1) {
        Vec rhs(2);
        rhs << r0, r1;
        return Vec(A.transpose() * AAt.ldlt().solve(rhs));
    };
    const Vec u1 = min_norm(1.0, 0.0);
    const Vec u2 = min_norm(0.0, 1.0);
    const Vec w1 = u1 - 0.5 * quad(u1) * v1;
    const Vec w2 = u2 - 0.5 * quad(u2) * v2 - bilinear(w1, u2) * v1;
    BarbotCrown c{{v1, v2, -0.25 * w1, -0.25 * w2}};
    if (!subspace_signature<double>({c.z[0], c.z[1], c.z[2], c.z[3]}, 1e-9).is(2, 2, 0))
        throw DomainError("seed_crown: degenerate completion");
    return c;
}

Isometry<double> cartan_element(const BarbotCrown& crown, double lambda, double mu) {
    return cartan_element<double>(crown.z, lambda, mu);
}

namespace {

std::vector<double> uniform_angles(std::size_t k) {
    std::vector<double> t(k);
    for (std::size_t j = 0; j < k; ++j) t[j] = kTwoPi * static_cast<double>(j) / static_cast<double>(k);
    return t;
}

Vec fiber_at_angle(int n, double phi) {
    Vec v = Vec::Zero(n + 1);
    v(0) = std::cos(phi);
    v(1) = std::sin(phi);
    return v;
}

LipschitzLoop angle_loop(int n, std::size_t k, bool smooth, const std::function<double(double)>& phi) {
    if (n < 1) throw DomainError("loop generator: n must be at least 1");
    if (k < 3) throw DomainError("loop generator: at least 3 samples required");
    auto th = uniform_angles(k);
    std::vector<Vec> f;
    f.reserve(k);
    for (double t : th) f.push_back(fiber_at_angle(n, phi(t)));
    return LipschitzLoop(n, std::move(th), std::move(f), smooth);
}

}  // namespace

LipschitzLoop circle_loop(int n, std::size_t samples) {
    return angle_loop(n, samples, true, [](double) { return 0.0; });
}

LipschitzLoop wobble_loop(int n, std::size_t samples, double amplitude, int frequency) {
    if (!(std::abs(amplitude) * frequency < 1.0)) throw DomainError("wobble_loop: amplitude * frequency must be below 1");
    return angle_loop(n, samples, true, [=](double t) { return amplitude * std::sin(frequency * t); });
}

LipschitzLoop fourier_loop(int n, std::size_t samples, const std::vector<double>& sin_coeffs,
                           const std::vector<double>& cos_coeffs) {
    return angle_loop(n, samples, true, [&](double t) {
        double phi = 0.0;
        for (std::size_t k = 0; k < sin_coeffs.size(); ++k) phi += sin_coeffs[k] * std::sin(static_cast<double>(k + 1) * t);
        for (std::size_t k = 0; k < cos_coeffs.size(); ++k) phi += cos_coeffs[k] * std::cos(static_cast<double>(k + 1) * t);
        return phi;
    });
}

LipschitzLoop rigid_arc_loop(int n, std::size_t samples) {
    if (samples % 4 != 0) throw DomainError("rigid_arc_loop: sample count must be divisible by 4");
    const double h = std::numbers::pi / 2.0;
    return angle_loop(n, samples, false, [=](double t) { return t <= h ? t : h - (t - h) / 3.0; });
}

LipschitzLoop crown_loop(int n, std::size_t samples) {
    if (samples % 4 != 0) throw DomainError("crown_loop: sample count must be divisible by 4");
    return angle_loop(n, samples, false, [](double t) {
        const double r = std::fmod(t, std::numbers::pi);
        return r <= std::numbers::pi / 2.0 ? r : std::numbers::pi - r;
    });
}

LipschitzLoop read_loop(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DomainError("loop file: missing header");
    std::istringstream hs(line);
    std::string magic, version;
    hs >> magic >> version;
    if (magic != "einstein-loop" || version != "v1") throw DomainError("loop file: bad header");
    int n = -1;
    long k = -1;
    bool smooth = false;
    std::string tok;
    while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw DomainError("loop file: bad header field " + tok);
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        try {
            if (key == "n") n = std::stoi(val);
            else if (key == "samples") k = std::stol(val);
            else if (key == "smooth") smooth = std::stoi(val) != 0;
            else throw DomainError("loop file: unknown header field " + key);
        } catch (const std::logic_error&) {
            throw DomainError("loop file: bad header value " + tok);
        }
    }
    if (n < 1 || k < 1) throw DomainError("loop file: header needs n >= 1 and samples >= 1");
    std::vector<double> th;
    std::vector<Vec> f;
    for (long i = 0; i < k; ++i) {
        if (!std::getline(in, line)) throw DomainError("loop file: truncated");
        std::istringstream ls(line);
        double t;
        Vec v(n + 1);
        if (!(ls >> t)) throw DomainError("loop file: bad sample line");
        for (int j = 0; j <= n; ++j)
            if (!(ls >> v(j))) throw DomainError("loop file: bad sample line");
        const double nv = v.norm();
        if (std::abs(nv - 1.0) > 1e-6) throw DomainError("loop file: fiber sample off the unit sphere");
        th.push_back(t);
        f.push_back(v / nv);
    }
    return LipschitzLoop(n, std::move(th), std::move(f), smooth);
}

void write_loop(std::ostream& out, const LipschitzLoop& loop) {
    out << "einstein-loop v1 n=" << loop.n() << " samples=" << loop.size();
    if (loop.smooth()) out << " smooth=1";
    out << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < loop.size(); ++i) {
        out << loop.theta()[i];
        for (Eigen::Index j = 0; j < loop.fibers()[i].size(); ++j) out << ' ' << loop.fibers()[i](j);
        out << '\n';
    }
}

LipschitzLoop load_loop(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open loop file " + path);
    return read_loop(in);
}

void save_loop(const std::string& path, const LipschitzLoop& loop) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write loop file " + path);
    write_loop(out, loop);
}

}  // namespace h2n
