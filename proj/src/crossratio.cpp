#include "h2n/crossratio.hpp"

#include "h2n/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>

namespace h2n {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double omega(const ProjPoint& p, const ProjPoint& q) { return p(0) * q(1) - p(1) * q(0); }

double chart_bilinear(const Vec& u, const Vec& v) {
    return u(0) * v(0) - u.tail(u.size() - 1).dot(v.tail(v.size() - 1));
}

std::mt19937_64 chunk_rng(std::uint64_t seed, std::size_t chunk) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(chunk)};
    return std::mt19937_64(seq);
}

std::array<std::size_t, 4> sorted_quadruple(std::mt19937_64& rng, std::size_t k) {
    std::uniform_int_distribution<std::size_t> U(0, k - 1);
    std::array<std::size_t, 4> q{};
    for (;;) {
        for (auto& v : q) v = U(rng);
        std::sort(q.begin(), q.end());
        if (q[0] != q[1] && q[1] != q[2] && q[2] != q[3]) return q;
    }
}

Vec circle_point(int n, double a) {
    Vec x = Vec::Zero(n + 3);
    x(0) = std::cos(a);
    x(1) = std::sin(a);
    x(2) = 1.0;
    return x;
}

}  // namespace

double cross_ratio_b(const Vec& x, const Vec& y, const Vec& z, const Vec& t, double tol) {
    if (!transverse(x, y, tol) || !transverse(z, t, tol) || !transverse(x, t, tol) || !transverse(z, y, tol))
        throw DomainError("cross_ratio_b: non-transverse pair");
    return bilinear(x, y) * bilinear(z, t) / (bilinear(x, t) * bilinear(z, y));
}

double cross_ratio_b(const BoundaryPoint& x, const BoundaryPoint& y, const BoundaryPoint& z, const BoundaryPoint& t,
                     double tol) {
    return cross_ratio_b(x.rep, y.rep, z.rep, t.rep, tol);
}

ProjPoint rp1_from_angle(double a) { return ProjPoint(std::cos(a / 2.0), std::sin(a / 2.0)); }

double cross_ratio_real(const ProjPoint& x, const ProjPoint& y, const ProjPoint& z, const ProjPoint& t) {
    const std::array<const ProjPoint*, 4> p{&x, &y, &z, &t};
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (std::abs(omega(*p[i], *p[j])) <= 1e-14 * p[i]->norm() * p[j]->norm())
                throw DomainError("cross_ratio_real: coincident points");
    return omega(x, y) * omega(z, t) / (omega(x, t) * omega(z, y));
}

SampledBoundaryMap::SampledBoundaryMap(std::vector<double> d, std::vector<Vec> im, bool dense)
    : domain(std::move(d)), image(std::move(im)), dense_subset(dense) {
    if (domain.size() != image.size()) throw DomainError("SampledBoundaryMap: length mismatch");
    for (std::size_t i = 0; i < domain.size(); ++i) {
        if (!(domain[i] >= 0.0 && domain[i] < kTwoPi)) throw DomainError("SampledBoundaryMap: domain angle out of range");
        if (i > 0 && !(domain[i] > domain[i - 1])) throw DomainError("SampledBoundaryMap: domain not strictly increasing");
        if (std::abs(quad(image[i])) > 1e-8 * image[i].squaredNorm())
            throw DomainError("SampledBoundaryMap: image sample is not isotropic");
    }
}

SampledBoundaryMap standard_circle_map(int n, const std::vector<double>& angles) {
    std::vector<Vec> im;
    im.reserve(angles.size());
    for (double a : angles) im.push_back(circle_point(n, a));
    return SampledBoundaryMap(angles, std::move(im));
}

bool circle_map_test(const SampledBoundaryMap& map, double tol, std::uint64_t seed, std::size_t max_quadruples) {
    const std::size_t k = map.size();
    if (k < 4) throw DomainError("circle_map_test: at least 4 samples required");
    bool has_positive = false;
    for (std::size_t s = 0; s < k && !has_positive; ++s) {
        try {
            has_positive = triple_class(map.image[s], map.image[(s + k / 3) % k], map.image[(s + 2 * k / 3) % k]) ==
                           TripleClass::positive;
        } catch (const DomainError&) {
        }
    }
    if (!has_positive) throw DomainError("circle_map_test: image contains no positive triple");

    std::vector<std::array<std::size_t, 4>> quads;
    const double total = static_cast<double>(k) * (k - 1) * (k - 2) * (k - 3) / 24.0;
    if (total <= static_cast<double>(max_quadruples)) {
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = i + 1; j < k; ++j)
                for (std::size_t l = j + 1; l < k; ++l)
                    for (std::size_t m = l + 1; m < k; ++m) quads.push_back({i, j, l, m});
    } else {
        auto rng = chunk_rng(seed, 0);
        for (std::size_t q = 0; q < max_quadruples; ++q) quads.push_back(sorted_quadruple(rng, k));
    }
    std::vector<Vec> rep(k);
    for (std::size_t i = 0; i < k; ++i) rep[i] = normalize_null(map.image[i], 1e-6);
    for (const auto& q : quads) {
        const double r = cross_ratio_real(rp1_from_angle(map.domain[q[0]]), rp1_from_angle(map.domain[q[1]]),
                                          rp1_from_angle(map.domain[q[2]]), rp1_from_angle(map.domain[q[3]]));
        double b;
        try {
            b = cross_ratio_b(rep[q[0]], rep[q[1]], rep[q[2]], rep[q[3]]);
        } catch (const DomainError&) {
            return false;
        }
        if (std::abs(b - r * r) > tol * (1.0 + r * r)) return false;
        const Mat G = gram<double>({rep[q[0]], rep[q[1]], rep[q[2]], rep[q[3]]});
        const double g = G.cwiseAbs().maxCoeff();
        if (std::abs(G.determinant()) > tol * g * g * g * g) return false;
    }
    return true;
}

QSCertificate qs_certify(const SampledBoundaryMap& map, double A, std::size_t n_quadruples, std::uint64_t seed) {
    const std::size_t k = map.size();
    if (!(A > 1.0)) throw DomainError("qs_certify: A must exceed 1");
    if (k < 4) throw DomainError("qs_certify: at least 4 samples required");
    std::vector<Vec> rep(k);
    for (std::size_t i = 0; i < k; ++i) rep[i] = normalize_null(map.image[i], 1e-6);
    const std::size_t quarter = std::max<std::size_t>(1, k / 4);
    try {
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t step = i % 2 == 0 ? 1 : quarter;
            const std::size_t j = (i + step) % k, l = (i + 2 * step) % k, m = (i + 3 * step) % k;
            if (!quadruple_positive(rep[i], rep[j], rep[l], rep[m])) throw DomainError("qs_certify: non-positive sampled map");
        }
    } catch (const DomainError&) {
        throw DomainError("qs_certify: non-positive sampled map");
    }

    constexpr std::size_t kChunks = 16;
    std::vector<QSCertificate> part(kChunks);
    parallel_chunks(kChunks, [&](std::size_t c) {
        auto rng = chunk_rng(seed, c);
        const std::size_t quota = n_quadruples / kChunks + (c < n_quadruples % kChunks ? 1 : 0);
        QSCertificate& out = part[c];
        std::size_t attempts = 0;
        while (out.quadruples_tested < quota && attempts < 200 * quota + 1000) {
            ++attempts;
            const auto q = sorted_quadruple(rng, k);
            const double r = std::abs(cross_ratio_real(rp1_from_angle(map.domain[q[0]]), rp1_from_angle(map.domain[q[1]]),
                                                       rp1_from_angle(map.domain[q[2]]), rp1_from_angle(map.domain[q[3]])));
            if (r < 1.0 / A || r > A) continue;
            double b;
            try {
                b = std::abs(cross_ratio_b(rep[q[0]], rep[q[1]], rep[q[2]], rep[q[3]]));
            } catch (const DomainError&) {
                throw DomainError("qs_certify: non-positive sampled map");
            }
            const double Bq = std::max(b, 1.0 / b);
            ++out.quadruples_tested;
            if (Bq > out.B) {
                out.B = Bq;
                out.worst_quadruple = {map.domain[q[0]], map.domain[q[1]], map.domain[q[2]], map.domain[q[3]]};
            }
        }
    });
    QSCertificate cert;
    cert.A = A;
    cert.seed = seed;
    for (const auto& p : part) {
        cert.quadruples_tested += p.quadruples_tested;
        if (p.B > cert.B) {
            cert.B = p.B;
            cert.worst_quadruple = p.worst_quadruple;
        }
    }
    return cert;
}

double qs_rescale(double A, double B, double C) {
    if (!(A > 1.0) || !(C > 1.0) || !(B >= 1.0)) throw DomainError("qs_rescale: need A, C > 1 and B >= 1");
    if (C <= A) return B;
    return std::pow(B, 1.0 + std::log(C / A));
}

bool causal_future(const Vec& p, const Vec& w, double tol) {
    const Vec d = w - p;
    return chart_q(d) >= -tol * (1.0 + d.squaredNorm()) && d(0) >= -tol;
}

SemipositiveCompletion::SemipositiveCompletion(std::vector<double> x, std::vector<Vec> values, double tol)
    : x_(std::move(x)), v_(std::move(values)) {
    if (x_.size() != v_.size() || x_.empty()) throw DomainError("semipositive_complete: bad sample arrays");
    for (std::size_t i = 1; i < x_.size(); ++i)
        if (!(x_[i] > x_[i - 1])) throw DomainError("semipositive_complete: abscissae must increase strictly");
    for (std::size_t i = 0; i < v_.size(); ++i) {
        if (v_[i].size() != v_[0].size() || v_[i].size() < 2) throw DomainError("semipositive_complete: bad value dimension");
        for (std::size_t j = i + 1; j < v_.size(); ++j)
            if (!causal_future(v_[i], v_[j], tol)) throw DomainError("semipositive_complete: input is not semi-positive");
    }
}

Vec SemipositiveCompletion::right(double x) const {
    auto it = std::lower_bound(x_.begin(), x_.end(), x);
    if (it == x_.end()) throw DomainError("semipositive_complete: no sample to the right");
    return v_[static_cast<std::size_t>(it - x_.begin())];
}

Vec SemipositiveCompletion::left(double x) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    if (it == x_.begin()) throw DomainError("semipositive_complete: no sample to the left");
    return v_[static_cast<std::size_t>(it - x_.begin()) - 1];
}

void contraction_hypotheses(const BoundaryPoint& a, const BoundaryPoint& b, const BoundaryPoint& c,
                            const BoundaryPoint& x, const BoundaryPoint& y, double B) {
    if (!(B > 1.0)) throw DomainError("contraction_check: B must exceed 1");
    const auto ch = tau_chart(a, b, c);
    const Vec wx = ch.inverse(x), wy = ch.inverse(y);
    const Vec d = wy - wx;
    if (!in_standard_diamond(wx, 1e-9) || !in_standard_diamond(wy, 1e-9) || !(d(0) > d.tail(d.size() - 1).norm()))
        throw DomainError("contraction_check: nested diamond hypothesis fails");
    for (const auto* p : {&x, &y}) {
        const double r = cross_ratio_b(a, b, *p, c);
        if (!(r >= 1.0 / B - 1e-12 && r <= B + 1e-12)) throw DomainError("contraction_check: cross-ratio bound fails");
    }
}

double chord_fraction_closed_form(double B, double lambda) {
    return (B * B - 1.0) * lambda / ((B + lambda) * (lambda * B + 1.0));
}

ContractionResult contraction_check(const BoundaryPoint& a, const BoundaryPoint& b, const BoundaryPoint& c,
                                    const BoundaryPoint& x, const BoundaryPoint& y, double B, std::size_t samples,
                                    std::uint64_t seed) {
    contraction_hypotheses(a, b, c, x, y, B);
    const auto ch = tau_chart(a, b, c);
    const auto chp = tau_chart(a, x, y);
    const int n = ch.n();
    ContractionResult res;
    res.ratio_bound = (B - 1.0) / (B + 1.0);
    res.chord_bound = std::numbers::sqrt2 * res.ratio_bound;

    auto rng = chunk_rng(seed, 0);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    auto diamond_sample = [&] {
        Vec w(n + 1);
        do {
            for (Eigen::Index i = 0; i <= n; ++i) w(i) = U(rng);
        } while (!in_standard_diamond(w));
        return w;
    };
    for (std::size_t s = 0; s < samples; ++s) {
        const Vec p = diamond_sample(), q = diamond_sample();
        const double dp = (p - q).norm();
        if (dp < 1e-9) continue;
        const double dt = (ch.inverse(chp.lift(p)) - ch.inverse(chp.lift(q))).norm();
        res.max_ratio = std::max(res.max_ratio, dt / dp);
        ++res.pairs;
    }

    std::normal_distribution<double> N(0.0, 1.0);
    auto unit = [&] {
        Vec w(n);
        do {
            for (Eigen::Index i = 0; i < n; ++i) w(i) = N(rng);
        } while (w.norm() < 1e-6);
        return Vec(w / w.norm());
    };
    Vec wb = Vec::Zero(n + 1), wc = Vec::Zero(n + 1);
    wb(0) = -1.0;
    wc(0) = 1.0;
    std::uniform_real_distribution<double> U01(0.05, 0.95);
    std::size_t attempts = 0;
    while (res.chords < samples && attempts < 50 * samples + 100) {
        ++attempts;
        Vec dir(n + 1);
        dir(0) = 1.0;
        dir.tail(n) = unit();
        Vec u(n + 1);
        u(0) = 1.0;
        u.tail(n) = unit();
        if (n == 1) u(1) = -dir(1);
        const Vec p = wb + U01(rng) * dir;
        const double pb = chart_bilinear(u, p - wb);
        if (std::abs(pb) < 1e-3) continue;
        const double denom = chart_bilinear(p - wc, u);
        if (std::abs(denom) < 1e-12) continue;
        const double tq = -chart_q(p - wc) / (2.0 * denom);
        if (!(tq > 1e-6)) continue;
        const Vec qx = p + tq * u;
        if (!in_standard_diamond(0.5 * (p + qx))) continue;
        const double lambda = std::abs(chart_bilinear(u, qx - wc) / pb);
        auto g = [&](double t) { return std::abs(cross_ratio_b(a.rep, b.rep, ch.lift(p + t * (qx - p)), c.rep)); };
        auto solve = [&](double level) {
            double lo = 0.0, hi = 1.0;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                (g(mid) > level ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        };
        const double frac = solve(1.0 / B) - solve(B);
        res.max_chord_formula_error = std::max(res.max_chord_formula_error, std::abs(frac - chord_fraction_closed_form(B, lambda)));
        res.max_chord = std::max(res.max_chord, frac * (qx - p).norm());
        ++res.chords;
    }
    return res;
}

HolderFit holder_estimate(const SampledBoundaryMap& map, const std::array<double, 3>& tau0) {
    const std::size_t k = map.size();
    if (k < 8) throw DomainError("holder_estimate: too few samples");
    double gap = kTwoPi - map.domain.back() + map.domain.front();
    for (std::size_t i = 1; i < k; ++i) gap = std::max(gap, map.domain[i] - map.domain[i - 1]);
    if (gap >= std::numbers::pi) throw DomainError("holder_estimate: degenerate sample spread");

    auto nearest = [&](double a) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < k; ++i)
            if (circle_distance(map.domain[i], a) < circle_distance(map.domain[best], a)) best = i;
        return best;
    };
    const std::size_t ia = nearest(tau0[0]), ib = nearest(tau0[1]), ic = nearest(tau0[2]);
    if (ia == ib || ib == ic || ia == ic) throw DomainError("holder_estimate: degenerate reference triple");
    const int n = form_n(map.image[0].size());
    auto D = [&](std::size_t i) { return BoundaryPoint::from_vector(circle_point(1, map.domain[i])); };
    auto X = [&](std::size_t i) { return BoundaryPoint::from_vector(map.image[i]); };
    (void)n;
    const auto Da = D(ia), Db = D(ib), Dc = D(ic);
    const auto Xa = X(ia), Xb = X(ib), Xc = X(ic);
    const auto chd = tau_chart(Da, Db, Dc);
    const auto chx = tau_chart(Xa, Xb, Xc);

    // samples strictly between b and c on the arc avoiding a
    std::vector<std::size_t> inner;
    for (std::size_t s = 1; s < k; ++s) {
        const std::size_t i = (ib + s) % k;
        if (i == ic) break;
        if (i == ia) {
            inner.clear();
            break;
        }
        inner.push_back(i);
    }
    if (inner.size() < 3) throw DomainError("holder_estimate: degenerate sample spread");
    std::vector<Vec> wd, wx;
    for (std::size_t i : inner) {
        wd.push_back(chd.inverse(D(i)));
        wx.push_back(chx.inverse(X(i)));
    }
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < inner.size(); ++i)
        for (std::size_t j = i + 1; j < inner.size(); ++j) {
            const double dd = (wd[i] - wd[j]).norm(), dx = (wx[i] - wx[j]).norm();
            if (dd <= 0 || dx <= 0) continue;
            lx.push_back(std::log(dd));
            ly.push_back(std::log(dx));
        }
    if (lx.size() < 3) throw DomainError("holder_estimate: degenerate sample spread");

    constexpr double q = 0.99;
    std::vector<double> r(lx.size());
    auto fit = [&](double alpha, double& c) {
        for (std::size_t i = 0; i < lx.size(); ++i) r[i] = ly[i] - alpha * lx[i];
        std::vector<double> s = r;
        const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(s.size()))) - 1;
        std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(idx), s.end());
        c = s[idx];
        double loss = 0.0;
        for (double v : r) {
            const double e = v - c;
            loss += e >= 0 ? q * e : (q - 1.0) * e;
        }
        return loss;
    };
    double lo = 1e-3, hi = 4.0, c = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        double c1, c2;
        if (fit(m1, c1) <= fit(m2, c2)) hi = m2;
        else lo = m1;
    }
    const double alpha = 0.5 * (lo + hi);
    fit(alpha, c);
    return HolderFit{std::exp(c), alpha, lx.size()};
}

}  // namespace h2n
