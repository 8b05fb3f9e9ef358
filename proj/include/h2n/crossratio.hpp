#pragma once

#include "h2n/einstein.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

namespace h2n {

// b = <x,y><z,t> / (<x,t><z,y>).
double cross_ratio_b(const Vec& x, const Vec& y, const Vec& z, const Vec& t, double tol = 1e-8);
double cross_ratio_b(const BoundaryPoint& x, const BoundaryPoint& y, const BoundaryPoint& z, const BoundaryPoint& t,
                     double tol = 1e-8);

// Point of RP^1 given by a lift in R^2.
using ProjPoint = Eigen::Vector2d;
// Angle parameter a in [0, 2 pi) of RP^1, lift (cos a/2, sin a/2).
ProjPoint rp1_from_angle(double a);
double cross_ratio_real(const ProjPoint& x, const ProjPoint& y, const ProjPoint& z, const ProjPoint& t);

struct SampledBoundaryMap {
    std::vector<double> domain;  // RP^1 angle parameters, strictly increasing in [0, 2 pi)
    std::vector<Vec> image;      // isotropic representatives
    bool dense_subset = false;

    SampledBoundaryMap(std::vector<double> domain, std::vector<Vec> image, bool dense_subset = false);
    [[nodiscard]] std::size_t size() const { return domain.size(); }
};

// The circle (cos a, sin a, 1, 0, ...) sampled at the given angles.
SampledBoundaryMap standard_circle_map(int n, const std::vector<double>& angles);

bool circle_map_test(const SampledBoundaryMap& map, double tol, std::uint64_t seed = 0, std::size_t max_quadruples = 20000);

struct QSCertificate {
    double A = 2.0;
    double B = 1.0;
    std::size_t quadruples_tested = 0;
    std::array<double, 4> worst_quadruple{};
    std::uint64_t seed = 0;
};

QSCertificate qs_certify(const SampledBoundaryMap& map, double A, std::size_t n_quadruples, std::uint64_t seed);
double qs_rescale(double A, double B, double C);

// Semi-positive map of an interval into R^{1,n}, completed by causal infima.
class SemipositiveCompletion {
public:
    SemipositiveCompletion(std::vector<double> x, std::vector<Vec> values, double tol = 1e-12);

    // Right-continuous completion: value at the smallest sample >= x.
    [[nodiscard]] Vec right(double x) const;
    // Left-continuous completion: value at the largest sample <= x.
    [[nodiscard]] Vec left(double x) const;

private:
    std::vector<double> x_;
    std::vector<Vec> v_;
};

// w in the closed future cone of p in R^{1,n}.
bool causal_future(const Vec& p, const Vec& w, double tol = 1e-12);

struct ContractionResult {
    double max_ratio = 0.0;       // max of delta_tau / delta_tau' over sampled pairs
    double ratio_bound = 0.0;     // (B - 1) / (B + 1)
    double max_chord = 0.0;       // longest sampled lightlike chord of C_B
    double chord_bound = 0.0;     // sqrt(2) (B - 1) / (B + 1)
    double max_chord_formula_error = 0.0;
    std::size_t pairs = 0;
    std::size_t chords = 0;
};

// Checks the nesting and cross-ratio hypotheses for tau = (a,b,c), tau' = (a,x,y); throws if violated.
void contraction_hypotheses(const BoundaryPoint& a, const BoundaryPoint& b, const BoundaryPoint& c,
                            const BoundaryPoint& x, const BoundaryPoint& y, double B);
ContractionResult contraction_check(const BoundaryPoint& a, const BoundaryPoint& b, const BoundaryPoint& c,
                                    const BoundaryPoint& x, const BoundaryPoint& y, double B, std::size_t samples,
                                    std::uint64_t seed);
// Fraction of a lightlike chord of the standard diamond lying in C_B.
double chord_fraction_closed_form(double B, double lambda);

struct HolderFit {
    double M = 0.0;
    double alpha = 0.0;
    std::size_t pairs = 0;
};

// Upper-envelope fit of log d_image <= log M + alpha log d_domain at the 0.99 quantile.
HolderFit holder_estimate(const SampledBoundaryMap& map, const std::array<double, 3>& tau0 = {0.0, 2.0943951023931953,
                                                                                             4.1887902047863905});

}  // namespace h2n
