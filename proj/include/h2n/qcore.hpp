#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace h2n {

template <typename S>
using VectorX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <typename S>
using MatrixX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

using Vec = VectorX<double>;
using Mat = MatrixX<double>;

struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Diagonal form of signature (2, n+1) on R^{n+3}.
template <typename S = double>
struct BilinearForm {
    int n = 1;

    explicit BilinearForm(int n_) : n(n_) {
        if (n < 0) throw DomainError("BilinearForm: n must be nonnegative");
    }
    [[nodiscard]] int dim() const { return n + 3; }
    [[nodiscard]] S sign(int i) const { return i < 2 ? S(1) : S(-1); }
    [[nodiscard]] VectorX<S> signs() const {
        VectorX<S> e = VectorX<S>::Constant(dim(), S(-1));
        e.template head<2>().setOnes();
        return e;
    }
    [[nodiscard]] MatrixX<S> matrix() const { return signs().asDiagonal(); }
    [[nodiscard]] VectorX<S> basis(int i) const { return VectorX<S>::Unit(dim(), i); }
};

inline int form_n(Eigen::Index dim) {
    if (dim < 3) throw DomainError("vector dimension below 3");
    return static_cast<int>(dim) - 3;
}

// Sum of e_i u_i v_i; the summation order is fixed so bilinear(u,v) == bilinear(v,u) exactly.
template <typename DA, typename DB>
typename DA::Scalar bilinear(const Eigen::MatrixBase<DA>& u, const Eigen::MatrixBase<DB>& v) {
    using S = typename DA::Scalar;
    if (u.size() != v.size()) throw DomainError("bilinear: dimension mismatch");
    if (u.size() < 3) throw DomainError("bilinear: dimension below 3");
    S pos = u(0) * v(0) + u(1) * v(1);
    S neg = S(0);
    for (Eigen::Index i = 2; i < u.size(); ++i) neg += u(i) * v(i);
    return pos - neg;
}

template <typename D>
typename D::Scalar quad(const Eigen::MatrixBase<D>& u) {
    return bilinear(u, u);
}

// Q v, i.e. the covector of v.
template <typename D>
VectorX<typename D::Scalar> lower(const Eigen::MatrixBase<D>& v) {
    VectorX<typename D::Scalar> w = v;
    w.tail(w.size() - 2) *= -1;
    return w;
}

template <typename S = double>
struct SubspaceSignature {
    int positive = 0;
    int negative = 0;
    int null = 0;
    VectorX<S> eigenvalues;

    [[nodiscard]] bool is(int p, int m, int z) const {
        return positive == p && negative == m && null == z;
    }
};

template <typename S>
MatrixX<S> gram(const std::vector<VectorX<S>>& vs) {
    const auto k = static_cast<Eigen::Index>(vs.size());
    MatrixX<S> G(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = i; j < k; ++j) G(i, j) = G(j, i) = bilinear(vs[i], vs[j]);
    return G;
}

template <typename S>
SubspaceSignature<S> subspace_signature(const std::vector<VectorX<S>>& vs, S tol = S(1e-9)) {
    if (vs.empty()) throw DomainError("subspace_signature: empty list");
    Eigen::SelfAdjointEigenSolver<MatrixX<S>> es(gram(vs), Eigen::EigenvaluesOnly);
    SubspaceSignature<S> sig;
    sig.eigenvalues = es.eigenvalues();
    S scale = sig.eigenvalues.cwiseAbs().maxCoeff();
    for (const auto& v : vs) scale = std::max(scale, v.squaredNorm());
    for (Eigen::Index i = 0; i < sig.eigenvalues.size(); ++i) {
        const S l = sig.eigenvalues(i);
        if (std::abs(l) <= tol * scale) ++sig.null;
        else if (l > 0) ++sig.positive;
        else ++sig.negative;
    }
    return sig;
}

template <typename S = double>
struct Isometry {
    MatrixX<S> matrix;
    bool space_orientation = true;  // det of the positive 2x2 block > 0
    bool time_orientation = true;   // det of the negative block > 0

    Isometry() = default;
    explicit Isometry(MatrixX<S> m) : matrix(std::move(m)) { refresh_flags(); }

    static Isometry identity(int n) { return Isometry(MatrixX<S>::Identity(n + 3, n + 3)); }

    void refresh_flags() {
        const auto d = matrix.rows();
        space_orientation = matrix.topLeftCorner(2, 2).determinant() > 0;
        time_orientation = matrix.bottomRightCorner(d - 2, d - 2).determinant() > 0;
    }
    [[nodiscard]] bool in_identity_component() const { return space_orientation && time_orientation; }
    [[nodiscard]] int n() const { return form_n(matrix.rows()); }

    template <typename D>
    [[nodiscard]] VectorX<S> operator()(const Eigen::MatrixBase<D>& v) const { return matrix * v; }
    [[nodiscard]] Isometry operator*(const Isometry& o) const { return Isometry(matrix * o.matrix); }
    [[nodiscard]] Isometry inverse() const {
        const MatrixX<S> Q = BilinearForm<S>(n()).matrix();
        return Isometry(Q * matrix.transpose() * Q);
    }
    // max |M^T Q M - Q| entrywise.
    [[nodiscard]] S form_defect() const {
        const MatrixX<S> Q = BilinearForm<S>(n()).matrix();
        return (matrix.transpose() * Q * matrix - Q).cwiseAbs().maxCoeff();
    }
    [[nodiscard]] bool valid(S tol = S(1e-10)) const {
        return form_defect() <= tol && std::abs(matrix.determinant() - S(1)) <= tol;
    }
};

namespace detail {

// exp of a small-norm matrix by scaling and squaring.
template <typename S>
MatrixX<S> expm(const MatrixX<S>& X) {
    const S norm = X.cwiseAbs().rowwise().sum().maxCoeff();
    int k = 0;
    while (std::ldexp(norm, -k) > S(0.25)) ++k;
    const MatrixX<S> Y = X / std::ldexp(S(1), k);
    MatrixX<S> term = MatrixX<S>::Identity(X.rows(), X.cols());
    MatrixX<S> out = term;
    for (int i = 1; i < 20; ++i) {
        term = term * Y / S(i);
        out += term;
    }
    for (int i = 0; i < k; ++i) out = out * out;
    return out;
}

// q-orthogonal complement of span(fs) via Gram-Schmidt on the natural basis; appends to fs.
template <typename S>
void complete_basis(std::vector<VectorX<S>>& fs, int dim, S tol = S(1e-8)) {
    for (int i = 0; i < dim && static_cast<int>(fs.size()) < dim; ++i) {
        VectorX<S> v = VectorX<S>::Unit(dim, i);
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& f : fs) v -= (bilinear(v, f) / quad(f)) * f;
        const S qv = quad(v);
        if (std::abs(qv) <= tol) continue;
        fs.push_back(v / std::sqrt(std::abs(qv)));
    }
    if (static_cast<int>(fs.size()) != dim) throw DomainError("complete_basis: degenerate complement");
}

}  // namespace detail

// Exponential of Q*A with A antisymmetric, entries ~ N(0, scale^2).
template <typename S = double, typename Rng>
Isometry<S> random_isometry(int n, Rng& rng, S scale = S(0.5)) {
    const int d = n + 3;
    std::normal_distribution<S> N(S(0), scale);
    MatrixX<S> A = MatrixX<S>::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            A(i, j) = N(rng);
            A(j, i) = -A(i, j);
        }
    return Isometry<S>(detail::expm<S>(BilinearForm<S>(n).matrix() * A));
}

// Reference triple: e1+e3 and its rotations by 2pi/3 in span(e1,e2).
template <typename S = double>
std::array<VectorX<S>, 3> reference_triple(int n) {
    const BilinearForm<S> F(n);
    const S h = std::sqrt(S(3)) / 2;
    std::array<VectorX<S>, 3> z;
    z[0] = F.basis(0) + F.basis(2);
    z[1] = -S(0.5) * F.basis(0) + h * F.basis(1) + F.basis(2);
    z[2] = -S(0.5) * F.basis(0) - h * F.basis(1) + F.basis(2);
    return z;
}

// Returns g with g(a), g(b), g(c) proportional to the reference triple, det g = +1.
// Triples of the opposite cyclic orientation land outside the identity component.
template <typename S>
Isometry<S> standardize_triple(const VectorX<S>& a, const VectorX<S>& b, const VectorX<S>& c, S tol = S(1e-8)) {
    if (a.size() != b.size() || a.size() != c.size()) throw DomainError("standardize_triple: dimension mismatch");
    const int d = static_cast<int>(a.size());
    const auto sig = subspace_signature<S>({a, b, c}, tol);
    if (!sig.is(2, 1, 0)) throw DomainError("standardize_triple: triple is not positive");
    const S pab = bilinear(a, b), pac = bilinear(a, c), pbc = bilinear(b, c);
    const S w = S(-1.5);
    const S al = std::sqrt(w * pbc / (pab * pac));
    const S be = w / (al * pab);
    const S ga = w / (al * pac);
    const VectorX<S> A = al * a, B = be * b, C = ga * c;
    std::vector<VectorX<S>> fs;
    const VectorX<S> f3 = (A + B + C) / S(3);
    fs.push_back(A - f3);
    fs.push_back((B - C) / std::sqrt(S(3)));
    fs.push_back(f3);
    detail::complete_basis<S>(fs, d, tol);
    MatrixX<S> Fm(d, d);
    for (int i = 0; i < d; ++i) Fm.col(i) = fs[i];
    if (Fm.determinant() < 0) Fm.col(d - 1) *= -1;
    const MatrixX<S> Q = BilinearForm<S>(form_n(d)).matrix();
    return Isometry<S>(Q * Fm.transpose() * Q);
}

// Acts as diag(1/lambda, 1/mu, lambda, mu) on (v1..v4), identity on their orthogonal.
// The vertices must satisfy <v_i,v_{i+1}> = 0 and <v_i,v_{i+2}> != 0.
template <typename S>
Isometry<S> cartan_element(const std::array<VectorX<S>, 4>& v, S lambda, S mu, S tol = S(1e-9)) {
    if (!(lambda > 0) || !(mu > 0)) throw DomainError("cartan_element: scales must be positive");
    const auto sig = subspace_signature<S>({v[0], v[1], v[2], v[3]}, tol);
    if (!sig.is(2, 2, 0)) throw DomainError("cartan_element: crown span is not of type (2,2)");
    const int d = static_cast<int>(v[0].size());
    const std::array<S, 4> scale{S(1) / lambda, S(1) / mu, lambda, mu};
    MatrixX<S> M = MatrixX<S>::Identity(d, d);
    for (int i = 0; i < 4; ++i) {
        const VectorX<S>& w = v[(i + 2) % 4];
        const S p = bilinear(v[i], w);
        if (std::abs(p) <= tol) throw DomainError("cartan_element: degenerate crown");
        M += (scale[i] - S(1)) / p * v[i] * lower(w).transpose();
    }
    return Isometry<S>(M);
}

}  // namespace h2n
