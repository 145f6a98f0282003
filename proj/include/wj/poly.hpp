#pragma once

#include "wj/multiindex.hpp"

namespace wj {

template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Element of P_p(R^n) written as sum_alpha coeffs[alpha] (x - center)^alpha / alpha!,
// so coeffs[alpha] is the alpha-th derivative at the center.
template <typename Scalar>
struct Poly {
  JetSignature sig;
  VecX<Scalar> center;
  VecX<Scalar> coeffs;

  Poly() = default;
  Poly(JetSignature s, VecX<Scalar> c)
      : sig(std::move(s)), center(std::move(c)), coeffs(VecX<Scalar>::Zero(sig.dim())) {
    check();
  }
  Poly(JetSignature s, VecX<Scalar> c, VecX<Scalar> k)
      : sig(std::move(s)), center(std::move(c)), coeffs(std::move(k)) {
    check();
  }

  int n() const { return sig.n(); }
  int p() const { return sig.p(); }

  Scalar& operator[](const MultiIndex& a) { return coeffs(sig.index_of(a)); }
  Scalar operator[](const MultiIndex& a) const { return coeffs(sig.index_of(a)); }

 private:
  void check() const {
    if (center.size() != sig.n()) throw std::invalid_argument("Poly: center dimension mismatch");
    if (coeffs.size() != sig.dim()) throw std::invalid_argument("Poly: coefficient count mismatch");
  }
};

using Polyd = Poly<double>;

template <typename Scalar>
Scalar eval(const Poly<Scalar>& P, const VecX<Scalar>& x) {
  if (x.size() != P.n()) throw std::invalid_argument("eval: dimension mismatch");
  return scaled_monomials<Scalar>(P.sig, x - P.center).dot(P.coeffs);
}

// Matrix M with coeffs_at_a = M * coeffs_at_c (Taylor shift of the scaled basis).
template <typename Scalar>
MatX<Scalar> rebase_matrix(const JetSignature& sig, const VecX<Scalar>& c, const VecX<Scalar>& a) {
  const VecX<Scalar> m = scaled_monomials<Scalar>(sig, a - c);
  MatX<Scalar> M = MatX<Scalar>::Zero(sig.dim(), sig.dim());
  for (const auto& t : sig.tables().below) M(t.beta, t.alpha) += m(t.gamma);
  return M;
}

template <typename Scalar>
Poly<Scalar> rebase(const Poly<Scalar>& P, const VecX<Scalar>& a) {
  if (a.size() != P.n()) throw std::invalid_argument("rebase: dimension mismatch");
  const VecX<Scalar> m = scaled_monomials<Scalar>(P.sig, a - P.center);
  VecX<Scalar> out = VecX<Scalar>::Zero(P.sig.dim());
  for (const auto& t : P.sig.tables().below) out(t.beta) += P.coeffs(t.alpha) * m(t.gamma);
  return Poly<Scalar>(P.sig, a, out);
}

template <typename Scalar>
Poly<Scalar> truncate(const Poly<Scalar>& P, int p) {
  if (p > P.p()) throw std::invalid_argument("truncate: target order exceeds source order");
  if (p < 0) throw std::invalid_argument("truncate: negative order");
  JetSignature s(P.n(), p);
  return Poly<Scalar>(s, P.center, P.coeffs.head(s.dim()));
}

// Same polynomial viewed in P_q for q >= p.
template <typename Scalar>
Poly<Scalar> raise(const Poly<Scalar>& P, int q) {
  if (q < P.p()) throw std::invalid_argument("raise: target order below source order");
  JetSignature s(P.n(), q);
  VecX<Scalar> c = VecX<Scalar>::Zero(s.dim());
  c.head(P.sig.dim()) = P.coeffs;
  return Poly<Scalar>(s, P.center, c);
}

// Derivative D^alpha P evaluated at b.
template <typename Scalar>
Scalar derivative(const Poly<Scalar>& P, const MultiIndex& alpha, const VecX<Scalar>& b) {
  if (order(alpha) > P.p()) return Scalar(0);
  return rebase(P, b).coeffs(P.sig.index_of(alpha));
}

template <typename Scalar>
Poly<Scalar> operator+(const Poly<Scalar>& A, const Poly<Scalar>& B) {
  if (!(A.sig == B.sig)) throw std::invalid_argument("Poly sum: signature mismatch");
  return Poly<Scalar>(A.sig, A.center, A.coeffs + rebase(B, A.center).coeffs);
}

template <typename Scalar>
Poly<Scalar> operator*(Scalar s, const Poly<Scalar>& A) {
  return Poly<Scalar>(A.sig, A.center, s * A.coeffs);
}

// Plain (unscaled) monomial coefficients <-> scaled basis coefficients.
template <typename Scalar>
VecX<Scalar> to_plain(const JetSignature& sig, const VecX<Scalar>& scaled) {
  VecX<Scalar> out(sig.dim());
  for (int i = 0; i < sig.dim(); ++i) out(i) = scaled(i) * Scalar(sig.inv_fact(i));
  return out;
}

template <typename Scalar>
VecX<Scalar> to_scaled(const JetSignature& sig, const VecX<Scalar>& plain) {
  VecX<Scalar> out(sig.dim());
  for (int i = 0; i < sig.dim(); ++i) out(i) = plain(i) / Scalar(sig.inv_fact(i));
  return out;
}

// Truncated product of plain coefficient vectors (same center).
template <typename Scalar>
VecX<Scalar> plain_product(const JetSignature& sig, const VecX<Scalar>& a, const VecX<Scalar>& b) {
  const auto& add = sig.tables().add;
  const int d = sig.dim();
  VecX<Scalar> out = VecX<Scalar>::Zero(d);
  for (int i = 0; i < d; ++i) {
    if (a(i) == Scalar(0)) continue;
    for (int j = 0; j < d; ++j) {
      const int k = add[static_cast<std::size_t>(i) * d + j];
      if (k >= 0) out(k) += a(i) * b(j);
    }
  }
  return out;
}

}  // namespace wj
