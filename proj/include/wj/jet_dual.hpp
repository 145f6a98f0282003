#pragma once

#include "wj/poly.hpp"

namespace wj {

// Element xi of P_p(R^n)^*, stored through its local coordinates at a
// reference center: coords[alpha] = xi((x - center)^alpha / alpha!).
template <typename Scalar>
struct JetDual {
  JetSignature sig;
  VecX<Scalar> center;
  VecX<Scalar> coords;

  JetDual() = default;
  JetDual(JetSignature s, VecX<Scalar> c)
      : sig(std::move(s)), center(std::move(c)), coords(VecX<Scalar>::Zero(sig.dim())) {
    check();
  }
  JetDual(JetSignature s, VecX<Scalar> c, VecX<Scalar> k)
      : sig(std::move(s)), center(std::move(c)), coords(std::move(k)) {
    check();
  }

  int n() const { return sig.n(); }
  int p() const { return sig.p(); }

 private:
  void check() const {
    if (center.size() != sig.n()) throw std::invalid_argument("JetDual: center dimension mismatch");
    if (coords.size() != sig.dim()) throw std::invalid_argument("JetDual: coordinate count mismatch");
  }
};

using JetDuald = JetDual<double>;

// coords_at_a = dual_transport(sig, c, a) * coords_at_c
template <typename Scalar>
MatX<Scalar> dual_transport(const JetSignature& sig, const VecX<Scalar>& c, const VecX<Scalar>& a) {
  const VecX<Scalar> m = scaled_monomials<Scalar>(sig, c - a);
  MatX<Scalar> R = MatX<Scalar>::Zero(sig.dim(), sig.dim());
  for (const auto& t : sig.tables().below) R(t.alpha, t.beta) += m(t.gamma);
  return R;
}

template <typename Scalar>
JetDual<Scalar> recenter(const JetDual<Scalar>& xi, const VecX<Scalar>& a) {
  if (a.size() != xi.n()) throw std::invalid_argument("recenter: dimension mismatch");
  const VecX<Scalar> m = scaled_monomials<Scalar>(xi.sig, xi.center - a);
  VecX<Scalar> out = VecX<Scalar>::Zero(xi.sig.dim());
  for (const auto& t : xi.sig.tables().below) out(t.alpha) += xi.coords(t.beta) * m(t.gamma);
  return JetDual<Scalar>(xi.sig, a, out);
}

template <typename Scalar>
Scalar pair(const JetDual<Scalar>& xi, const Poly<Scalar>& P) {
  if (!(xi.sig == P.sig)) throw std::invalid_argument("pair: signature mismatch");
  return xi.coords.dot(rebase(P, xi.center).coeffs);
}

// xi_alpha(a) = xi((x - a)^alpha / alpha!)
template <typename Scalar>
Scalar dual_coord(const JetDual<Scalar>& xi, const MultiIndex& alpha, const VecX<Scalar>& a) {
  const int i = xi.sig.index_of(alpha);
  return recenter(xi, a).coords(i);
}

template <typename Scalar>
JetDual<Scalar> delta_functional(const VecX<Scalar>& a, const JetSignature& sig) {
  JetDual<Scalar> d(sig, a);
  d.coords(0) = Scalar(1);
  return d;
}

template <typename Scalar>
JetDual<Scalar> deriv_functional(const MultiIndex& alpha, const VecX<Scalar>& b, const JetSignature& sig) {
  if (static_cast<int>(alpha.size()) != sig.n()) throw std::invalid_argument("deriv_functional: dimension mismatch");
  if (order(alpha) > sig.p()) throw std::invalid_argument("deriv_functional: |alpha| exceeds p");
  JetDual<Scalar> d(sig, b);
  d.coords(sig.index_of(alpha)) = Scalar(1);
  return d;
}

template <typename Scalar>
JetDual<Scalar> operator+(const JetDual<Scalar>& a, const JetDual<Scalar>& b) {
  if (!(a.sig == b.sig)) throw std::invalid_argument("JetDual sum: signature mismatch");
  return JetDual<Scalar>(a.sig, a.center, a.coords + recenter(b, a.center).coords);
}

template <typename Scalar>
JetDual<Scalar> operator*(Scalar s, const JetDual<Scalar>& a) {
  return JetDual<Scalar>(a.sig, a.center, s * a.coords);
}

// P_p^* -> P_q^* through xi~(P) = xi(truncation of P at a to order p).
template <typename Scalar>
JetDual<Scalar> jet_embed(const JetDual<Scalar>& xi, const VecX<Scalar>& a, int q) {
  if (q < xi.p()) throw std::invalid_argument("jet_embed: q < p");
  JetSignature s(xi.n(), q);
  const JetDual<Scalar> at = recenter(xi, a);
  VecX<Scalar> c = VecX<Scalar>::Zero(s.dim());
  c.head(xi.sig.dim()) = at.coords;
  return JetDual<Scalar>(s, a, c);
}

// Restriction of a functional on P_q to the subspace P_p.
template <typename Scalar>
JetDual<Scalar> dual_restrict(const JetDual<Scalar>& xi, int p) {
  if (p > xi.p()) throw std::invalid_argument("dual_restrict: p > q");
  JetSignature s(xi.n(), p);
  return JetDual<Scalar>(s, xi.center, xi.coords.head(s.dim()));
}

}  // namespace wj
