#pragma once

#include "wj/jet_dual.hpp"

namespace wj {

// p-jet at b of a map phi: R^m -> R^n, one Poly per target coordinate.
template <typename Scalar>
struct MapJet {
  JetSignature source;  // (m, p)
  VecX<Scalar> base;
  std::vector<Poly<Scalar>> components;

  MapJet() = default;
  MapJet(JetSignature s, VecX<Scalar> b, std::vector<Poly<Scalar>> comps)
      : source(std::move(s)), base(std::move(b)), components(std::move(comps)) {
    if (base.size() != source.n()) throw std::invalid_argument("MapJet: base dimension mismatch");
    for (auto& c : components) {
      if (!(c.sig == source)) throw std::invalid_argument("MapJet: component signature mismatch");
      if ((c.center - base).norm() != Scalar(0)) c = rebase(c, base);
    }
  }

  int m() const { return source.n(); }
  int n() const { return static_cast<int>(components.size()); }
  int p() const { return source.p(); }

  VecX<Scalar> value() const {
    VecX<Scalar> v(n());
    for (int i = 0; i < n(); ++i) v(i) = components[i].coeffs(0);
    return v;
  }
};

using MapJetd = MapJet<double>;

// Columns: scaled coefficients at b of phi*_b((x - phi(b))^alpha / alpha!),
// alpha running over the basis of P_p(R^n).
template <typename Scalar>
MatX<Scalar> pullback_matrix(const MapJet<Scalar>& phi) {
  const JetSignature& S = phi.source;
  JetSignature T(phi.n(), phi.p());
  std::vector<VecX<Scalar>> u(phi.n());
  for (int i = 0; i < phi.n(); ++i) {
    u[i] = to_plain<Scalar>(S, phi.components[i].coeffs);
    u[i](0) = Scalar(0);
  }
  std::vector<VecX<Scalar>> prod(T.dim());
  prod[0] = VecX<Scalar>::Zero(S.dim());
  prod[0](0) = Scalar(1);
  MatX<Scalar> M(S.dim(), T.dim());
  M.col(0) = prod[0];
  for (int j = 1; j < T.dim(); ++j) {
    MultiIndex a = T[j];
    int i = 0;
    while (a[i] == 0) ++i;
    --a[i];
    prod[j] = plain_product<Scalar>(S, prod[T.index_of(a)], u[i]);
    M.col(j) = to_scaled<Scalar>(S, prod[j]) * Scalar(T.inv_fact(j));
  }
  return M;
}

// T^p_b(P o phi), centered at b.
template <typename Scalar>
Poly<Scalar> pullback(const MapJet<Scalar>& phi, const Poly<Scalar>& P) {
  if (P.n() != phi.n()) throw std::invalid_argument("pullback: dimension mismatch");
  Poly<Scalar> Q = rebase(P, phi.value());
  Q = Q.p() > phi.p() ? truncate(Q, phi.p()) : raise(Q, phi.p());
  return Poly<Scalar>(phi.source, phi.base, pullback_matrix(phi) * Q.coeffs);
}

// phi_{*b}(eta)(P) = eta(phi*_b P), returned with center phi(b).
template <typename Scalar>
JetDual<Scalar> pushforward(const MapJet<Scalar>& phi, const JetDual<Scalar>& eta) {
  if (!(eta.sig == phi.source)) throw std::invalid_argument("pushforward: signature mismatch");
  const JetDual<Scalar> at_b = recenter(eta, phi.base);
  JetSignature T(phi.n(), phi.p());
  return JetDual<Scalar>(T, phi.value(), pullback_matrix(phi).transpose() * at_b.coords);
}

// Jet of psi o phi at phi.base; psi must be based at phi(base).
template <typename Scalar>
MapJet<Scalar> compose(const MapJet<Scalar>& psi, const MapJet<Scalar>& phi, Scalar tol = Scalar(1e-12)) {
  if (psi.m() != phi.n() || psi.p() != phi.p()) throw std::invalid_argument("compose: shape mismatch");
  if ((psi.base - phi.value()).norm() > tol * (Scalar(1) + psi.base.norm()))
    throw std::invalid_argument("compose: psi is not based at phi(b)");
  std::vector<Poly<Scalar>> comps;
  for (const auto& c : psi.components) comps.push_back(pullback(phi, c));
  return MapJet<Scalar>(phi.source, phi.base, comps);
}

}  // namespace wj
