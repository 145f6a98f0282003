#pragma once

#include "wj/jetalg.hpp"
#include "wj/whitney.hpp"

#include <cmath>
#include <random>

namespace wjtest {

using namespace wj;

inline VectorXd random_vec(std::mt19937_64& rng, int n, double scale = 1) {
  std::uniform_real_distribution<double> u(-scale, scale);
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

inline Polyd random_poly(std::mt19937_64& rng, int n, int p, double scale = 1) {
  JetSignature s(n, p);
  return Polyd(s, random_vec(rng, n, scale), random_vec(rng, s.dim()));
}

// Direct sum of c_alpha (x - c)^alpha / alpha! with std::pow, independent of the library's tables.
inline double eval_direct(const Polyd& P, const VectorXd& x) {
  double s = 0;
  for (int i = 0; i < P.sig.dim(); ++i) {
    const MultiIndex& a = P.sig[i];
    double t = P.coeffs(i);
    for (int k = 0; k < P.n(); ++k) t *= std::pow(x(k) - P.center(k), a[k]) / std::tgamma(a[k] + 1.0);
    s += t;
  }
  return s;
}

// D^alpha of the monomial (x - c)^beta / beta! at x, by the power rule.
inline double monomial_derivative(const MultiIndex& beta, const MultiIndex& alpha, const VectorXd& c, const VectorXd& x) {
  double t = 1;
  for (std::size_t k = 0; k < beta.size(); ++k) {
    if (alpha[k] > beta[k]) return 0;
    t *= std::pow(x(k) - c(k), beta[k] - alpha[k]) / std::tgamma(beta[k] - alpha[k] + 1.0);
  }
  return t;
}

inline double derivative_direct(const Polyd& P, const MultiIndex& alpha, const VectorXd& x) {
  double s = 0;
  for (int i = 0; i < P.sig.dim(); ++i) s += P.coeffs(i) * monomial_derivative(P.sig[i], alpha, P.center, x);
  return s;
}

inline WhitneyField random_field(std::mt19937_64& rng, int n, int p, int count) {
  JetSignature s(n, p);
  MatrixXd pts(n, count), jets(s.dim(), count);
  for (int i = 0; i < count; ++i) {
    pts.col(i) = random_vec(rng, n);
    jets.col(i) = random_vec(rng, s.dim());
  }
  return WhitneyField(s, pts, jets);
}

inline JetDuald random_dual(std::mt19937_64& rng, const JetSignature& s) {
  return JetDuald(s, random_vec(rng, s.n()), random_vec(rng, s.dim()));
}

inline MatrixXd grid_1d(double lo, double hi, int count) {
  MatrixXd X(1, count);
  for (int i = 0; i < count; ++i) X(0, i) = lo + (hi - lo) * i / (count - 1);
  return X;
}

}  // namespace wjtest
