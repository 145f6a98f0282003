#include "wj/paratangent.hpp"

#include <cmath>
#include <limits>

namespace wj {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Bundled tau_slice(const Bundled& tq, int p, double theta_tol) {
  const JetFrame& jf = *jet_frame(tq);
  const int q = jf.sig.p();
  if (q < p) throw std::invalid_argument("tau_slice: q < p");
  if (jf.extra != 0) throw std::invalid_argument("tau_slice: expects a bundle in P_q^*");
  JetSignature sp(jf.sig.n(), p);
  const int dp = sp.dim(), dq = jf.sig.dim();
  Bundled out(tq.points, dp, std::make_shared<JetFrame>(sp, 0));
  const double thr = std::sin(theta_tol);
  for (int a = 0; a < tq.size(); ++a) {
    const MatrixXd& B = tq.fibers[a].basis;
    const int d = static_cast<int>(B.cols());
    if (d == 0) continue;
    if (dq == dp) {
      out.fibers[a] = tq.fibers[a];
      continue;
    }
    const MatrixXd tail = B.bottomRows(dq - dp);
    Eigen::JacobiSVD<MatrixXd> svd(tail, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    std::vector<int> null;
    for (int i = 0; i < d; ++i)
      if (i >= s.size() || s(i) <= thr) null.push_back(i);
    MatrixXd V(d, null.size());
    for (std::size_t k = 0; k < null.size(); ++k) V.col(k) = svd.matrixV().col(null[k]);
    out.fibers[a] = subspace_span<double>(MatrixXd(B.topRows(dp) * V), 1e-8);
  }
  return out;
}

ZariskiResult zariski_Tp(const MatrixXd& X, int p, int q, const Tolerances& tol, bool with_bundle) {
  if (q < p) throw std::invalid_argument("zariski_Tp: q < p");
  if (X.cols() == 0) throw std::invalid_argument("zariski_Tp: empty sample");
  const int n = static_cast<int>(X.rows());
  JetSignature sq(n, q), sp(n, p);
  ZariskiResult Z;
  Z.center = X.rowwise().mean();
  const int N = static_cast<int>(X.cols()), dq = sq.dim();
  MatrixXd V(N, dq);
  for (int i = 0; i < N; ++i) V.row(i) = scaled_monomials<double>(sq, VectorXd(X.col(i) - Z.center)).transpose();
  VectorXd cs = V.colwise().norm().transpose();
  for (int j = 0; j < dq; ++j)
    if (cs(j) == 0) cs(j) = 1;
  const MatrixXd Vs = V * cs.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<MatrixXd> svd(Vs, Eigen::ComputeFullV);
  Z.singular_values = svd.singularValues();
  Z.underdetermined = N < dq;
  const double smax = Z.singular_values.size() ? Z.singular_values(0) : 0.0;
  std::vector<int> null;
  for (int j = 0; j < dq; ++j) {
    const double s = j < Z.singular_values.size() ? Z.singular_values(j) : 0.0;
    if (s <= tol.eps_rank * smax) null.push_back(j);
    else if (s <= 1e-4 * smax) Z.ambiguous_rank = true;
  }
  Z.vanishing.resize(dq, null.size());
  for (std::size_t k = 0; k < null.size(); ++k) {
    VectorXd v = cs.cwiseInverse().asDiagonal() * svd.matrixV().col(null[k]);
    Z.vanishing.col(k) = v / v.norm();
  }
  Z.bundle = Bundled(X, sp.dim(), std::make_shared<JetFrame>(sp, 0));
  if (with_bundle)
    for (int a = 0; a < N; ++a) Z.bundle.fibers[a] = zariski_fiber(Z, X.col(a), p, tol.eps_rank);
  return Z;
}

Subspaced zariski_fiber(const ZariskiResult& Z, const VectorXd& a, int p, double eps_rank) {
  const int n = static_cast<int>(Z.center.size());
  JetSignature sp(n, p);
  // order of the vanishing polynomials from their coefficient count
  int qq = 0;
  while (JetSignature(n, qq).dim() < Z.vanishing.rows()) ++qq;
  JetSignature sq(n, qq);
  MatrixXd K(sp.dim(), Z.vanishing.cols());
  for (int k = 0; k < Z.vanishing.cols(); ++k) {
    const Polyd P(sq, Z.center, Z.vanishing.col(k));
    K.col(k) = rebase(P, a).coeffs.head(sp.dim());
  }
  Subspaced ann(sp.dim());
  if (K.cols() > 0) {
    Eigen::JacobiSVD<MatrixXd> svd(K, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    const double thr = eps_rank * std::max(1.0, s.size() ? s(0) : 0.0);
    int k = 0;
    while (k < s.size() && s(k) > thr) ++k;
    ann = Subspaced::from_orthonormal(svd.matrixU().leftCols(k));
  }
  return complement(ann);
}

ProbeTable stability_probe(const MatrixXd& X, const VectorXd& a, int p, int q_max, const Tolerances& tol) {
  ProbeTable t;
  for (int q = p; q <= q_max; ++q) {
    const ZariskiResult Z = zariski_Tp(X, p, q, tol, false);
    t.q.push_back(q);
    t.dims.push_back(static_cast<int>(zariski_fiber(Z, a, p, tol.eps_rank).rank()));
  }
  for (std::size_t i = 1; i < t.dims.size(); ++i) {
    if (t.dims[i] > t.dims[i - 1]) t.monotone = false;
    if (t.first_stable < 0 && t.dims[i] == t.dims[i - 1]) t.first_stable = t.q[i - 1];
  }
  return t;
}

}  // namespace wj
