#include "wj/paratangent.hpp"

#include <cmath>
#include <limits>

namespace wj {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MorphismReport pushforward_bundle(const std::vector<MapJetd>& phi, const Bundled& tauY, const Bundled& tauX,
                                  double eps_match, double theta_tol, const Schedule& schedule) {
  const JetFrame& fy = *jet_frame(tauY);
  const JetFrame& fx = *jet_frame(tauX);
  if (static_cast<int>(phi.size()) != tauY.size()) throw std::invalid_argument("pushforward_bundle: one jet per Y point");
  if (fy.sig.p() != fx.sig.p()) throw std::invalid_argument("pushforward_bundle: order mismatch");
  MorphismReport rep;
  rep.schedule = schedule;
  std::vector<int> match(tauY.size(), -1);
  for (int i = 0; i < tauY.size(); ++i) {
    if (!(phi[i].source == fy.sig) || phi[i].n() != fx.sig.n())
      throw std::invalid_argument("pushforward_bundle: map jet shape mismatch");
    if ((phi[i].base - tauY.point(i)).norm() > 1e-12 * (1 + tauY.point(i).norm()))
      throw std::invalid_argument("pushforward_bundle: map jet not based at the Y sample point");
    const VectorXd a = phi[i].value();
    double best = std::numeric_limits<double>::infinity();
    for (int x = 0; x < tauX.size(); ++x) {
      const double d = (tauX.point(x) - a).norm();
      if (d < best) {
        best = d;
        match[i] = x;
      }
    }
    if (!(best <= eps_match)) throw std::invalid_argument("pushforward_bundle: image point not in X sample");
    const VectorXd xa = tauX.point(match[i]);
    double worst = 0;
    const MatrixXd& B = tauY.fibers[i].basis;
    for (int c = 0; c < B.cols(); ++c) {
      const JetDuald eta(fy.sig, tauY.point(i), B.col(c));
      const VectorXd v = recenter(pushforward(phi[i], eta), xa).coords;
      const double vn = v.norm();
      if (vn < 1e-14) continue;
      worst = std::max(worst, std::asin(std::min(1.0, tauX.fibers[match[i]].reject(v).norm() / vn)));
    }
    rep.angles.push_back(worst);
    if (worst > rep.max_angle || rep.worst_point < 0) {
      rep.max_angle = worst;
      rep.worst_point = i;
    }
  }
  rep.pass = rep.max_angle < theta_tol;
  // boundedness of pushed constrained elements: c' per scale
  for (double delta : schedule.scales) {
    double cmax = 0;
    for_each_pair_within(tauY.points, delta, [&](int i, int j, double) {
      for (int dir = 0; dir < 2; ++dir) {
        const int b0 = dir ? j : i, b1 = dir ? i : j;
        const VectorXd a0 = phi[b0].value(), a1 = phi[b1].value();
        const MatrixXd& B = tauY.fibers[b1].basis;
        for (int c = 0; c < B.cols(); ++c) {
          JetDuald eta(fy.sig, tauY.point(b1), B.col(c));
          const double s = constraint_value(eta, tauY.point(b0), tauY.point(b1));
          if (s < 1e-14) continue;
          eta.coords /= s;
          cmax = std::max(cmax, constraint_value(pushforward(phi[b1], eta), a0, a1));
        }
      }
    });
    rep.boundedness_per_scale.push_back(cmax);
  }
  return rep;
}

CompositeResult composite_flat_test(const std::vector<Polyd>& g_jets, const std::vector<MapJetd>& phi,
                                    const VectorXd& a, int p, double eps_match, double eps_alg) {
  if (g_jets.size() != phi.size()) throw std::invalid_argument("composite_flat_test: size mismatch");
  CompositeResult res;
  for (std::size_t i = 0; i < phi.size(); ++i)
    if ((phi[i].value() - a).norm() <= eps_match) res.fiber.push_back(static_cast<int>(i));
  if (res.fiber.empty()) throw std::invalid_argument("composite_flat_test: empty fiber over a");
  const int n = static_cast<int>(a.size());
  JetSignature sn(n, p);
  int rows = 0;
  for (int i : res.fiber) {
    if (phi[i].p() != p || g_jets[i].p() < p) throw std::invalid_argument("composite_flat_test: order mismatch");
    rows += phi[i].source.dim();
  }
  MatrixXd A(rows, sn.dim());
  VectorXd rhs(rows);
  int r0 = 0;
  for (int i : res.fiber) {
    const int d = phi[i].source.dim();
    // P centered at a, carried to phi(b), then pulled back
    A.middleRows(r0, d) = pullback_matrix(phi[i]) * rebase_matrix<double>(sn, a, phi[i].value());
    const Polyd g = truncate(rebase(g_jets[i], phi[i].base), p);
    rhs.segment(r0, d) = g.coeffs;
    r0 += d;
  }
  const VectorXd c = A.completeOrthogonalDecomposition().solve(rhs);
  res.residual = (A * c - rhs).norm();
  res.feasible = res.residual <= eps_alg * std::max(1.0, rhs.norm());
  res.P = Polyd(sn, a, c);
  return res;
}

}  // namespace wj
