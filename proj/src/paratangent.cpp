#include "wj/paratangent.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <map>

namespace wj {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd JetFrame::transport(const VectorXd& from, const VectorXd& to) const {
  const int d = sig.dim();
  MatrixXd T = MatrixXd::Identity(d + extra, d + extra);
  T.topLeftCorner(d, d) = dual_transport<double>(sig, from, to);
  return T;
}

const JetFrame* jet_frame(const Bundled& E) {
  const auto* f = dynamic_cast<const JetFrame*>(E.frame.get());
  if (!f) throw std::invalid_argument("bundle does not carry jet coordinates");
  return f;
}

namespace {

double pow0(double h, int e) { return e == 0 ? 1.0 : std::pow(h, e); }

VectorXd weights(const JetSignature& sig, int extra, double h) {
  VectorXd w = VectorXd::Zero(sig.dim() + extra);
  for (int i = 0; i < sig.dim(); ++i) w(i) = pow0(h, sig.p() - sig.order_of(i));
  return w;
}

MatrixXd empty(int r) { return MatrixXd(r, 0); }

// Left singular vectors of G with singular value >= tau.
MatrixXd visible_dirs(const MatrixXd& G, double tau) {
  if (G.cols() == 0) return empty(static_cast<int>(G.rows()));
  Eigen::JacobiSVD<MatrixXd> svd(G, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  int k = 0;
  while (k < s.size() && s(k) >= tau) ++k;
  return svd.matrixU().leftCols(k);
}

// Directions carrying at least `share` of the energy of `sources` unit-energy sources.
MatrixXd pooled_dirs(const MatrixXd& P, int sources, double share) {
  const int r = static_cast<int>(P.rows());
  if (P.cols() == 0 || sources == 0) return empty(r);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(P * P.transpose());
  std::vector<int> keep;
  for (int i = r - 1; i >= 0; --i)
    if (es.eigenvalues()(i) >= share * sources) keep.push_back(i);
  MatrixXd out(r, keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j) out.col(j) = es.eigenvectors().col(keep[j]);
  return out;
}

MatrixXd hcat(const std::vector<const MatrixXd*>& parts, int r) {
  int c = 0;
  for (auto* m : parts) c += static_cast<int>(m->cols());
  MatrixXd out(r, c);
  c = 0;
  for (auto* m : parts) {
    out.middleCols(c, m->cols()) = *m;
    c += static_cast<int>(m->cols());
  }
  return out;
}

MatrixXd project_out(const MatrixXd& Ea, const MatrixXd& M) { return M - Ea * (Ea.transpose() * M); }

// Orthonormal S extended by the directions of `add` that stay visible outside S.
MatrixXd extend_visible(const MatrixXd& S, const MatrixXd& add, double tau) {
  if (add.cols() == 0) return S;
  const MatrixXd extra = visible_dirs(project_out(S, add), tau);
  MatrixXd out(S.rows(), S.cols() + extra.cols());
  out << S, extra;
  return out;
}

int min_neighbors(const Tolerances& tol, int fallback) { return tol.min_neighbors > 0 ? tol.min_neighbors : fallback; }

// prefix length of the neighbor list per scale; 0 when the scale is unusable
std::vector<int> usable_prefixes(const NeighborGraph& G, int a, const Schedule& s, int min_nb) {
  std::vector<int> m(s.size(), 0);
  for (std::size_t k = 0; k < s.size(); ++k) {
    const int c = G.count_within(a, s.scales[k]);
    m[k] = c >= min_nb ? c : 0;
  }
  return m;
}

// Limit of per-scale subspaces over the usable scales; nullopt if fewer than 3.
std::optional<LimitResult<double>> limit_over(const std::vector<int>& m, const Schedule& s,
                                              const std::vector<MatrixXd>& per_scale, const Tolerances& tol) {
  std::vector<ScaledSubspace<double>> seq;
  for (std::size_t k = 0; k < s.size(); ++k)
    if (m[k] > 0) seq.push_back({s.scales[k], Subspaced::from_orthonormal(per_scale[k])});
  if (seq.size() < 3) return std::nullopt;
  return subspace_limit<double>(seq, tol.theta_tol, tol.theta_persist);
}

struct PairWork {
  MatrixXd T;      // transport neighbor -> a
  MatrixXd cand;   // constraint-saturated candidates, E_a projected out, coordinates at a
  MatrixXd vis;    // visible directions of cand
  MatrixXd close;  // directions of the neighbor fiber outside E_a
};

PairWork pair_work(const Bundled& E, const JetFrame& jf, int a, int b, double h, const Tolerances& tol) {
  const int r = static_cast<int>(E.ambient);
  PairWork w;
  w.T = jf.transport(E.point(b), E.point(a));
  const MatrixXd& Ea = E.fibers[a].basis;
  const MatrixXd& Bb = E.fibers[b].basis;
  const int db = static_cast<int>(Bb.cols());
  if (db == 0) {
    w.cand = w.vis = w.close = empty(r);
    return w;
  }
  const MatrixXd TB = w.T * Bb;
  Eigen::HouseholderQR<MatrixXd> qr(TB);
  const MatrixXd O = qr.householderQ() * MatrixXd::Identity(r, db);
  const MatrixXd Rm = qr.matrixQR().topLeftCorner(db, db).triangularView<Eigen::Upper>();
  w.close = visible_dirs(project_out(Ea, O), tol.tau_vis);

  // split span(T B_b) into directions near E_a and the rest
  const MatrixXd M = Ea.transpose() * O;
  Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeFullV);
  const double cn = std::cos(tol.theta_near);
  int kn = 0;
  while (kn < svd.singularValues().size() && svd.singularValues()(kn) >= cn) ++kn;
  if (kn == 0) {
    w.cand = w.vis = empty(r);
    return w;
  }
  const MatrixXd Zn = svd.matrixV().leftCols(kn);
  const MatrixXd Nb = Bb * Rm.triangularView<Eigen::Upper>().solve(Zn);  // coordinates at b

  const VectorXd wt = weights(jf.sig, jf.extra, h);
  const MatrixXd WN = wt.asDiagonal() * Nb;
  Eigen::JacobiSVD<MatrixXd> ws(WN, Eigen::ComputeThinV);
  MatrixXd cand(r, kn);
  for (int i = 0; i < kn; ++i) {
    const VectorXd v = Nb * ws.matrixV().col(i);
    const double s = wt.cwiseProduct(v).cwiseAbs().maxCoeff();
    const double scale = s > 1e-12 * v.norm() ? 1.0 / s : 1e6;
    cand.col(i) = scale * (w.T * v);
  }
  w.cand = project_out(Ea, cand);
  w.vis = visible_dirs(w.cand, tol.tau_vis);
  return w;
}

template <typename Fn>
void for_each_combination(int m, int L, Fn&& fn) {
  std::vector<int> idx(L);
  for (int i = 0; i < L; ++i) idx[i] = i;
  if (L > m) return;
  while (true) {
    fn(idx);
    int i = L - 1;
    while (i >= 0 && idx[i] == m - L + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < L; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

double constraint_value(const JetDuald& eta, const VectorXd& a0, const VectorXd& ai) {
  const JetDuald at = recenter(eta, ai);
  const double h = (ai - a0).norm();
  double m = 0;
  for (int i = 0; i < eta.sig.dim(); ++i)
    m = std::max(m, pow0(h, eta.sig.p() - eta.sig.order_of(i)) * std::abs(at.coords(i)));
  return m;
}

Bundled delta_seed(const MatrixXd& X, int p) {
  JetSignature sig(static_cast<int>(X.rows()), p);
  Bundled E(X, sig.dim(), std::make_shared<JetFrame>(sig, 0));
  for (auto& f : E.fibers) {
    MatrixXd b = MatrixXd::Zero(sig.dim(), 1);
    b(0, 0) = 1;
    f = Subspaced::from_orthonormal(b);
  }
  return E;
}

Bundled nabla_seed(const MatrixXd& X, const VectorXd& f, int p) {
  if (f.size() != X.cols()) throw std::invalid_argument("nabla: one value per sample point required");
  JetSignature sig(static_cast<int>(X.rows()), p);
  Bundled E(X, sig.dim() + 1, std::make_shared<JetFrame>(sig, 1));
  for (int a = 0; a < E.size(); ++a) {
    if (!std::isfinite(f(a))) throw std::invalid_argument("nabla: non-finite value");
    MatrixXd b = MatrixXd::Zero(sig.dim() + 1, 1);
    b(0, 0) = 1;
    b(sig.dim(), 0) = f(a);
    b /= b.norm();
    E.fibers[a] = Subspaced::from_orthonormal(b);
  }
  return E;
}

namespace {

// Output of the previous application, reused where nothing it depends on changed.
struct RefineCache {
  Bundled in, out;
  std::vector<char> unresolved, nonconverged;
};

bool same_fiber(const Subspaced& A, const Subspaced& B) {
  return A.basis.rows() == B.basis.rows() && A.basis.cols() == B.basis.cols() && A.basis == B.basis;
}

Bundled refine_impl(const Bundled& E, const DeltaConfig& cfg, RefineDiagnostics* diag, PoolProbe* probe,
                    RefineCache* cache) {
  const JetFrame& jf = *jet_frame(E);
  if (cfg.k < 1) throw std::invalid_argument("delta_refine: k must be >= 1");
  if (cfg.schedule.empty()) throw std::invalid_argument("delta_refine: empty schedule");
  const Tolerances& tol = cfg.tol;
  const Schedule& S = cfg.schedule;
  const int N = E.size();
  const int r = static_cast<int>(E.ambient);
  const int ns = static_cast<int>(S.size());
  const NeighborGraph G(E.points, S.coarsest(), tol.neighbor_cap);
  const int min_nb = min_neighbors(tol, jf.sig.n() + 2);
  RefineDiagnostics dg;

  // the result at a depends on fibers at a, its neighbors and their neighbors
  std::vector<char> redo(N, 1), need(N, 1);
  const bool reuse = cache && cache->in.size() == N && cache->in.ambient == E.ambient &&
                     cache->in.points == E.points && !probe;
  if (reuse) {
    std::vector<char> changed(N), near(N);
    for (int b = 0; b < N; ++b) changed[b] = !same_fiber(E.fibers[b], cache->in.fibers[b]);
    for (int a = 0; a < N; ++a) {
      near[a] = changed[a];
      for (const auto& nb : G.lists[a]) near[a] = near[a] || changed[nb.index];
    }
    for (int a = 0; a < N; ++a) {
      redo[a] = near[a];
      for (const auto& nb : G.lists[a]) redo[a] = redo[a] || near[nb.index];
    }
    need = redo;
    for (int a = 0; a < N; ++a)
      if (redo[a])
        for (const auto& nb : G.lists[a]) need[nb.index] = 1;
  }
  std::vector<char> unresolved(N, 0), nonconverged(N, 0);

  std::vector<std::vector<int>> prefix(N);
  std::vector<std::vector<PairWork>> work(N);
  std::vector<std::vector<MatrixXd>> own(N), close(N);  // per point, per scale
  const double share_pool = tol.tau_pool * tol.tau_pool;

  for (int a = 0; a < N; ++a) {
    prefix[a] = usable_prefixes(G, a, S, min_nb);
    if (G.capped[a]) ++dg.capped;
    own[a].assign(ns, empty(r));
    close[a].assign(ns, empty(r));
    if (E.fibers[a].full() || !need[a]) continue;
    const auto& nl = G.lists[a];
    int mmax = 0;
    for (int m : prefix[a]) mmax = std::max(mmax, m);
    work[a].reserve(mmax);
    for (int j = 0; j < mmax; ++j) work[a].push_back(pair_work(E, jf, a, nl[j].index, nl[j].dist, tol));
    int last_m = -1;
    for (int s = 0; s < ns; ++s) {
      const int m = prefix[a][s];
      if (m == 0) continue;
      if (m == last_m) {
        own[a][s] = own[a][s - 1];
        close[a][s] = close[a][s - 1];
        continue;
      }
      last_m = m;
      std::vector<const MatrixXd*> vis, cl;
      for (int j = 0; j < m; ++j) {
        vis.push_back(&work[a][j].vis);
        cl.push_back(&work[a][j].close);
      }
      MatrixXd A = pooled_dirs(hcat(vis, r), m, share_pool);
      const int mt = std::min(m, tol.neighbor_cap);
      for (int L = 2; L <= cfg.k; ++L) {
        std::vector<MatrixXd> tv;
        int count = 0;
        for_each_combination(mt, L, [&](const std::vector<int>& idx) {
          std::vector<const MatrixXd*> parts;
          for (int j : idx) parts.push_back(&work[a][j].cand);
          tv.push_back(visible_dirs(hcat(parts, r), tol.tau_vis));
          ++count;
        });
        std::vector<const MatrixXd*> tp;
        for (auto& t : tv) tp.push_back(&t);
        A = extend_visible(A, pooled_dirs(hcat(tp, r), count, share_pool), tol.tau_vis);
      }
      own[a][s] = A;
      close[a][s] = pooled_dirs(hcat(cl, r), m, tol.tau_close);
    }
  }

  Bundled out = E;
  for (int a = 0; a < N; ++a) {
    if (E.fibers[a].full()) continue;
    if (!redo[a]) {
      out.fibers[a] = cache->out.fibers[a];
      unresolved[a] = cache->unresolved[a];
      nonconverged[a] = cache->nonconverged[a];
      continue;
    }
    const MatrixXd& Ea = E.fibers[a].basis;
    const auto& nl = G.lists[a];
    std::vector<MatrixXd> per_scale(ns, empty(r));
    int last_m = -1;
    for (int s = 0; s < ns; ++s) {
      const int m = prefix[a][s];
      if (m == 0) continue;
      if (m == last_m) {
        per_scale[s] = per_scale[s - 1];
        continue;
      }
      last_m = m;
      // candidates found at neighboring base points, carried to a
      std::vector<MatrixXd> from_nb;
      int sources = 0;
      for (int j = 0; j < m; ++j) {
        const int a0 = nl[j].index;
        if (prefix[a0][s] == 0) continue;
        ++sources;
        if (own[a0][s].cols() == 0) continue;
        from_nb.push_back(visible_dirs(project_out(Ea, work[a][j].T * own[a0][s]), tol.tau_vis));
      }
      std::vector<const MatrixXd*> parts;
      for (auto& x : from_nb) parts.push_back(&x);
      const MatrixXd C = pooled_dirs(hcat(parts, r), sources, tol.tau_close);
      per_scale[s] = extend_visible(extend_visible(own[a][s], close[a][s], tol.tau_vis), C, tol.tau_vis);
    }
    if (probe && a == probe->point) {
      probe->pair_pools = own[a];
      probe->pools = per_scale;
    }
    const auto lim = limit_over(prefix[a], S, per_scale, tol);
    if (!lim) {
      unresolved[a] = 1;
      continue;
    }
    if (!lim->converged) nonconverged[a] = 1;
    if (lim->space.rank() == 0) continue;
    MatrixXd both(r, Ea.cols() + lim->space.rank());
    both << Ea, lim->space.basis;
    out.fibers[a] = subspace_span<double>(both, tol.eps_rank);
  }
  for (int a = 0; a < N; ++a) {
    dg.unresolved += unresolved[a];
    dg.nonconverged += nonconverged[a];
  }
  if (diag) *diag = dg;
  if (cache) {
    cache->in = E;
    cache->out = out;
    cache->unresolved = std::move(unresolved);
    cache->nonconverged = std::move(nonconverged);
  }
  return out;
}

}  // namespace

Bundled delta_refine(const Bundled& E, const DeltaConfig& cfg, RefineDiagnostics* diag, PoolProbe* probe) {
  return refine_impl(E, cfg, diag, probe, nullptr);
}

Bundled delta_refine(const Bundled& E, int p, double delta, int k, int count) {
  DeltaConfig cfg;
  cfg.p = p;
  cfg.k = k;
  cfg.schedule = Schedule::geometric(delta, count);
  return delta_refine(E, cfg);
}

GlaeserOp<double> delta_refine_op(const DeltaConfig& cfg, RefineDiagnostics* diag) {
  GlaeserOp<double> op;
  op.name = "delta_refine";
  op.locality_radius = 2 * cfg.schedule.coarsest();
  auto cache = std::make_shared<RefineCache>();
  op.apply = [cfg, diag, cache](const Bundled& E) { return refine_impl(E, cfg, diag, nullptr, cache.get()); };
  return op;
}

TauResult tau_p(const MatrixXd& X, const DeltaConfig& cfg) {
  TauResult res;
  const auto op = delta_refine_op(cfg, &res.diag);
  SaturateOptions so;
  so.theta_tol = cfg.tol.theta_tol;
  auto sat = saturate(delta_seed(X, cfg.p), op, so);
  res.bundle = std::move(sat.bundle);
  res.trace = std::move(sat.trace);
  res.stabilized = res.trace.stabilized;
  return res;
}

namespace {

double vertical_projection(const Subspaced& F) {
  if (F.rank() == 0) return 0;
  return F.basis.row(F.ambient_dim() - 1).norm();
}

bool is_vertical(const Subspaced& F, const Tolerances& tol) {
  return vertical_projection(F) >= 1 - tol.vertical_eps;
}

// Fill the function verdict from a saturated bundle whose last coordinate is the value axis.
void vertical_verdict(CriterionVerdict& v, const Bundled& B, const std::vector<int>& first, const Tolerances& tol) {
  v.fiber_dims = B.dims();
  std::vector<int> vert;
  for (int a = 0; a < B.size(); ++a)
    if (is_vertical(B.fibers[a], tol)) vert.push_back(a);
  v.vertical_points = static_cast<int>(vert.size());
  if (vert.empty()) {
    v.is_function = v.stabilized ? Verdict::pass : Verdict::inconclusive;
    if (!v.stabilized) v.note = "saturation did not stabilize within the cap";
    return;
  }
  v.is_function = Verdict::fail;
  int it0 = std::numeric_limits<int>::max();
  for (int a : vert) it0 = std::min(it0, first[a] < 0 ? 0 : first[a]);
  std::vector<int> cand;
  double best = 0;
  for (int a : vert)
    if ((first[a] < 0 ? 0 : first[a]) == it0) best = std::max(best, vertical_projection(B.fibers[a]));
  for (int a : vert)
    if ((first[a] < 0 ? 0 : first[a]) == it0 && vertical_projection(B.fibers[a]) >= best - 1e-12) cand.push_back(a);
  VectorXd c = VectorXd::Zero(B.points.rows());
  for (int a : cand) c += B.point(a);
  c /= static_cast<double>(cand.size());
  int w = cand.front();
  for (int a : cand)
    if ((B.point(a) - c).norm() < (B.point(w) - c).norm()) w = a;
  const auto& F = B.fibers[w];
  VectorXd e = VectorXd::Zero(B.ambient);
  e(B.ambient - 1) = 1;
  VectorXd u = F.project(e);
  u /= u.norm();
  VerticalWitness wt;
  wt.point = w;
  wt.vector = u;
  wt.base_norm = u.head(B.ambient - 1).norm();
  wt.vertical = u(B.ambient - 1);
  wt.iteration = it0;
  v.witness = wt;
}

struct NablaRun {
  Bundled bundle;
  SaturationTrace trace;
  CriterionVerdict verdict;
};

NablaRun run_nabla(const VectorXd& f, const MatrixXd& X, const DeltaConfig& cfg) {
  NablaRun run;
  RefineDiagnostics diag;
  const auto op = delta_refine_op(cfg, &diag);
  const Bundled seed = nabla_seed(X, f, cfg.p);
  std::vector<int> first(seed.size(), -1);
  for (int a = 0; a < seed.size(); ++a)
    if (is_vertical(seed.fibers[a], cfg.tol)) first[a] = 0;
  int iter = 0;
  GlaeserOp<double> tracked{op.name,
                            [&](const Bundled& E) {
                              Bundled R = op.apply(E);
                              ++iter;
                              for (int a = 0; a < R.size(); ++a)
                                if (first[a] < 0 && is_vertical(R.fibers[a], cfg.tol)) first[a] = iter;
                              return R;
                            },
                            op.locality_radius};
  SaturateOptions so;
  so.theta_tol = cfg.tol.theta_tol;
  auto sat = saturate(seed, tracked, so);
  run.bundle = std::move(sat.bundle);
  run.trace = std::move(sat.trace);
  run.verdict.iterations = run.trace.iterations;
  run.verdict.stabilized = run.trace.stabilized;
  run.verdict.diag = diag;
  vertical_verdict(run.verdict, run.bundle, first, cfg.tol);
  return run;
}

}  // namespace

NablaResult nabla_p(const VectorXd& f, const MatrixXd& X, const DeltaConfig& cfg) {
  NablaRun main = run_nabla(f, X, cfg);
  NablaResult res{std::move(main.bundle), std::move(main.trace), std::move(main.verdict)};
  if (cfg.schedule.size() > 3) {
    DeltaConfig coarse = cfg;
    coarse.schedule = cfg.schedule.drop_finest();
    const NablaRun other = run_nabla(f, X, coarse);
    res.verdict.coarse_verdict = to_string(other.verdict.is_function);
    const auto decided = [](Verdict v) { return v != Verdict::inconclusive; };
    if (decided(res.verdict.is_function) && decided(other.verdict.is_function) &&
        res.verdict.is_function != other.verdict.is_function) {
      res.verdict.scale_robust = false;
      res.verdict.note = "verdict changes when the finest scale is dropped";
      res.verdict.is_function = Verdict::inconclusive;
    }
  }
  return res;
}

NablaValue nabla_value(const Bundled& nabla, int a, const VectorXd& xi, double theta_tol) {
  const JetFrame& jf = *jet_frame(nabla);
  if (jf.extra != 1) throw std::invalid_argument("nabla_value: bundle has no value coordinate");
  const int d = jf.sig.dim();
  if (xi.size() != d) throw std::invalid_argument("nabla_value: functional has the wrong dimension");
  const MatrixXd& B = nabla.fibers.at(a).basis;
  const double xn = xi.norm();
  if (xn == 0) return {0.0, 0.0};
  if (B.cols() == 0) throw std::domain_error("nabla_value: functional outside the fiber");
  const MatrixXd BP = B.topRows(d);
  const VectorXd c = BP.completeOrthogonalDecomposition().solve(xi);
  NablaValue v;
  v.residual = (BP * c - xi).norm() / xn;
  if (!(v.residual < std::sin(theta_tol))) throw std::domain_error("nabla_value: functional outside the fiber");
  v.value = B.row(d).dot(c);
  return v;
}

FieldExtraction field_from_nabla(const Bundled& nabla, double theta_tol) {
  const JetFrame& jf = *jet_frame(nabla);
  const int d = jf.sig.dim();
  FieldExtraction fx;
  MatrixXd jets = MatrixXd::Zero(d, nabla.size());
  fx.complete.assign(nabla.size(), 1);
  for (int a = 0; a < nabla.size(); ++a) {
    for (int i = 0; i < d; ++i) {
      VectorXd e = VectorXd::Zero(d);
      e(i) = 1;
      try {
        const NablaValue v = nabla_value(nabla, a, e, theta_tol);
        jets(i, a) = v.value;
        fx.worst_residual = std::max(fx.worst_residual, v.residual);
      } catch (const std::domain_error&) {
        fx.complete[a] = 0;
        jets(i, a) = std::numeric_limits<double>::quiet_NaN();
      }
    }
    if (!fx.complete[a]) fx.partial = true;
  }
  fx.field = WhitneyField(jf.sig, nabla.points, jets);
  return fx;
}

WhitneyField restrict_field(const WhitneyField& F, const std::vector<char>& keep) {
  std::vector<int> idx;
  for (int i = 0; i < F.size(); ++i)
    if (keep.at(i)) idx.push_back(i);
  MatrixXd P(F.points.rows(), idx.size()), J(F.jets.rows(), idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    P.col(k) = F.points.col(idx[k]);
    J.col(k) = F.jets.col(idx[k]);
  }
  return WhitneyField(F.sig, P, J);
}

Bundled secant_ptg(const MatrixXd& X, const Schedule& schedule, const Tolerances& tol, RefineDiagnostics* diag) {
  if (schedule.empty()) throw std::invalid_argument("secant_ptg: empty schedule");
  const int n = static_cast<int>(X.rows());
  const int N = static_cast<int>(X.cols());
  Bundled E(X, n);
  const NeighborGraph G(X, schedule.coarsest(), tol.neighbor_cap);
  const int min_nb = min_neighbors(tol, 2);
  const int ns = static_cast<int>(schedule.size());
  RefineDiagnostics dg;
  for (int a = 0; a < N; ++a) {
    if (G.capped[a]) ++dg.capped;
    const auto m = usable_prefixes(G, a, schedule, min_nb);
    std::vector<MatrixXd> per_scale(ns, empty(n));
    int last_m = -1;
    for (int s = 0; s < ns; ++s) {
      if (m[s] == 0) continue;
      if (m[s] == last_m) {
        per_scale[s] = per_scale[s - 1];
        continue;
      }
      last_m = m[s];
      std::vector<int> pts{a};
      for (int j = 0; j < m[s]; ++j) pts.push_back(G.lists[a][j].index);
      const int np = static_cast<int>(pts.size());
      MatrixXd sec(n, np * (np - 1) / 2);
      int c = 0;
      for (int i = 0; i < np; ++i)
        for (int j = i + 1; j < np; ++j) {
          const VectorXd v = X.col(pts[j]) - X.col(pts[i]);
          sec.col(c++) = v / v.norm();
        }
      per_scale[s] = pooled_dirs(sec, c, tol.tau_pool * tol.tau_pool);
    }
    const auto lim = limit_over(m, schedule, per_scale, tol);
    if (!lim) {
      // too few usable scales: keep the finest pooled span, flagged
      for (int s = ns - 1; s >= 0; --s)
        if (m[s] > 0) {
          E.fibers[a] = Subspaced::from_orthonormal(per_scale[s]);
          ++dg.unresolved;
          break;
        }
      continue;
    }
    if (!lim->converged) ++dg.nonconverged;
    E.fibers[a] = lim->space;
  }
  if (diag) *diag = dg;
  return E;
}

GlaeserOp<double> lambda_op(const Schedule& schedule, const Tolerances& tol) {
  GlaeserOp<double> op;
  op.name = "span_closure";
  op.locality_radius = schedule.coarsest();
  op.apply = [schedule, tol](const Bundled& E) {
    const int r = static_cast<int>(E.ambient);
    const int ns = static_cast<int>(schedule.size());
    const NeighborGraph G(E.points, schedule.coarsest(), tol.neighbor_cap);
    const int min_nb = min_neighbors(tol, 2);
    Bundled out = E;
    for (int a = 0; a < E.size(); ++a) {
      if (E.fibers[a].full()) continue;
      const MatrixXd& Ea = E.fibers[a].basis;
      const auto m = usable_prefixes(G, a, schedule, min_nb);
      const int mmax = *std::max_element(m.begin(), m.end());
      std::vector<MatrixXd> dirs;
      for (int j = 0; j < mmax; ++j) {
        const int b = G.lists[a][j].index;
        dirs.push_back(visible_dirs(project_out(Ea, E.transport(b, a) * E.fibers[b].basis), tol.tau_vis));
      }
      std::vector<MatrixXd> per_scale(ns, empty(r));
      for (int s = 0; s < ns; ++s) {
        if (m[s] == 0) continue;
        std::vector<const MatrixXd*> parts;
        for (int j = 0; j < m[s]; ++j) parts.push_back(&dirs[j]);
        per_scale[s] = pooled_dirs(hcat(parts, r), m[s], tol.tau_close);
      }
      const auto lim = limit_over(m, schedule, per_scale, tol);
      if (!lim || lim->space.rank() == 0) continue;
      MatrixXd both(r, Ea.cols() + lim->space.rank());
      both << Ea, lim->space.basis;
      out.fibers[a] = subspace_span<double>(both, tol.eps_rank);
    }
    return out;
  };
  return op;
}

Tau1Result tau1(const MatrixXd& X, const Schedule& schedule, const Tolerances& tol) {
  Tau1Result res;
  const Bundled start = secant_ptg(X, schedule, tol, &res.diag);
  SaturateOptions so;
  so.theta_tol = tol.theta_tol;
  auto sat = saturate(start, lambda_op(schedule, tol), so);
  res.bundle = std::move(sat.bundle);
  res.trace = std::move(sat.trace);
  return res;
}

Tau1FunctionResult tau1_function_test(const VectorXd& f, const MatrixXd& X, const Schedule& schedule,
                                      const Tolerances& tol) {
  if (f.size() != X.cols()) throw std::invalid_argument("tau1_function_test: one value per sample point required");
  MatrixXd graph(X.rows() + 1, X.cols());
  graph << X, f.transpose();
  Tau1Result t = tau1(graph, schedule, tol);
  Tau1FunctionResult res;
  res.verdict.iterations = t.trace.iterations;
  res.verdict.stabilized = t.trace.stabilized;
  res.verdict.diag = t.diag;
  std::vector<int> first(t.bundle.size(), 0);
  vertical_verdict(res.verdict, t.bundle, first, tol);
  res.bundle = std::move(t.bundle);
  return res;
}

}  // namespace wj
