#include "wj/whitney.hpp"

#include "wj/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace wj {

WhitneyField::WhitneyField(JetSignature s, MatrixXd pts, MatrixXd j)
    : sig(std::move(s)), points(std::move(pts)), jets(std::move(j)) {
  if (points.rows() != sig.n()) throw std::invalid_argument("WhitneyField: point dimension mismatch");
  if (jets.rows() != sig.dim()) throw std::invalid_argument("WhitneyField: jet length mismatch");
  if (jets.cols() != points.cols()) throw std::invalid_argument("WhitneyField: point/jet count mismatch");
}

int WhitneyField::find(const VectorXd& x, double tol) const {
  for (int i = 0; i < size(); ++i)
    if ((points.col(i) - x).norm() <= tol) return i;
  throw std::invalid_argument("point is not in the sample");
}

WhitneyField induced_field(const Polyd& P, const MatrixXd& points) {
  MatrixXd jets(P.sig.dim(), points.cols());
  for (int i = 0; i < points.cols(); ++i) jets.col(i) = rebase(P, VectorXd(points.col(i))).coeffs;
  return WhitneyField(P.sig, points, jets);
}

Polyd taylor_poly(const WhitneyField& F, int a) {
  if (a < 0 || a >= F.size()) throw std::invalid_argument("taylor_poly: point is not in the sample");
  return Polyd(F.sig, F.point(a), F.jets.col(a));
}

Polyd taylor_poly(const WhitneyField& F, const VectorXd& a) { return taylor_poly(F, F.find(a)); }

namespace {

// (R^p_a F)(b) for every alpha at once
VectorXd remainders(const WhitneyField& F, int a, int b) {
  return F.jets.col(b) - rebase(taylor_poly(F, a), F.point(b)).coeffs;
}

double dist_pow(double d, int e) { return e == 0 ? 1.0 : std::pow(d, e); }

}  // namespace

double remainder(const WhitneyField& F, int a, int b, const MultiIndex& alpha) {
  return remainders(F, a, b)(F.sig.index_of(alpha));
}

double delta_quotient(const WhitneyField& F, int a, int b, const MultiIndex& alpha) {
  const double d = (F.point(b) - F.point(a)).norm();
  if (d == 0) throw std::domain_error("delta_quotient: a == b");
  return remainder(F, a, b, alpha) / dist_pow(d, F.sig.p() - order(alpha));
}

double apply(const JetDuald& xi, const WhitneyField& F, int a) {
  return recenter(xi, F.point(a)).coords.dot(F.jets.col(a));
}

IdentityResidual pair_identity(const WhitneyField& F, const JetDuald& xi, const JetDuald& eta, int a, int b) {
  const double d = (F.point(b) - F.point(a)).norm();
  if (d == 0) throw std::domain_error("pair_identity: a == b");
  IdentityResidual r;
  r.lhs = apply(xi, F, a) + apply(eta, F, b);
  const JetDuald sum = xi + eta;
  r.rhs = apply(sum, F, a);
  const VectorXd eta_b = recenter(eta, F.point(b)).coords;
  const int p = F.sig.p();
  for (int i = 0; i < F.sig.dim(); ++i) {
    const double dq = delta_quotient(F, a, b, F.sig[i]);
    r.rhs += dq * dist_pow(d, p - F.sig.order_of(i)) * eta_b(i);
  }
  r.residual = std::abs(r.lhs - r.rhs);
  return r;
}

double pair_identity_residual(const WhitneyField& F, const JetDuald& xi, const JetDuald& eta, int a, int b) {
  return pair_identity(F, xi, eta, a, b).residual;
}

double shift_identity_residual(const WhitneyField& F, const JetDuald& eta, int a, int b) {
  return pair_identity(F, JetDuald(F.sig, F.point(a)), eta, a, b).residual;
}

double divided_difference(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.empty()) throw std::invalid_argument("divided_difference: size mismatch");
  const std::size_t m = xs.size();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (xs[i] == xs[j]) throw std::invalid_argument("divided_difference: duplicate nodes");
  std::vector<double> t(ys);
  for (std::size_t k = 1; k < m; ++k)
    for (std::size_t i = m - 1; i >= k; --i) t[i] = (t[i] - t[i - 1]) / (xs[i] - xs[i - k]);
  double f = 1;
  for (std::size_t k = 2; k < m; ++k) f *= static_cast<double>(k);
  return f * t[m - 1];
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    default: return "inconclusive";
  }
}

int exit_code(Verdict v) {
  switch (v) {
    case Verdict::pass: return 0;
    case Verdict::fail: return 1;
    default: return 2;
  }
}

namespace {

std::vector<ModulusBin> make_bins(const Schedule& s) {
  std::vector<ModulusBin> bins;
  for (std::size_t k = 0; k + 1 < s.size(); ++k) bins.push_back({s.scales[k + 1], s.scales[k]});
  bins.push_back({0.0, s.finest()});
  return bins;
}

int bin_of(const Schedule& s, double d) {
  if (d > s.coarsest()) return -1;
  // first k with d > scales[k+1]
  for (std::size_t k = 0; k + 1 < s.size(); ++k)
    if (d > s.scales[k + 1]) return static_cast<int>(k);
  return static_cast<int>(s.size()) - 1;
}

void decide(ModulusReport& r, double extra_finest = 0) {
  std::vector<const ModulusBin*> ne;
  for (const auto& b : r.bins)
    if (b.count > 0) ne.push_back(&b);
  const auto& o = r.options;
  if (ne.empty()) {
    r.verdict = Verdict::inconclusive;
    r.note = "no pairs within the coarsest scale";
    return;
  }
  bool all_large = true;
  for (auto* b : ne) all_large = all_large && b->max_value >= o.eps_fail;
  const ModulusBin* fin = ne.back();
  if (all_large) {
    r.verdict = Verdict::fail;
    r.witness = ModulusWitness{fin->wa, fin->wb, fin->walpha, fin->max_value, 0.0};
    return;
  }
  if (ne.size() < 3) {
    r.verdict = Verdict::inconclusive;
    r.note = "fewer than 3 nonempty distance bins";
    return;
  }
  const double m1 = ne[ne.size() - 3]->max_value, m2 = ne[ne.size() - 2]->max_value, m3 = fin->max_value;
  const double fl = o.noise_floor;
  const bool monotone = m2 <= m1 + fl && m3 <= m2 + fl;
  if (monotone && std::max(m3, extra_finest) < o.eps_mod) {
    r.verdict = Verdict::pass;
  } else {
    r.verdict = Verdict::inconclusive;
    r.note = monotone ? "finest bin above eps_mod" : "bin maxima not decreasing over the finest bins";
  }
  if (r.verdict != Verdict::pass) r.witness = ModulusWitness{fin->wa, fin->wb, fin->walpha, fin->max_value, 0.0};
}

}  // namespace

ModulusReport whitney_check(const WhitneyField& F, const Schedule& schedule, const ModulusOptions& opt) {
  if (schedule.empty()) throw std::invalid_argument("whitney_check: empty schedule");
  if (F.size() < 2) throw std::invalid_argument("whitney_check: need at least 2 points");
  ModulusReport r;
  r.kind = "whitney";
  r.p = F.sig.p();
  r.schedule = schedule;
  r.options = opt;
  r.bins = make_bins(schedule);
  const int p = F.sig.p();
  std::vector<double> scale(F.sig.dim());
  for_each_pair_within(F.points, schedule.coarsest(), [&](int i, int j, double d) {
    const int k = bin_of(schedule, d);
    if (k < 0) return;
    auto& bin = r.bins[k];
    for (int e = 0; e < F.sig.dim(); ++e) scale[e] = dist_pow(d, p - F.sig.order_of(e));
    for (int dir = 0; dir < 2; ++dir) {
      const int a = dir ? j : i, b = dir ? i : j;
      const VectorXd R = remainders(F, a, b);
      for (int e = 0; e < F.sig.dim(); ++e) {
        const double v = std::abs(R(e)) / scale[e];
        if (v > bin.max_value || bin.wa < 0) {
          bin.max_value = v;
          bin.wa = a;
          bin.wb = b;
          bin.walpha = e;
        }
      }
    }
    ++bin.count;
  });
  decide(r);
  if (r.witness && r.witness->a >= 0)
    r.witness->distance = (F.point(r.witness->a) - F.point(r.witness->b)).norm();
  return r;
}

ModulusReport whitney_1d_check(const std::vector<double>& xs_in, const std::vector<double>& fs_in, int p,
                               const Schedule& schedule, const ModulusOptions& opt) {
  if (schedule.empty()) throw std::invalid_argument("whitney_1d_check: empty schedule");
  if (xs_in.size() != fs_in.size()) throw std::invalid_argument("whitney_1d_check: size mismatch");
  if (static_cast<int>(xs_in.size()) < p + 1) throw std::invalid_argument("whitney_1d_check: fewer than p+1 points");
  const int N = static_cast<int>(xs_in.size());
  std::vector<int> ord(N);
  std::iota(ord.begin(), ord.end(), 0);
  std::sort(ord.begin(), ord.end(), [&](int a, int b) { return xs_in[a] < xs_in[b]; });
  std::vector<double> xs(N), fs(N);
  for (int i = 0; i < N; ++i) {
    xs[i] = xs_in[ord[i]];
    fs[i] = fs_in[ord[i]];
  }

  struct Cluster {
    double mid, dd;
    int first, last;
  };
  std::vector<std::vector<Cluster>> per_bin(schedule.size());
  std::vector<double> cx(p + 1), cy(p + 1);
  for (int stride = 1; stride <= 16; stride *= 2) {
    for (int i = 0; i + p * stride < N; ++i) {
      for (int k = 0; k <= p; ++k) {
        cx[k] = xs[i + k * stride];
        cy[k] = fs[i + k * stride];
      }
      const double diam = cx[p] - cx[0];
      if (p > 0 && diam <= 0) continue;
      const int b = bin_of(schedule, p == 0 ? 0.0 : diam);
      if (b < 0) continue;
      per_bin[b].push_back({0.5 * (cx[0] + cx[p]), divided_difference(cx, cy), ord[i], ord[i + p * stride]});
    }
  }

  ModulusReport r;
  r.kind = "divided_difference";
  r.p = p;
  r.schedule = schedule;
  r.options = opt;
  r.bins = make_bins(schedule);
  for (std::size_t b = 0; b < per_bin.size(); ++b) {
    auto& cl = per_bin[b];
    std::sort(cl.begin(), cl.end(), [](const Cluster& u, const Cluster& v) { return u.mid < v.mid; });
    auto& bin = r.bins[b];
    bin.count = cl.size();
    if (cl.empty()) continue;
    const double w = schedule.scales[b];
    // sliding window over diagonal locations [mid, mid + w]
    std::deque<int> mx, mn;
    std::size_t hi = 0;
    for (std::size_t lo = 0; lo < cl.size(); ++lo) {
      while (hi < cl.size() && cl[hi].mid <= cl[lo].mid + w) {
        while (!mx.empty() && cl[mx.back()].dd <= cl[hi].dd) mx.pop_back();
        mx.push_back(static_cast<int>(hi));
        while (!mn.empty() && cl[mn.back()].dd >= cl[hi].dd) mn.pop_back();
        mn.push_back(static_cast<int>(hi));
        ++hi;
      }
      while (mx.front() < static_cast<int>(lo)) mx.pop_front();
      while (mn.front() < static_cast<int>(lo)) mn.pop_front();
      const double spread = cl[mx.front()].dd - cl[mn.front()].dd;
      if (spread > bin.max_value || bin.wa < 0) {
        bin.max_value = spread;
        bin.wa = cl[mn.front()].first;
        bin.wb = cl[mx.front()].first;
      }
    }
    // pointwise convergence: compare with the nearest location in the next coarser nonempty bin
    for (int c = static_cast<int>(b) - 1; c >= 0; --c) {
      const auto& co = per_bin[c];
      if (co.empty()) continue;
      for (const auto& u : cl) {
        auto it = std::lower_bound(co.begin(), co.end(), u.mid,
                                   [](const Cluster& v, double m) { return v.mid < m; });
        double best = std::numeric_limits<double>::infinity(), val = 0;
        for (auto jt : {it, it == co.begin() ? it : it - 1})
          if (jt != co.end() && std::abs(jt->mid - u.mid) < best) {
            best = std::abs(jt->mid - u.mid);
            val = jt->dd;
          }
        if (best <= schedule.scales[c]) bin.drift = std::max(bin.drift, std::abs(val - u.dd));
      }
      break;
    }
  }
  double drift = 0;
  for (auto it = r.bins.rbegin(); it != r.bins.rend(); ++it)
    if (it->count > 0) {
      drift = it->drift;
      break;
    }
  decide(r, drift);
  if (r.witness && r.witness->a >= 0) r.witness->distance = std::abs(xs_in[r.witness->a] - xs_in[r.witness->b]);
  return r;
}

const Polyd& PiecewisePoly::piece_at(double x) const {
  if (nodes.empty() || x < nodes.front()) return left;
  if (x >= nodes.back()) return right;
  auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
  return pieces[static_cast<std::size_t>(it - nodes.begin()) - 1];
}

double PiecewisePoly::operator()(double x) const {
  VectorXd v(1);
  v(0) = x;
  return eval(piece_at(x), v);
}

VectorXd PiecewisePoly::jet(double x, int p) const {
  VectorXd v(1);
  v(0) = x;
  const Polyd& P = piece_at(x);
  if (p > P.p()) throw std::invalid_argument("PiecewisePoly::jet: order exceeds piece degree");
  return rebase(P, v).coeffs.head(p + 1);
}

Polyd hermite_piece(double x0, const VectorXd& j0, double x1, const VectorXd& j1) {
  const int p = static_cast<int>(j0.size()) - 1;
  const int deg = 2 * p + 1;
  const double h = x1 - x0;
  if (h == 0) throw std::invalid_argument("hermite_piece: coincident nodes");
  JetSignature sig(1, deg);
  VectorXd c = VectorXd::Zero(deg + 1);
  c.head(p + 1) = j0;
  // derivative m at x1: sum_{k>=m} c_k h^{k-m}/(k-m)!
  auto w = [&](int k, int m) {
    double f = 1;
    for (int i = 2; i <= k - m; ++i) f *= i;
    return std::pow(h, k - m) / f;
  };
  MatrixXd A(p + 1, p + 1);
  VectorXd rhs(p + 1);
  for (int m = 0; m <= p; ++m) {
    rhs(m) = j1(m);
    for (int k = m; k <= p; ++k) rhs(m) -= c(k) * w(k, m);
    for (int k = p + 1; k <= deg; ++k) A(m, k - p - 1) = w(k, m);
  }
  c.tail(p + 1) = A.fullPivLu().solve(rhs);
  VectorXd ctr(1);
  ctr(0) = x0;
  return Polyd(sig, ctr, c);
}

PiecewisePoly extend_1d(const WhitneyField& F, const std::optional<Schedule>& schedule, const ModulusOptions& opt) {
  if (F.sig.n() != 1) throw std::invalid_argument("extend_1d: field must live on R");
  if (F.size() < 1) throw std::invalid_argument("extend_1d: empty field");
  const int p = F.sig.p();
  std::vector<int> ord(F.size());
  std::iota(ord.begin(), ord.end(), 0);
  std::sort(ord.begin(), ord.end(), [&](int a, int b) { return F.points(0, a) < F.points(0, b); });
  for (std::size_t i = 1; i < ord.size(); ++i)
    if (F.points(0, ord[i]) == F.points(0, ord[i - 1])) throw std::invalid_argument("extend_1d: duplicate nodes");

  if (F.size() >= 2) {
    Schedule s;
    if (schedule) {
      s = *schedule;
    } else {
      const double span = F.points(0, ord.back()) - F.points(0, ord.front());
      s = Schedule::geometric(span, 8);
    }
    const ModulusReport rep = whitney_check(F, s, opt);
    if (rep.verdict == Verdict::fail) throw std::domain_error("extend_1d: field fails the Whitney check");
  }

  PiecewisePoly out;
  const int deg = 2 * p + 1;
  for (int i : ord) out.nodes.push_back(F.points(0, i));
  for (std::size_t i = 0; i + 1 < ord.size(); ++i)
    out.pieces.push_back(hermite_piece(out.nodes[i], F.jets.col(ord[i]), out.nodes[i + 1], F.jets.col(ord[i + 1])));
  out.left = raise(taylor_poly(F, ord.front()), deg);
  out.right = raise(taylor_poly(F, ord.back()), deg);
  return out;
}

}  // namespace wj
