// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include "support.hpp"

#include "wj/io.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <sstream>

using namespace wjtest;

namespace {

struct Outcome {
  bool ok = true;
  std::ostringstream detail;
  std::string failures;
  void require(bool cond, const std::string& what) {
    if (cond) return;
    failures += (ok ? "" : "; ") + what;
    ok = false;
  }
};

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(v.size());
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

int nearest(const MatrixXd& X, const VectorXd& a) {
  int i = 0;
  (X.colwise() - a).colwise().squaredNorm().minCoeff(&i);
  return i;
}

VectorXd values(const MatrixXd& X, const std::function<double(const VectorXd&)>& f) {
  VectorXd v(X.cols());
  for (Eigen::Index i = 0; i < X.cols(); ++i) v(i) = f(X.col(i));
  return v;
}

std::vector<double> row(const MatrixXd& X) { return {X.data(), X.data() + X.cols()}; }

DeltaConfig config(int p, const Schedule& s, int k = 1) {
  DeltaConfig c;
  c.p = p;
  c.k = k;
  c.schedule = s;
  return c;
}

// diameter down to the closest pair, ratio 1/2
Schedule pair_schedule(const MatrixXd& X) {
  double diam = 0, closest = INFINITY;
  for (Eigen::Index i = 0; i < X.cols(); ++i)
    for (Eigen::Index j = i + 1; j < X.cols(); ++j) {
      const double d = (X.col(i) - X.col(j)).norm();
      diam = std::max(diam, d);
      if (d > 0) closest = std::min(closest, d);
    }
  return Schedule::geometric(diam, std::clamp(static_cast<int>(std::ceil(std::log2(diam / closest))) + 1, 3, 30));
}

// sampling used for scene-level criteria: arcs at 0.01, regions at 0.05 with a coarser schedule
const Schedule arc_schedule = Schedule::geometric(0.2, 8);
const Schedule disk_schedule = Schedule::geometric(0.3, 5);

const Cloud& segment() {
  static const Cloud c = sample(scene_segment(), 0.01);
  return c;
}
const Cloud& disk() {
  static const Cloud c = sample(scene_disk(), 0.05);
  return c;
}

void criterion1(Outcome& o) {
  std::mt19937_64 rng(101);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    const int n = 1 + t % 3, p = 1 + (t / 3) % 3;
    const WhitneyField F = random_field(rng, n, p, 2);
    const double r = pair_identity_residual(F, random_dual(rng, F.sig), random_dual(rng, F.sig), 0, 1);
    worst = std::max(worst, r);
  }
  o.detail << "max residual " << worst << " over 1000 draws";
  o.require(worst < 1e-9, "residual >= 1e-9");
}

void criterion2(Outcome& o) {
  const Zigzag z = zigzag_sequence();
  double x = 1, y = 1, step = 0;
  for (int j = 1; j <= 30; ++j) {
    const bool up = j % 2 == 1;
    const double nx = up ? -1 + std::sqrt(1 - (y - 2 * x)) : -1 + std::sqrt(1 + y + 2 * x);
    y = up ? -nx * nx : nx * nx;
    x = nx;
    step = std::max({step, std::abs(z.x[j] - x), std::abs(z.y[j] - y)});
  }
  o.require(step < 1e-12, "recursion differs from the quadratic-formula oracle");

  const WhitneyField F = zigzag_field(z);
  const Schedule s = pair_schedule(F.points);
  const int origin = F.find(VectorXd::Zero(1));
  const MultiIndex zero = {0};
  // per bin of the schedule: max over j of delta_0(0, x_j) and of delta_0(x_{j+1}, x_j)
  const double finest_hi = s.scales[s.size() - 2], finest_lo = s.scales.back();
  double to_origin = 0, consecutive_min = INFINITY;
  std::vector<double> cons(s.size(), 0);
  std::vector<char> seen(s.size(), 0);
  for (std::size_t j = 0; j + 1 < z.x.size(); ++j) {
    const int a = F.find(vec({z.x[j]})), b = F.find(vec({z.x[j + 1]}));
    if (z.x[j] >= finest_lo && z.x[j] <= finest_hi)
      to_origin = std::max(to_origin, std::abs(delta_quotient(F, origin, a, zero)));
    const double d = z.x[j] - z.x[j + 1];
    for (std::size_t i = 0; i + 1 < s.size(); ++i)
      if (d <= s.scales[i] && d > s.scales[i + 1]) {
        cons[i] = std::max(cons[i], std::abs(delta_quotient(F, b, a, zero)));
        seen[i] = 1;
      }
  }
  for (std::size_t i = 0; i < s.size(); ++i)
    if (seen[i]) consecutive_min = std::min(consecutive_min, cons[i]);
  const ModulusReport r = whitney_check(F, s);
  o.detail << "oracle step " << step << ", finest delta_0(0,x_j) " << to_origin << ", min bin max delta_0(x_j+1,x_j) "
           << consecutive_min << ", verdict " << to_string(r.verdict);
  o.require(to_origin < 1e-3, "delta_0(0, x_j) not below 1e-3 in the finest bin");
  o.require(consecutive_min >= 0.5, "consecutive quotient below 0.5 in some bin");
  o.require(r.verdict == Verdict::fail, "whitney_check did not fail");
}

void criterion3(Outcome& o) {
  int runs = 0;
  double slowest = 0;
  for (const auto& name : builtin_scene_names())
    for (int p = 1; p <= 2; ++p) {
      const auto t0 = std::chrono::steady_clock::now();
      const Scene s = builtin_scene(name, p);
      const bool region = name == "disk";
      const Cloud c = sample(s, region ? 0.05 : 0.01);
      const TauResult t = tau_p(c.points, config(p, region ? disk_schedule : arc_schedule));
      const int r = JetSignature(c.points.rows(), p).dim();
      bool mono = true;
      for (std::size_t i = 1; i < t.trace.dims.size(); ++i)
        for (std::size_t a = 0; a < t.trace.dims[i].size(); ++a) mono = mono && t.trace.dims[i][a] >= t.trace.dims[i - 1][a];
      const std::string tag = name + " p=" + std::to_string(p);
      o.require(t.stabilized, tag + " not stabilized");
      o.require(t.trace.iterations <= 2 * r, tag + " took " + std::to_string(t.trace.iterations) + " iterations");
      o.require(mono, tag + " dims decreased");
      const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      o.require(sec < 60, tag + " slower than 60 s");
      slowest = std::max(slowest, sec);
      ++runs;
    }
  o.detail << runs << " scene/order runs, slowest " << slowest << " s";
}

// share of interior points with full fiber
double full_share(const Cloud& c, int p, const Schedule& s, double margin) {
  const TauResult t = tau_p(c.points, config(p, s));
  const int r = JetSignature(c.points.rows(), p).dim();
  int interior = 0, full = 0;
  for (int a = 0; a < t.bundle.size(); ++a) {
    if (c.points.col(a).norm() > 1 - margin) continue;
    ++interior;
    full += t.bundle.fibers[a].rank() == r;
  }
  return interior ? double(full) / interior : 0;
}

void criterion4(Outcome& o) {
  for (int p = 1; p <= 3; ++p) {
    const double share = full_share(segment(), p, arc_schedule, arc_schedule.coarsest());
    o.detail << "segment p=" << p << ": " << share << "  ";
    o.require(share >= 0.95, "segment p=" + std::to_string(p) + " below 95%");
  }
  for (int p = 1; p <= 2; ++p) {
    const double share = full_share(disk(), p, disk_schedule, disk_schedule.coarsest());
    o.detail << "disk p=" << p << ": " << share << "  ";
    o.require(share >= 0.95, "disk p=" + std::to_string(p) + " below 95%");
  }
}

void criterion5(Outcome& o) {
  std::mt19937_64 rng(105);
  int functions = 0, checks = 0, incomplete_interior = 0;
  long completes = 0, points = 0;
  double worst = 0;
  for (int t = 0; t < 50; ++t) {
    const bool on_disk = t >= 25;
    const Cloud& c = on_disk ? disk() : segment();
    const int n = static_cast<int>(c.points.rows()), p = 1 + t % 2;
    const Polyd P = random_poly(rng, n, p);
    const NablaResult r = nabla_p(values(c.points, [&](const VectorXd& x) { return eval(P, x); }), c.points,
                                  config(p, on_disk ? disk_schedule : arc_schedule));
    if (r.verdict.is_function != Verdict::pass) continue;
    ++functions;
    // boundary points may miss some D^alpha(a) at finite resolution, as in the fat-set criterion
    const FieldExtraction fx = field_from_nabla(r.bundle);
    const double margin = on_disk ? disk_schedule.coarsest() : arc_schedule.coarsest();
    for (int a = 0; a < c.points.cols(); ++a)
      if (!fx.complete[a] && c.points.col(a).norm() <= 1 - margin) ++incomplete_interior;
    const WhitneyField got = restrict_field(fx.field, fx.complete);
    MatrixXd kept(n, got.size());
    for (int a = 0, m = 0; a < c.points.cols(); ++a)
      if (fx.complete[a]) kept.col(m++) = c.points.col(a);
    completes += got.size();
    points += c.points.cols();
    worst = std::max(worst, (got.jets - induced_field(P, kept).jets).cwiseAbs().maxCoeff());
    static const Schedule seg_s = pair_schedule(segment().points), disk_s = pair_schedule(disk().points);
    checks += whitney_check(got, on_disk ? disk_s : seg_s).verdict == Verdict::pass;
  }
  o.detail << functions << "/50 is_function, complete points " << completes << "/" << points << " (interior misses "
           << incomplete_interior << "), max jet error " << worst << ", " << checks << "/50 whitney pass";
  o.require(incomplete_interior == 0, "interior point without every D^alpha");
  o.require(functions == 50, "is_function failed");
  o.require(worst < 1e-6, "jet error >= 1e-6");
  o.require(checks == 50, "whitney_check did not pass");
}

void criterion6(Outcome& o) {
  const MatrixXd& X = segment().points;
  const int origin = nearest(X, vec({0}));
  const VectorXd f = values(X, [](const VectorXd& x) { return std::abs(x(0)); });
  const Tau1FunctionResult t1 = tau1_function_test(f, X, arc_schedule);
  const NablaResult nb = nabla_p(f, X, config(1, arc_schedule));
  for (const auto* v : {&t1.verdict, &nb.verdict}) {
    const std::string tag = v == &t1.verdict ? "tau1" : "nabla";
    o.require(v->is_function == Verdict::fail, tag + " did not fail");
    o.require(v->witness && v->witness->point == origin, tag + " witness not at the origin");
    if (v->witness) {
      o.require(v->witness->base_norm < 1e-6, tag + " witness base norm >= 1e-6");
      o.detail << tag << " witness x=" << X(0, v->witness->point) << " base " << v->witness->base_norm << "  ";
    }
  }
}

void criterion7(Outcome& o) {
  const MatrixXd X = grid_1d(-1, 1, 20001);
  const Schedule s = Schedule::geometric(0.0064, 7);
  auto cubic = [](double x) { return 0.5 - x + x * x - 0.2 * x * x * x; };
  auto field = [&](int p, const std::function<VectorXd(double)>& jet) {
    MatrixXd J(p + 1, X.cols());
    for (Eigen::Index i = 0; i < X.cols(); ++i) J.col(i) = jet(X(0, i));
    return WhitneyField(JetSignature(1, p), X, J);
  };
  struct Case {
    std::string name;
    std::function<double(double)> f;
    int p;
    Verdict truth;
    std::optional<WhitneyField> induced;
  };
  std::vector<Case> cases = {
      {"cubic", cubic, 1, Verdict::pass, field(1, [&](double x) { return vec({cubic(x), -1 + 2 * x - 0.6 * x * x}); })},
      {"cubic", cubic, 2, Verdict::pass,
       field(2, [&](double x) { return vec({cubic(x), -1 + 2 * x - 0.6 * x * x, 2 - 1.2 * x}); })},
      {"|x|", [](double x) { return std::abs(x); }, 1, Verdict::fail,
       field(1, [](double x) { return vec({std::abs(x), x > 0 ? 1.0 : x < 0 ? -1.0 : 0.0}); })},
      {"|x|", [](double x) { return std::abs(x); }, 2, Verdict::fail, std::nullopt},
      {"x|x|", [](double x) { return x * std::abs(x); }, 1, Verdict::pass,
       field(1, [](double x) { return vec({x * std::abs(x), 2 * std::abs(x)}); })},
      {"x|x|", [](double x) { return x * std::abs(x); }, 2, Verdict::fail, std::nullopt},
  };
  for (const auto& c : cases) {
    std::vector<double> fs;
    for (Eigen::Index i = 0; i < X.cols(); ++i) fs.push_back(c.f(X(0, i)));
    const Verdict v = whitney_1d_check(row(X), fs, c.p, s).verdict;
    const std::string tag = c.name + " p=" + std::to_string(c.p);
    o.detail << tag << ": " << to_string(v);
    o.require(v == c.truth, tag + " 1-D verdict differs from ground truth");
    if (c.induced) {
      const Verdict w = whitney_check(*c.induced, s).verdict;
      o.detail << "/" << to_string(w);
      o.require(w == v, tag + " 1-D and Whitney verdicts differ");
    }
    o.detail << "  ";
  }
}

void criterion8(Outcome& o) {
  const Cloud par = sample(scene_parabola(), 0.002);
  const Cloud cusp = sample(scene_cusp(), 0.002);
  const Schedule s = Schedule::geometric(0.1, 7);
  double worst = 0;
  for (const Cloud* c : {&par, &cusp})
    for (int p = 1; p <= 2; ++p) {
      const TauResult t = tau_p(c->points, config(p, s));
      const ZariskiResult z = zariski_Tp(c->points, p, p);
      for (int a = 0; a < t.bundle.size(); ++a) worst = std::max(worst, containment_angle(z.bundle.fibers[a], t.bundle.fibers[a]));
    }
  o.detail << "max containment angle " << worst;
  o.require(worst < 1e-3, "containment angle >= theta_tol");

  const ZariskiResult z = zariski_Tp(par.points, 2, 2, {}, false);
  o.require(z.vanishing.cols() == 1, "parabola vanishing nullspace rank " + std::to_string(z.vanishing.cols()));
  if (z.vanishing.cols() == 1) {
    Polyd q(JetSignature(2, 2), VectorXd::Zero(2));
    q[{0, 1}] = 1;
    q[{2, 0}] = -2;
    const double cosine = std::abs(rebase(q, z.center).coeffs.normalized().dot(z.vanishing.col(0).normalized()));
    o.detail << ", cosine to y - x^2 " << std::setprecision(12) << cosine << std::setprecision(6);
    o.require(cosine > 1 - 1e-8, "vanishing polynomial is not y - x^2");
  }
  for (const Cloud* c : {&par, &cusp}) {
    const ProbeTable pt = stability_probe(c->points, Eigen::Vector2d::Zero(), 2, 5);
    o.detail << ", " << c->scene << " probe";
    for (int d : pt.dims) o.detail << " " << d;
    o.require(pt.monotone, c->scene + " probe not monotone");
  }
}

void criterion9(Outcome& o) {
  std::mt19937_64 rng(109);
  double worst = 0;
  bool deltas = true;
  for (int t = 0; t < 100; ++t) {
    const int m = 1 + t % 3, n = 1 + (t / 3) % 3, p = 1 + (t / 9) % 3;
    JetSignature S(m, p), T(n, p);
    const VectorXd b = random_vec(rng, m);
    std::vector<Polyd> comps;
    for (int i = 0; i < n; ++i) comps.push_back(random_poly(rng, m, p));
    const MapJetd phi(S, b, comps);
    const JetDuald d = pushforward(phi, delta_functional<double>(b, S));
    deltas = deltas && d.center == phi.value() && d.coords == delta_functional<double>(phi.value(), T).coords;
    for (int i = 0; i < S.dim(); ++i)
      for (int j = 0; j < T.dim(); ++j) {
        const JetDuald eta(S, b, VectorXd::Unit(S.dim(), i));
        const Polyd P(T, phi.value(), VectorXd::Unit(T.dim(), j));
        const double lhs = pair(pushforward(phi, eta), P), rhs = pair(eta, pullback(phi, P));
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
      }
  }
  o.detail << "delta_b -> delta_phi(b) exact: " << (deltas ? "yes" : "no") << ", max duality residual " << worst;
  o.require(deltas, "delta not pushed to delta");
  o.require(worst < 1e-10, "duality residual >= 1e-10");
}

// Upper bound at one coarse scale: functionals sum_i lambda_i delta_{a_i} over k-tuples near a_0 with
// |a_i - a_0|^p |lambda_i| <= 1 reach direction u at unit size iff u lies in a singular direction >= 1.
int tuple_oracle(const MatrixXd& X, int a0, int p, int k, double radius) {
  JetSignature s(X.rows(), p);
  const VectorXd a = X.col(a0);
  // ten points spread over the shell radius / 2 < |a_i - a_0| <= radius
  std::vector<int> shell, nb;
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    const double d = (X.col(i) - a).norm();
    if (d > radius / 2 && d <= radius) shell.push_back(static_cast<int>(i));
  }
  const std::size_t m = std::min<std::size_t>(shell.size(), 10);
  for (std::size_t i = 0; i < m; ++i) nb.push_back(shell[i * shell.size() / m]);
  MatrixXd reach = VectorXd::Unit(s.dim(), 0);
  std::vector<int> idx(k);
  std::function<void(int, int)> rec = [&](int depth, int start) {
    if (depth == k) {
      MatrixXd M(s.dim(), k);
      for (int i = 0; i < k; ++i) {
        const VectorXd ai = X.col(nb[idx[i]]);
        M.col(i) = recenter(delta_functional<double>(ai, s), a).coords / std::pow((ai - a).norm(), p);
        M(0, i) = 0;
      }
      Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeFullU);
      for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) >= 1 - 1e-9) {
          MatrixXd both(s.dim(), reach.cols() + 1);
          both << reach, svd.matrixU().col(i);
          reach = both;
        }
      return;
    }
    for (int j = start; j < static_cast<int>(nb.size()); ++j) {
      idx[depth] = j;
      rec(depth + 1, j + 1);
    }
  };
  rec(0, 0);
  return subspace_span<double>(reach).rank();
}

void criterion10(Outcome& o) {
  const std::vector<std::vector<int>> pins = {{3, 3}, {6, 6, 6}};
  for (int p = 1; p <= 2; ++p) {
    const Cloud c = sample(scene_parabola_union(p), 0.02);
    const int origin = nearest(c.points, Eigen::Vector2d::Zero());
    std::vector<int> dims;
    for (int k = 1; k <= p + 1; ++k) {
      dims.push_back(tau_p(c.points, config(p, arc_schedule, k)).bundle.fibers[origin].rank());
      const int bound = tuple_oracle(c.points, origin, p, k, arc_schedule.coarsest());
      o.detail << (k == 1 ? "p=" + std::to_string(p) + " oracle" : "") << " " << bound;
      o.require(dims.back() <= bound, "p=" + std::to_string(p) + " k=" + std::to_string(k) + " exceeds the tuple oracle");
      if (k > 1) o.require(dims[k - 1] >= dims[k - 2], "p=" + std::to_string(p) + " decreases in k");
    }
    o.detail << ", dims";
    for (int d : dims) o.detail << " " << d;
    o.detail << "  ";
    o.require(dims == pins[p - 1], "p=" + std::to_string(p) + " differs from the pinned table");
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"identity suite", criterion1},          {"zig-zag reproduction", criterion2},
      {"Glaeser stabilization", criterion3},   {"fat-set full fiber", criterion4},
      {"polynomial round trip", criterion5},   {"negative control", criterion6},
      {"1-D criterion concordance", criterion7}, {"Zariski containment and probe", criterion8},
      {"pushforward functoriality", criterion9}, {"k-monotonicity pins", criterion10},
  };
  const std::vector<double> budget = {10, 1, 60 * 20, 120, 120, 10, 10, 30, 10, 300};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (i != 2) o.require(sec < budget[i], "over the " + std::to_string(static_cast<int>(budget[i])) + " s budget");
    failed += !o.ok;
    const std::string text = o.detail.str() + (o.ok ? "" : " | " + o.failures);
    std::printf("%-4s %2zu %-30s %8.2f s  %s\n", o.ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), sec,
                text.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
