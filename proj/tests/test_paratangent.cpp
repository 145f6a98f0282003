#include "support.hpp"

#include "wj/paratangent.hpp"
#include "wj/scenes.hpp"

#include <doctest.h>

using namespace wjtest;

namespace {

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

VectorXd values(const MatrixXd& X, double (*f)(double)) {
  VectorXd v(X.cols());
  for (Eigen::Index i = 0; i < X.cols(); ++i) v(i) = f(X(0, i));
  return v;
}

Subspaced span_of(const MatrixXd& M) { return subspace_span<double>(M); }

// local coordinates at a of the jet functional xi
VectorXd local(const JetDuald& xi, const VectorXd& a) { return recenter(xi, a).coords; }

DeltaConfig config(int p, const Schedule& s = Schedule::geometric(0.2, 8), int k = 1) {
  DeltaConfig c;
  c.p = p;
  c.k = k;
  c.schedule = s;
  return c;
}

const Cloud& segment() {
  static const Cloud c = sample(scene_segment(), 0.01);
  return c;
}

}  // namespace

TEST_CASE("secant directions") {
  const Schedule s = Schedule::geometric(0.2, 8);
  MatrixXd L(2, 101);
  const Eigen::Vector2d u(0.6, 0.8);
  for (int i = 0; i < 101; ++i) L.col(i) = (-1 + 0.02 * i) * u;
  const Bundled B = secant_ptg(L, s);
  const int o = nearest(L, Eigen::Vector2d::Zero());
  CHECK(B.fibers[o].rank() == 1);
  CHECK(containment_angle(B.fibers[o], span_of(u)) < 1e-3);

  const Cloud g = sample(scene_graph_abs(), 0.01);
  CHECK(secant_ptg(g.points, s).fibers[nearest(g.points, Eigen::Vector2d::Zero())].rank() == 2);

  CHECK(secant_ptg(MatrixXd::Zero(2, 1), s).fibers[0].rank() == 0);
}

TEST_CASE("order-1 paratangent bundle") {
  const Schedule s = Schedule::geometric(0.2, 8);
  const Cloud par = sample(scene_parabola(), 0.01);
  const Tau1Result t = tau1(par.points, s);
  CHECK(t.trace.stabilized);
  for (int a = 0; a < t.bundle.size(); ++a) {
    REQUIRE(t.bundle.fibers[a].rank() == 1);
    const double x = par.points(0, a);
    CHECK(containment_angle(t.bundle.fibers[a], span_of(vec({1, 2 * x}))) < 0.05);
  }

  const Tau1Result seg = tau1(segment().points, s);
  for (int d : seg.bundle.dims()) CHECK(d == 1);

  const Cloud cusp = sample(scene_cusp(), 0.01);
  const Tau1Result c = tau1(cusp.points, s);
  const int o = nearest(cusp.points, Eigen::Vector2d::Zero());
  // pairs (t^2, t^3), (t^2, -t^3) give vertical secants at the cusp point
  CHECK(c.bundle.fibers[o].rank() == 2);
  const int off = nearest(cusp.points, vec({0.25, 0.125}));
  CHECK(c.bundle.fibers[off].rank() == 1);
  CHECK(containment_angle(c.bundle.fibers[off], span_of(vec({2 * 0.5, 3 * 0.25}))) < 0.05);
}

TEST_CASE("order-1 function test") {
  const Schedule s = Schedule::geometric(0.2, 8);
  const MatrixXd& X = segment().points;
  const int o = nearest(X, vec({0}));

  const Tau1FunctionResult a = tau1_function_test(values(X, [](double x) { return std::abs(x); }), X, s);
  CHECK(a.verdict.is_function == Verdict::fail);
  REQUIRE(a.verdict.witness);
  CHECK(a.verdict.witness->point == o);
  CHECK(a.verdict.witness->base_norm < 1e-6);

  CHECK(tau1_function_test(values(X, [](double x) { return 0.3 - 2 * x; }), X, s).verdict.is_function ==
        Verdict::pass);
  // x^2 data: function here and a Whitney field for the check
  const VectorXd sq = values(X, [](double x) { return x * x; });
  CHECK(tau1_function_test(sq, X, s).verdict.is_function == Verdict::pass);
  MatrixXd J(2, X.cols());
  J.row(0) = sq.transpose();
  J.row(1) = 2 * X.row(0);
  // quotients at spacing 0.01 are about the bin scale, above eps_mod: no decision either way
  CHECK(whitney_check(WhitneyField(JetSignature(1, 1), X, J), Schedule::geometric(0.05, 6)).verdict != Verdict::fail);
}

TEST_CASE("constraint handling") {
  const VectorXd a = vec({0.1, 0.2}), b = vec({0.4, -0.2});
  const double h = (b - a).norm();
  for (int p = 1; p <= 3; ++p) {
    JetSignature s(2, p);
    for (int i = 0; i < s.dim(); ++i) {
      JetDuald eta = deriv_functional<double>(s[i], b, s);
      eta.coords /= h;
      CHECK(constraint_value(eta, a, b) == doctest::Approx(std::pow(h, p - s.order_of(i) - 1)));
    }
  }
}

TEST_CASE("pairwise constraint on the zigzag pairs") {
  // xi_0 = delta_{x_j} / (x_j - x_{j+1}) at a_0 = x_j, xi_1 = delta_{x_{j+1}} / (x_j - x_{j+1}) at a_1 = x_{j+1}
  const Zigzag z = zigzag_sequence();
  JetSignature s(1, 1);
  double pairwise = 0, symmetric_prev = 0;
  bool symmetric_grows = true;
  for (int j = 10; j < 1400; j += 10) {
    const VectorXd x0 = vec({z.x[j]}), x1 = vec({z.x[j + 1]}), origin = vec({0});
    const double h = z.x[j] - z.x[j + 1];
    const JetDuald xi0 = (1 / h) * delta_functional<double>(x0, s);
    const JetDuald xi1 = (1 / h) * delta_functional<double>(x1, s);
    pairwise = std::max({pairwise, constraint_value(xi0, x0, x0), constraint_value(xi1, x0, x1)});
    const double sym = std::max(constraint_value(xi0, origin, x0), constraint_value(xi1, origin, x1));
    symmetric_grows = symmetric_grows && sym > symmetric_prev;
    symmetric_prev = sym;
  }
  CHECK(pairwise == doctest::Approx(1));
  CHECK(symmetric_grows);
  CHECK(symmetric_prev > 100);
}

TEST_CASE("one refinement step") {
  const Bundled single = delta_seed(MatrixXd::Zero(2, 1), 2);
  const Bundled r = delta_refine(single, config(2));
  CHECK(r.fibers[0].rank() == 1);
  CHECK(same_subspace(r.fibers[0], single.fibers[0], 1e-7));

  // from the delta seed on [-1, 1], derivative functionals appear at interior points
  const MatrixXd& X = segment().points;
  const Bundled E = delta_refine(delta_seed(X, 1), config(1));
  int interior = 0, with_derivative = 0;
  for (int a = 0; a < E.size(); ++a) {
    if (std::abs(X(0, a)) > 0.8) continue;
    ++interior;
    const VectorXd d = local(deriv_functional<double>({1}, X.col(a), JetSignature(1, 1)), X.col(a));
    if (E.fibers[a].reject(d).norm() < 1e-3) ++with_derivative;
  }
  CHECK(with_derivative == interior);
}

TEST_CASE("paratangent bundle") {
  const TauResult one = tau_p(MatrixXd::Zero(2, 1), config(2));
  CHECK(one.bundle.fibers[0].rank() == 1);
  CHECK(one.stabilized);

  const MatrixXd& X = segment().points;
  for (int p = 1; p <= 3; ++p) {
    const TauResult t = tau_p(X, config(p));
    CHECK(t.stabilized);
    CHECK(t.trace.iterations <= 2 * JetSignature(1, p).dim());
    int full = 0;
    for (int d : t.bundle.dims()) full += d == p + 1;
    CHECK(full == t.bundle.size());
    // seed preservation
    for (int a = 0; a < t.bundle.size(); a += 17) CHECK(t.bundle.fibers[a].reject(VectorXd::Unit(p + 1, 0)).norm() < 1e-8);
  }

  // pairs vs triples on the union of two parabolas through 0
  const Cloud u = sample(scene_parabola_union(1), 0.01);
  const int o = nearest(u.points, Eigen::Vector2d::Zero());
  const TauResult k1 = tau_p(u.points, config(1, Schedule::geometric(0.2, 8), 1));
  const TauResult k2 = tau_p(u.points, config(1, Schedule::geometric(0.2, 8), 2));
  for (int a = 0; a < k1.bundle.size(); ++a) CHECK(k1.bundle.fibers[a].rank() <= k2.bundle.fibers[a].rank());
  CHECK(k1.bundle.fibers[o].rank() == 3);
}

TEST_CASE("extension criterion") {
  const MatrixXd& X = segment().points;
  const int o = nearest(X, vec({0}));

  const NablaResult sq = nabla_p(values(X, [](double x) { return x * x; }), X, config(2));
  CHECK(sq.verdict.is_function == Verdict::pass);
  CHECK(sq.verdict.scale_robust);

  const NablaResult ab = nabla_p(values(X, [](double x) { return std::abs(x); }), X, config(1));
  CHECK(ab.verdict.is_function == Verdict::fail);
  REQUIRE(ab.verdict.witness);
  CHECK(ab.verdict.witness->point == o);
  CHECK(ab.verdict.witness->base_norm < 1e-6);
  CHECK(ab.verdict.witness->vertical > 1 - 1e-6);

  const NablaResult zero = nabla_p(VectorXd::Zero(X.cols()), X, config(1));
  CHECK(zero.verdict.is_function == Verdict::pass);
  const FieldExtraction zf = field_from_nabla(zero.bundle);
  CHECK_FALSE(zf.partial);
  CHECK(zf.field.jets.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("values on the fiber") {
  std::mt19937_64 rng(31);
  const MatrixXd& X = segment().points;
  const Polyd P = random_poly(rng, 1, 2);
  VectorXd f(X.cols());
  for (Eigen::Index i = 0; i < X.cols(); ++i) f(i) = eval(P, VectorXd(X.col(i)));
  const NablaResult r = nabla_p(f, X, config(2));
  REQUIRE(r.verdict.is_function == Verdict::pass);
  JetSignature s(1, 2);
  for (int a = 0; a < X.cols(); a += 20) {
    const VectorXd xa = X.col(a);
    CHECK(nabla_value(r.bundle, a, local(delta_functional<double>(xa, s), xa)).value == doctest::Approx(f(a)));
    for (int i = 0; i < s.dim(); ++i) {
      const VectorXd d = local(deriv_functional<double>(s[i], xa, s), xa);
      const double v = nabla_value(r.bundle, a, d).value;
      CHECK(v == doctest::Approx(derivative_direct(P, s[i], xa)).epsilon(1e-8));
      CHECK(nabla_value(r.bundle, a, -2.5 * d).value == doctest::Approx(-2.5 * v));
    }
  }
  const FieldExtraction fx = field_from_nabla(r.bundle);
  CHECK_FALSE(fx.partial);
  const WhitneyField exact = induced_field(P, X);
  CHECK((fx.field.jets - exact.jets).cwiseAbs().maxCoeff() < 1e-8);

  // off the fiber: a thin set has no transverse derivative
  const Cloud line = sample(Scene{"line", {ParametricArc{{{-1, 2}, {0}}, 0, 1}}, {}, 4}, 0.02);
  const NablaResult lr = nabla_p(VectorXd::Zero(line.points.cols()), line.points, config(1));
  const int m = nearest(line.points, Eigen::Vector2d::Zero());
  const VectorXd dy = local(deriv_functional<double>({0, 1}, line.points.col(m), JetSignature(2, 1)), line.points.col(m));
  CHECK_THROWS_AS(nabla_value(lr.bundle, m, dy), std::domain_error);
}

TEST_CASE("field from a C^1 function") {
  const MatrixXd& X = segment().points;
  const NablaResult r = nabla_p(values(X, [](double x) { return x * std::abs(x); }), X, config(1));
  REQUIRE(r.verdict.is_function == Verdict::pass);
  const FieldExtraction fx = field_from_nabla(r.bundle);
  CHECK_FALSE(fx.partial);
  // finite-scale difference quotients: O(h), h = 0.01, away from the endpoints
  double err = 0;
  for (Eigen::Index i = 0; i < X.cols(); ++i)
    if (std::abs(X(0, i)) < 0.95) err = std::max(err, std::abs(fx.field.jets(1, i) - 2 * std::abs(X(0, i))));
  CHECK(err < 0.02);
  CHECK(whitney_check(fx.field, Schedule::geometric(0.05, 4)).verdict != Verdict::fail);
}

TEST_CASE("slices") {
  const Cloud c = sample(scene_cusp(), 0.02);
  const TauResult t = tau_p(c.points, config(2));
  const Bundled same = tau_slice(t.bundle, 2);
  for (int a = 0; a < c.points.cols(); ++a) CHECK(same_subspace(same.fibers[a], t.bundle.fibers[a], 1e-7));

  Bundled full(c.points, 6, std::make_shared<JetFrame>(JetSignature(2, 2), 0));
  for (auto& f : full.fibers) f = span_of(MatrixXd::Identity(6, 6));
  for (int d : tau_slice(full, 1).dims()) CHECK(d == 3);
  CHECK_THROWS(tau_slice(t.bundle, 3));

  // tangent line of the parabola at 0: delta and the tangential derivative
  const Cloud par = sample(scene_parabola(), 0.01);
  const TauResult t2 = tau_p(par.points, config(2));
  const int o = nearest(par.points, Eigen::Vector2d::Zero());
  const Subspaced f = tau_slice(t2.bundle, 1).fibers[o];
  CHECK(f.rank() == 2);
  CHECK(containment_angle(f, span_of((MatrixXd(3, 2) << 1, 0, 0, 1, 0, 0).finished())) < 1e-3);
}

TEST_CASE("polynomial surrogate of the Zariski bundle") {
  const Cloud par = sample(scene_parabola(), 0.01);
  const ZariskiResult z = zariski_Tp(par.points, 2, 2);
  REQUIRE(z.vanishing.cols() == 1);
  CHECK_FALSE(z.underdetermined);
  // y - x^2 in scaled coordinates at the centroid
  JetSignature s(2, 2);
  Polyd q(s, VectorXd::Zero(2));
  q[{0, 1}] = 1;
  q[{2, 0}] = -2;
  const VectorXd oracle = rebase(q, z.center).coeffs.normalized();
  CHECK(std::abs(oracle.dot(z.vanishing.col(0).normalized())) > 1 - 1e-8);
  const int o = nearest(par.points, Eigen::Vector2d::Zero());
  CHECK(z.bundle.fibers[o].rank() == 5);

  const Cloud disk = sample(scene_disk(), 0.1);
  const ZariskiResult zd = zariski_Tp(disk.points, 2, 2);
  CHECK(zd.vanishing.cols() == 0);
  for (int d : zd.bundle.dims()) CHECK(d == 6);

  // containment at order 1 with the quadratic ideal
  const ZariskiResult z12 = zariski_Tp(par.points, 1, 2);
  const TauResult t1 = tau_p(par.points, config(1));
  for (int a = 0; a < par.points.cols(); ++a) {
    CHECK(z12.bundle.fibers[a].rank() == 2);
    // one-sided neighborhoods near the ends carry the O(h) curvature error of order-1 quotients
    if (std::abs(par.points(0, a)) < 0.95) CHECK(containment_angle(z12.bundle.fibers[a], t1.bundle.fibers[a]) < 1e-3);
  }
  CHECK(zariski_Tp(MatrixXd::Zero(2, 3), 1, 2).underdetermined);
}

TEST_CASE("stability probe") {
  const Cloud disk = sample(scene_disk(), 0.1);
  const ProbeTable fat = stability_probe(disk.points, Eigen::Vector2d::Zero(), 2, 4);
  CHECK(fat.dims == std::vector<int>{6, 6, 6});
  CHECK(fat.monotone);
  CHECK(fat.first_stable == 2);

  const Cloud par = sample(scene_parabola(), 0.01);
  const ProbeTable pt = stability_probe(par.points, Eigen::Vector2d::Zero(), 2, 5);
  CHECK(pt.q == std::vector<int>{2, 3, 4, 5});
  CHECK(pt.dims == std::vector<int>{5, 3, 3, 3});
  CHECK(pt.monotone);
  CHECK(pt.first_stable == 3);

  const Cloud cusp = sample(scene_cusp(), 0.01);
  const ProbeTable ct = stability_probe(cusp.points, Eigen::Vector2d::Zero(), 2, 5);
  CHECK(ct.monotone);
  // y^2 - x^3 enters at q = 3; its multiples vanish to order 3 at 0
  CHECK(ct.dims == std::vector<int>{6, 5, 5, 5});
  CHECK(ct.first_stable == 3);
}

TEST_CASE("pushforward of bundles") {
  const Schedule s = Schedule::geometric(0.2, 8);
  const MatrixXd& T = segment().points;
  JetSignature s1(1, 1);
  const TauResult tY = tau_p(T, config(1));

  std::vector<MapJetd> id;
  for (Eigen::Index i = 0; i < T.cols(); ++i) id.emplace_back(s1, T.col(i), std::vector<Polyd>{Polyd(s1, T.col(i), vec({T(0, i), 1}))});
  CHECK(pushforward_bundle(id, tY.bundle, tY.bundle, 1e-12).pass);

  // t -> (t, t^2) from [-1/2, 1/2] into the parabola over [-1, 1]
  const MatrixXd U = grid_1d(-1, 1, 4001);
  MatrixXd P(2, U.cols());
  P << U, U.array().square().matrix();
  const TauResult tX = tau_p(P, config(1, Schedule::geometric(0.05, 7)));
  const MatrixXd Yt = U.middleCols(1000, 2001);
  const TauResult tYt = tau_p(Yt, config(1, Schedule::geometric(0.05, 7)));
  std::vector<MapJetd> phi;
  for (Eigen::Index i = 0; i < Yt.cols(); ++i) {
    const double t = Yt(0, i);
    phi.emplace_back(s1, Yt.col(i),
                     std::vector<Polyd>{Polyd(s1, Yt.col(i), vec({t, 1})), Polyd(s1, Yt.col(i), vec({t * t, 2 * t}))});
  }
  const MorphismReport rep = pushforward_bundle(phi, tYt.bundle, tX.bundle, 1e-12, 1e-3, Schedule::geometric(0.05, 7));
  CHECK(rep.pass);
  CHECK(rep.boundedness_per_scale.size() == 7);
  const int i0 = 400;
  const JetDuald img = pushforward(phi[i0], deriv_functional<double>({1}, Yt.col(i0), s1));
  CHECK(tX.bundle.fibers[i0 + 1000].reject(local(img, P.col(i0 + 1000))).norm() < 1e-3);

  // constant map onto a point
  const TauResult tp = tau_p(MatrixXd::Zero(2, 1), config(1));
  std::vector<MapJetd> cst;
  for (Eigen::Index i = 0; i < T.cols(); ++i)
    cst.emplace_back(s1, T.col(i), std::vector<Polyd>{Polyd(s1, T.col(i), vec({0, 0})), Polyd(s1, T.col(i), vec({0, 0}))});
  CHECK(pushforward_bundle(cst, tY.bundle, tp.bundle, 1e-12).pass);
  const JetDuald pd = pushforward(cst[5], delta_functional<double>(T.col(5), s1));
  CHECK((pd.coords - vec({1, 0, 0})).norm() < 1e-15);

  std::vector<MapJetd> off = cst;
  for (auto& m : off) m.components[0].coeffs(0) = 3;
  CHECK_THROWS_AS(pushforward_bundle(off, tY.bundle, tp.bundle, 1e-3), std::invalid_argument);
}

TEST_CASE("formal composites") {
  std::mt19937_64 rng(32);
  JetSignature s1(1, 2), s2(2, 2);
  std::vector<MapJetd> phi;
  std::vector<Polyd> g;
  const Polyd Q = random_poly(rng, 2, 2);
  const std::vector<double> ts = {-0.5, 0.0, 0.25, 0.5};
  for (double t : ts) {
    const VectorXd b = vec({t});
    phi.emplace_back(s1, b, std::vector<Polyd>{Polyd(s1, b, vec({t, 1, 0})), Polyd(s1, b, vec({t * t, 2 * t, 2}))});
    g.push_back(pullback(phi.back(), Q));
  }
  const VectorXd a = vec({0.25, 0.0625});
  const CompositeResult ok = composite_flat_test(g, phi, a, 2, 1e-12);
  CHECK(ok.feasible);
  CHECK(ok.residual < 1e-12);
  CHECK(ok.fiber == std::vector<int>{2});
  CHECK((pullback(phi[2], ok.P).coeffs - g[2].coeffs).norm() < 1e-12);

  std::vector<Polyd> zero;
  for (double t : ts) zero.emplace_back(s1, vec({t}));
  const CompositeResult z = composite_flat_test(zero, phi, a, 2, 1e-12);
  CHECK(z.feasible);
  CHECK(z.P.coeffs.norm() < 1e-14);

  // phi(t) = t^2, g(t) = t at a = 0, p = 1: g'(0) = 1 cannot come from P(t^2)
  JetSignature q1(1, 1);
  std::vector<MapJetd> sq = {MapJetd(q1, vec({0}), {Polyd(q1, vec({0}), vec({0, 0}))})};
  std::vector<Polyd> odd = {Polyd(q1, vec({0}), vec({0, 1}))};
  const CompositeResult bad = composite_flat_test(odd, sq, vec({0}), 1, 1e-12);
  CHECK_FALSE(bad.feasible);
  CHECK(bad.residual == doctest::Approx(1));
  CHECK_THROWS(composite_flat_test(odd, sq, vec({1}), 1, 1e-12));
}
