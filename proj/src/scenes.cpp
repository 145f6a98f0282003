#include "wj/scenes.hpp"

#include "wj/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace wj {

VectorXd ParametricArc::eval(double t) const {
  VectorXd x(dim());
  for (int i = 0; i < dim(); ++i) {
    double v = 0;
    for (auto it = coeffs[i].rbegin(); it != coeffs[i].rend(); ++it) v = v * t + *it;
    x(i) = v;
  }
  return x;
}

bool Region::contains(const VectorXd& x) const {
  if (shape == Shape::ball) return (x - center).norm() <= radius;
  return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
}

int Scene::dim() const {
  for (const auto& c : components) {
    const int d = std::visit(
        [](const auto& v) -> int {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, ParametricArc>) return v.dim();
          else if constexpr (std::is_same_v<T, PointSequence>) return static_cast<int>(v.center.size());
          else if constexpr (std::is_same_v<T, Region>) return v.dim();
          else return static_cast<int>(v.points.rows());
        },
        c);
    if (d > 0) return d;
  }
  return 0;
}

namespace {

// Cumulative arc length on a fine parameter grid.
struct ArcTable {
  std::vector<double> t, s;
};

ArcTable arc_table(const ParametricArc& arc) {
  const int m = 1 << 16;
  ArcTable tb;
  tb.t.resize(m + 1);
  tb.s.resize(m + 1);
  VectorXd prev = arc.eval(arc.t0);
  tb.t[0] = arc.t0;
  tb.s[0] = 0;
  for (int i = 1; i <= m; ++i) {
    tb.t[i] = arc.t0 + (arc.t1 - arc.t0) * i / m;
    const VectorXd x = arc.eval(tb.t[i]);
    tb.s[i] = tb.s[i - 1] + (x - prev).norm();
    prev = x;
  }
  return tb;
}

double param_at(const ArcTable& tb, double s) {
  auto it = std::lower_bound(tb.s.begin(), tb.s.end(), s);
  if (it == tb.s.begin()) return tb.t.front();
  if (it == tb.s.end()) return tb.t.back();
  const std::size_t i = it - tb.s.begin();
  const double ds = tb.s[i] - tb.s[i - 1];
  const double w = ds > 0 ? (s - tb.s[i - 1]) / ds : 0;
  return tb.t[i - 1] + w * (tb.t[i] - tb.t[i - 1]);
}

// Point at arc length s; the ends use the exact parameters.
VectorXd point_at(const ParametricArc& arc, const ArcTable& tb, long i, long k) {
  if (i == 0) return arc.eval(arc.t0);
  if (i == k) return arc.eval(arc.t1);
  return arc.eval(param_at(tb, tb.s.back() * (static_cast<double>(i) / static_cast<double>(k))));
}

// Nested equal arc-length grids, so refined points never nearly coincide with coarse ones.
void sample_arc(const ParametricArc& arc, const Scene& sc, double delta, std::vector<VectorXd>& out) {
  const ArcTable tb = arc_table(arc);
  const double L = tb.s.back();
  if (!(L > 0)) throw std::invalid_argument("sample: degenerate arc");
  const long k = std::max(1L, static_cast<long>(std::ceil(L / delta - 1e-9)));
  for (long i = 0; i <= k; ++i) out.push_back(point_at(arc, tb, i, k));
  for (const auto& m : sc.markers) {
    if (m.size() != arc.dim()) continue;
    for (int j = 1; j <= sc.refine_levels; ++j) {
      const double r = std::ldexp(1.0, -j);
      const long kj = k << j;
      for (long i = 0; i <= kj; ++i) {
        if (i % (1L << j) == 0) continue;
        const VectorXd x = point_at(arc, tb, i, kj);
        if ((x - m).norm() <= r) out.push_back(x);
      }
    }
  }
}

void sample_region(const Region& rg, double delta, std::mt19937_64& rng, std::vector<VectorXd>& out) {
  const int n = rg.dim();
  if (n < 1) throw std::invalid_argument("sample: region without dimension");
  VectorXd lo = rg.shape == Region::Shape::ball ? VectorXd(rg.center.array() - rg.radius) : rg.lo;
  VectorXd hi = rg.shape == Region::Shape::ball ? VectorXd(rg.center.array() + rg.radius) : rg.hi;
  const double cell = delta / std::sqrt(static_cast<double>(n));
  std::vector<int> counts(n);
  long total = 1;
  for (int i = 0; i < n; ++i) {
    counts[i] = std::max(1, static_cast<int>(std::ceil((hi(i) - lo(i)) / cell)));
    total *= counts[i];
  }
  if (total > 20'000'000) throw std::invalid_argument("sample: region grid too fine");
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<int> idx(n, 0);
  for (long c = 0; c < total; ++c) {
    long r = c;
    for (int i = 0; i < n; ++i) {
      idx[i] = static_cast<int>(r % counts[i]);
      r /= counts[i];
    }
    VectorXd x(n);
    for (int i = 0; i < n; ++i) {
      const double w = (hi(i) - lo(i)) / counts[i];
      x(i) = lo(i) + w * (idx[i] + u(rng));
    }
    if (rg.contains(x)) out.push_back(x);
  }
}

}  // namespace

Cloud sample(const Scene& scene, double delta, std::uint64_t seed) {
  if (!(delta > 0)) throw std::invalid_argument("sample: scale must be positive");
  const int n = scene.dim();
  std::mt19937_64 rng(seed);
  std::vector<VectorXd> pts;
  for (const auto& c : scene.components) {
    if (const auto* a = std::get_if<ParametricArc>(&c)) {
      sample_arc(*a, scene, delta, pts);
    } else if (const auto* s = std::get_if<PointSequence>(&c)) {
      if (s->include_limit) pts.push_back(s->center);
      for (int j = 1; j <= s->count; ++j) pts.push_back(s->center + s->direction / j);
    } else if (const auto* r = std::get_if<Region>(&c)) {
      sample_region(*r, delta, rng, pts);
    } else {
      const auto& rc = std::get<RawCloud>(c);
      for (int i = 0; i < rc.points.cols(); ++i) pts.push_back(rc.points.col(i));
    }
  }
  for (const auto& x : pts)
    if (x.size() != n) throw std::invalid_argument("sample: components of different dimension");
  MatrixXd all(n, pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) all.col(i) = pts[i];
  // drop duplicates, keeping the first occurrence
  std::vector<char> dup(pts.size(), 0);
  const double tol = 1e-12;
  for_each_pair_within(all, tol, [&](int i, int j, double) { dup[std::max(i, j)] = 1; });
  // zero-distance pairs are excluded by the sweep; catch them here
  std::vector<int> ord(pts.size());
  std::iota(ord.begin(), ord.end(), 0);
  std::sort(ord.begin(), ord.end(), [&](int a, int b) {
    for (int k = 0; k < n; ++k)
      if (all(k, a) != all(k, b)) return all(k, a) < all(k, b);
    return a < b;
  });
  for (std::size_t s = 1; s < ord.size(); ++s)
    if (all.col(ord[s]) == all.col(ord[s - 1])) dup[ord[s]] = 1;
  Cloud cl;
  cl.scene = scene.name;
  cl.scale = delta;
  cl.seed = seed;
  int kept = 0;
  for (char d : dup) kept += d ? 0 : 1;
  cl.points.resize(n, kept);
  int c = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (!dup[i]) cl.points.col(c++) = all.col(i);
  return cl;
}

namespace {

ParametricArc arc(std::vector<std::vector<double>> coeffs, double t0, double t1) {
  ParametricArc a;
  a.coeffs = std::move(coeffs);
  a.t0 = t0;
  a.t1 = t1;
  return a;
}

VectorXd origin(int n) { return VectorXd::Zero(n); }

}  // namespace

Scene scene_segment() { return {"segment", {arc({{0, 1}}, -1, 1)}, {}}; }
Scene scene_unit_segment() { return {"unit_segment", {arc({{0, 1}}, 0, 1)}, {}}; }

Scene scene_disk(double radius) {
  Region r;
  r.center = origin(2);
  r.radius = radius;
  return {"disk", {r}, {}};
}

Scene scene_graph_abs() {
  return {"graph_abs", {arc({{0, 1}, {0, -1}}, -1, 0), arc({{0, 1}, {0, 1}}, 0, 1)}, {origin(2)}};
}

Scene scene_cusp() { return {"cusp", {arc({{0, 0, 1}, {0, 0, 0, 1}}, -1, 1)}, {origin(2)}}; }
Scene scene_half_parabola() { return {"half_parabola", {arc({{0, 1}, {0, 0, 1}}, 0, 1)}, {origin(2)}}; }
Scene scene_parabola() { return {"parabola", {arc({{0, 1}, {0, 0, 1}}, -1, 1)}, {}}; }

Scene scene_point_sequence(int count) {
  PointSequence s;
  s.center = origin(1);
  s.direction = VectorXd::Ones(1);
  s.count = count;
  return {"point_sequence", {s}, {origin(1)}};
}

Scene scene_parabola_union(int p) {
  if (p < 1) throw std::invalid_argument("parabola_union: p >= 1 required");
  Scene s{"parabola_union", {}, {origin(2)}};
  for (int i = 0; i <= p; ++i) s.components.push_back(arc({{0, 1}, {0, 0, double(i)}}, -1, 1));
  return s;
}

Zigzag zigzag_sequence(double x_min, int max_terms) {
  Zigzag z;
  z.x.push_back(1);
  z.y.push_back(1);
  while (static_cast<int>(z.x.size()) < max_terms && z.x.back() >= x_min) {
    const double x = z.x.back(), y = z.y.back();
    const bool odd = z.x.size() % 2 == 1;  // current index j = size, 1-based
    // positive root where the slope +-2 line through (x, y) meets the next arc
    const double xn = odd ? -1 + std::sqrt(1 - y + 2 * x) : -1 + std::sqrt(1 + y + 2 * x);
    z.x.push_back(xn);
    z.y.push_back(odd ? -xn * xn : xn * xn);
  }
  return z;
}

Scene scene_zigzag(const Zigzag& z) {
  RawCloud rc;
  rc.points.resize(1, z.x.size() + 1);
  rc.points(0, 0) = 0;
  for (std::size_t j = 0; j < z.x.size(); ++j) rc.points(0, j + 1) = z.x[j];
  return {"zigzag", {rc}, {origin(1)}};
}

WhitneyField zigzag_field(const Zigzag& z) {
  const int N = static_cast<int>(z.x.size()) + 1;
  MatrixXd pts(1, N), jets = MatrixXd::Zero(2, N);
  pts(0, 0) = 0;
  for (int j = 1; j < N; ++j) {
    pts(0, j) = z.x[j - 1];
    jets(0, j) = z.y[j - 1];
  }
  return WhitneyField(JetSignature(1, 1), pts, jets);
}

std::vector<std::string> builtin_scene_names() {
  return {"segment",       "unit_segment", "disk",           "graph_abs",      "cusp",
          "half_parabola", "parabola",     "point_sequence", "parabola_union", "zigzag"};
}

Scene builtin_scene(const std::string& name, int p) {
  if (name == "segment") return scene_segment();
  if (name == "unit_segment") return scene_unit_segment();
  if (name == "disk") return scene_disk();
  if (name == "graph_abs") return scene_graph_abs();
  if (name == "cusp") return scene_cusp();
  if (name == "half_parabola") return scene_half_parabola();
  if (name == "parabola") return scene_parabola();
  if (name == "point_sequence") return scene_point_sequence();
  if (name == "parabola_union") return scene_parabola_union(p);
  if (name == "zigzag") return scene_zigzag(zigzag_sequence());
  throw std::invalid_argument("unknown scene '" + name + "'");
}

}  // namespace wj
