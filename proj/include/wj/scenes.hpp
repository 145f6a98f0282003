#pragma once

#include "wj/poly.hpp"
#include "wj/whitney.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace wj {

// t -> (coeffs[i](t))_i on [t0, t1]; coeffs[i][d] multiplies t^d, degree <= 6.
struct ParametricArc {
  std::vector<std::vector<double>> coeffs;
  double t0 = 0, t1 = 1;
  int dim() const { return static_cast<int>(coeffs.size()); }
  VectorXd eval(double t) const;
};

// center + direction / j for j = 1..count, plus the limit point when include_limit.
struct PointSequence {
  VectorXd center, direction;
  int count = 30;
  bool include_limit = true;
};

// Ball or axis box, filled by a jittered grid of cell size delta / sqrt(n).
struct Region {
  enum class Shape { ball, box } shape = Shape::ball;
  VectorXd center;
  double radius = 1;
  VectorXd lo, hi;
  int dim() const { return static_cast<int>(shape == Shape::ball ? center.size() : lo.size()); }
  bool contains(const VectorXd& x) const;
};

struct RawCloud {
  MatrixXd points;
};

using Component = std::variant<ParametricArc, PointSequence, Region, RawCloud>;

struct Scene {
  std::string name;
  std::vector<Component> components;
  std::vector<VectorXd> markers;  // accumulation points needing geometric refinement
  int refine_levels = 4;
  int dim() const;
};

struct Cloud {
  std::string scene;
  double scale = 0;
  std::uint64_t seed = 0;
  MatrixXd points;  // n x N
};

// Arcs: spacing <= delta, and delta 2^-j within distance 2^-j of a marker (j <= refine_levels).
// Regions: jittered grid driven by seed. Exact duplicates are dropped.
Cloud sample(const Scene& scene, double delta, std::uint64_t seed = 0);

Scene scene_segment();       // [-1, 1]
Scene scene_unit_segment();  // [0, 1]
Scene scene_disk(double radius = 1);
Scene scene_graph_abs();      // (t, |t|), t in [-1, 1]
Scene scene_cusp();           // (t^2, t^3), t in [-1, 1]
Scene scene_half_parabola();  // (t, t^2), t in [0, 1]
Scene scene_parabola();       // (t, t^2), t in [-1, 1]
Scene scene_point_sequence(int count = 30);
Scene scene_parabola_union(int p);  // y = i x^2, i = 0..p, x in [-1, 1]

struct Zigzag {
  std::vector<double> x, y;  // x[0] = 1
};

// Alternating slope +-2 lines through (x_j, y_j) meeting y = -x^2 (odd j) or y = x^2 (even j), x > 0.
Zigzag zigzag_sequence(double x_min = 1e-6, int max_terms = 1500);
Scene scene_zigzag(const Zigzag& z);
// Order-1 field on {0} U {x_j}: F^0(0) = 0, F^0(x_j) = y_j, F^1 = 0.
WhitneyField zigzag_field(const Zigzag& z);

std::vector<std::string> builtin_scene_names();
// Throws std::invalid_argument on an unknown name; p only affects parabola_union.
Scene builtin_scene(const std::string& name, int p = 1);

}  // namespace wj
