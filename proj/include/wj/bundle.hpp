#pragma once

#include "wj/neighbors.hpp"
#include "wj/schedule.hpp"
#include "wj/subspace.hpp"

#include <functional>
#include <memory>
#include <random>
#include <string>

namespace wj {

// How fiber coordinates at one base point relate to those at another. Bundles
// of a fixed vector space use the identity; jet bundles store each fiber in
// local coordinates at its own base point.
template <typename Scalar>
struct FiberFrame {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  virtual ~FiberFrame() = default;
  virtual std::string name() const = 0;
  // matrix taking coordinates at `from` to coordinates at `to`
  virtual Mat transport(const Eigen::VectorXd& from, const Eigen::VectorXd& to) const = 0;
};

template <typename Scalar>
struct Bundle {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Eigen::MatrixXd points;  // n x N base points
  Eigen::Index ambient = 0;
  std::vector<Subspace<Scalar>> fibers;
  std::shared_ptr<const FiberFrame<Scalar>> frame;  // null: fixed coordinates

  Bundle() = default;
  Bundle(Eigen::MatrixXd pts, Eigen::Index r, std::shared_ptr<const FiberFrame<Scalar>> f = nullptr)
      : points(std::move(pts)), ambient(r), fibers(points.cols(), Subspace<Scalar>(r)), frame(std::move(f)) {}

  int size() const { return static_cast<int>(points.cols()); }
  Eigen::VectorXd point(int i) const { return points.col(i); }
  std::vector<int> dims() const {
    std::vector<int> d;
    for (const auto& f : fibers) d.push_back(static_cast<int>(f.rank()));
    return d;
  }
  Mat transport(int from, int to) const {
    if (!frame) return Mat::Identity(ambient, ambient);
    return frame->transport(point(from), point(to));
  }
};

using Bundled = Bundle<double>;

template <typename Scalar>
struct GlaeserOp {
  std::string name;
  std::function<Bundle<Scalar>(const Bundle<Scalar>&)> apply;
  // fibers of apply(E) at a depend only on E over the closed ball B(a, locality_radius)
  double locality_radius = 0;
};

struct SaturationTrace {
  std::vector<std::vector<int>> dims;  // dims[i][a] = dim rho^i(E)_a, i = 0 is the input
  int iterations = 0;
  int cap = 0;
  bool stabilized = false;
  double last_drift = 0;
};

template <typename Scalar>
struct SaturationResult {
  Bundle<Scalar> bundle;
  SaturationTrace trace;
};

struct SaturateOptions {
  double theta_tol = 1e-3;
  int max_iterations = -1;  // default 2r
};

// Iterate rho until an application changes no fiber (dimension equal and
// principal-angle drift below theta_tol) or 2r applications have been made.
template <typename Scalar>
SaturationResult<Scalar> saturate(const Bundle<Scalar>& E, const GlaeserOp<Scalar>& rho,
                                  const SaturateOptions& opt = {}) {
  SaturationResult<Scalar> out{E, {}};
  auto& tr = out.trace;
  tr.cap = opt.max_iterations >= 0 ? opt.max_iterations : static_cast<int>(2 * E.ambient);
  tr.dims.push_back(E.dims());
  for (int it = 0; it < tr.cap; ++it) {
    Bundle<Scalar> next = rho.apply(out.bundle);
    if (next.size() != out.bundle.size() || next.ambient != out.bundle.ambient)
      throw std::logic_error("saturate: operation changed the bundle shape");
    ++tr.iterations;
    bool same = true;
    double drift = 0;
    const auto prev = tr.dims.back();
    for (int a = 0; a < next.size(); ++a) {
      const int d = static_cast<int>(next.fibers[a].rank());
      if (d < prev[a]) throw std::logic_error("saturate: fiber dimension decreased at point " + std::to_string(a));
      if (d != prev[a]) {
        same = false;
      } else {
        drift = std::max<double>(drift, max_principal_angle(next.fibers[a], out.bundle.fibers[a]));
      }
    }
    tr.dims.push_back(next.dims());
    tr.last_drift = drift;
    out.bundle = std::move(next);
    if (same && drift < opt.theta_tol) {
      tr.stabilized = true;
      break;
    }
  }
  return out;
}

struct AxiomReport {
  bool containment_ok = true;
  int containment_witness = -1;
  double containment_angle = 0;
  bool locality_ok = true;
  int locality_witness = -1;
  double locality_angle = 0;
  int probes = 0;
};

// Containment E_a in rho(E)_a at every point; locality probed by replacing the
// fibers outside B(a, R) with random subspaces and comparing rho(E)_a.
template <typename Scalar>
AxiomReport glaeser_axiom_check(const GlaeserOp<Scalar>& rho, const Bundle<Scalar>& E, double theta_tol = 1e-3,
                                int probes = 3, unsigned seed = 7) {
  AxiomReport rep;
  const Bundle<Scalar> R = rho.apply(E);
  for (int a = 0; a < E.size(); ++a) {
    const Scalar ang = containment_angle(R.fibers[a], E.fibers[a]);
    if (!(ang < theta_tol)) {
      if (rep.containment_ok || ang > rep.containment_angle) {
        rep.containment_witness = a;
        rep.containment_angle = ang;
      }
      rep.containment_ok = false;
    }
  }
  if (E.size() == 0) return rep;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> pick(0, E.size() - 1);
  for (int t = 0; t < probes; ++t) {
    const int a = pick(rng);
    Bundle<Scalar> P = E;
    for (int b = 0; b < E.size(); ++b) {
      if ((E.point(b) - E.point(a)).norm() <= rho.locality_radius) continue;
      typename Bundle<Scalar>::Mat M(E.ambient, std::max<Eigen::Index>(1, E.ambient / 2));
      for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = Scalar(g(rng));
      P.fibers[b] = subspace_span<Scalar>(M);
    }
    const Bundle<Scalar> RP = rho.apply(P);
    ++rep.probes;
    const Scalar ang = max_principal_angle(RP.fibers[a], R.fibers[a]);
    if (!(ang < theta_tol)) {
      rep.locality_ok = false;
      rep.locality_witness = a;
      rep.locality_angle = ang;
    }
  }
  return rep;
}

struct UscViolation {
  int point;
  int dim;
  int limsup;
};

// For each a, the limsup estimate is the largest fiber dimension among the
// neighbors inside the finest scale of `schedule` that contains any neighbor.
template <typename Scalar>
std::vector<UscViolation> usc_probe(const Bundle<Scalar>& E, const Schedule& schedule) {
  std::vector<UscViolation> out;
  if (schedule.empty() || E.size() == 0) return out;
  NeighborGraph G(E.points, schedule.coarsest(), E.size());
  for (int a = 0; a < E.size(); ++a) {
    int cnt = 0;
    for (auto it = schedule.scales.rbegin(); it != schedule.scales.rend() && cnt == 0; ++it) cnt = G.count_within(a, *it);
    if (cnt == 0) continue;
    int ls = 0;
    for (int j = 0; j < cnt; ++j) ls = std::max<int>(ls, E.fibers[G.lists[a][j].index].rank());
    if (ls > E.fibers[a].rank()) out.push_back({a, static_cast<int>(E.fibers[a].rank()), ls});
  }
  return out;
}

}  // namespace wj
