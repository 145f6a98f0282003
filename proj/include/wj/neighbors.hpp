#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <numeric>
#include <vector>

namespace wj {

// Calls fn(i, j, dist) once for every unordered pair i < j with 0 < dist <= r.
// Sweep over the first coordinate; fine for the sample sizes used here.
template <typename Fn>
void for_each_pair_within(const Eigen::MatrixXd& pts, double r, Fn&& fn) {
  const int N = static_cast<int>(pts.cols());
  std::vector<int> ord(N);
  std::iota(ord.begin(), ord.end(), 0);
  std::sort(ord.begin(), ord.end(), [&](int a, int b) {
    return pts(0, a) < pts(0, b) || (pts(0, a) == pts(0, b) && a < b);
  });
  for (int s = 0; s < N; ++s) {
    const int i = ord[s];
    for (int t = s + 1; t < N; ++t) {
      const int j = ord[t];
      if (pts(0, j) - pts(0, i) > r) break;
      const double d = (pts.col(i) - pts.col(j)).norm();
      if (d > 0 && d <= r) fn(std::min(i, j), std::max(i, j), d);
    }
  }
}

struct Neighbor {
  int index;
  double dist;
};

// For every point, up to `cap` nearest other points within `radius`, nearest
// first (ties broken by index). `capped[i]` records that the cap truncated.
struct NeighborGraph {
  std::vector<std::vector<Neighbor>> lists;
  std::vector<char> capped;

  NeighborGraph() = default;
  NeighborGraph(const Eigen::MatrixXd& pts, double radius, int cap) {
    const int N = static_cast<int>(pts.cols());
    lists.assign(N, {});
    capped.assign(N, 0);
    for_each_pair_within(pts, radius, [&](int i, int j, double d) {
      lists[i].push_back({j, d});
      lists[j].push_back({i, d});
    });
    for (int i = 0; i < N; ++i) {
      auto& l = lists[i];
      std::sort(l.begin(), l.end(), [](const Neighbor& a, const Neighbor& b) {
        return a.dist < b.dist || (a.dist == b.dist && a.index < b.index);
      });
      if (static_cast<int>(l.size()) > cap) {
        l.resize(cap);
        capped[i] = 1;
      }
    }
  }

  // number of leading neighbors of i within radius r
  int count_within(int i, double r) const {
    const auto& l = lists[i];
    int c = 0;
    while (c < static_cast<int>(l.size()) && l[c].dist <= r) ++c;
    return c;
  }
};

}  // namespace wj
