#include "wj/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace wj {

namespace {

constexpr double W = 640, H = 480, M = 50;

const char* palette(int i) {
  static const char* c[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                            "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};
  return c[((i % 10) + 10) % 10];
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

void header(std::ostringstream& s, const std::string& title) {
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) s << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
}

struct Range {
  double lo = 0, hi = 1;
  void fix() {
    if (!(hi > lo)) { lo -= 0.5; hi += 0.5; }
  }
};

}  // namespace

std::string svg_fiber_map(const MatrixXd& points, const std::vector<int>& dims, const std::string& title) {
  std::ostringstream s;
  header(s, title);
  const Eigen::Index N = points.cols();
  auto y_of = [&](Eigen::Index i) { return points.rows() > 1 ? points(1, i) : 0.0; };
  Range rx{points.row(0).minCoeff(), points.row(0).maxCoeff()};
  Range ry{N ? y_of(0) : 0, N ? y_of(0) : 0};
  for (Eigen::Index i = 0; i < N; ++i) ry.lo = std::min(ry.lo, y_of(i)), ry.hi = std::max(ry.hi, y_of(i));
  rx.fix();
  ry.fix();
  const double scale = std::min((W - 2 * M - 120) / (rx.hi - rx.lo), (H - 2 * M) / (ry.hi - ry.lo));
  for (Eigen::Index i = 0; i < N; ++i) {
    const double x = M + (points(0, i) - rx.lo) * scale;
    const double y = H - M - (y_of(i) - ry.lo) * scale;
    const int d = i < static_cast<Eigen::Index>(dims.size()) ? dims[i] : 0;
    s << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"2\" fill=\"" << palette(d) << "\"/>\n";
  }
  std::vector<int> seen(dims);
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
  for (std::size_t k = 0; k < seen.size(); ++k) {
    const double y = M + 20 * k;
    s << "<rect x=\"" << W - 110 << "\" y=\"" << y - 10 << "\" width=\"12\" height=\"12\" fill=\"" << palette(seen[k])
      << "\"/><text x=\"" << W - 92 << "\" y=\"" << y << "\">dim " << seen[k] << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string svg_decay(const std::vector<ModulusReport>& reports, const std::string& title) {
  std::ostringstream s;
  header(s, title);
  const double floor = 1e-16;
  Range rx{1e300, -1e300}, ry{1e300, -1e300};
  for (const auto& r : reports)
    for (const auto& b : r.bins) {
      if (b.count == 0) continue;
      rx.lo = std::min(rx.lo, std::log10(b.hi)), rx.hi = std::max(rx.hi, std::log10(b.hi));
      const double v = std::log10(std::max(b.max_value, floor));
      ry.lo = std::min(ry.lo, v), ry.hi = std::max(ry.hi, v);
    }
  if (rx.lo > rx.hi) rx = {0, 1}, ry = {0, 1};
  rx.fix();
  ry.fix();
  auto px = [&](double lx) { return M + (lx - rx.lo) / (rx.hi - rx.lo) * (W - 2 * M - 120); };
  auto py = [&](double ly) { return H - M - (ly - ry.lo) / (ry.hi - ry.lo) * (H - 2 * M); };
  s << "<line x1=\"" << M << "\" y1=\"" << H - M << "\" x2=\"" << W - M - 120 << "\" y2=\"" << H - M
    << "\" stroke=\"black\"/>\n<line x1=\"" << M << "\" y1=\"" << M << "\" x2=\"" << M << "\" y2=\"" << H - M
    << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << M << "\" y=\"" << H - M + 20 << "\">1e" << num(rx.lo) << "</text><text x=\"" << W - M - 160
    << "\" y=\"" << H - M + 20 << "\">1e" << num(rx.hi) << " (scale)</text>\n";
  s << "<text x=\"4\" y=\"" << H - M << "\">1e" << num(ry.lo) << "</text><text x=\"4\" y=\"" << M << "\">1e"
    << num(ry.hi) << "</text>\n";
  for (std::size_t k = 0; k < reports.size(); ++k) {
    std::string pts;
    for (const auto& b : reports[k].bins) {
      if (b.count == 0) continue;
      pts += num(px(std::log10(b.hi))) + "," + num(py(std::log10(std::max(b.max_value, floor)))) + " ";
    }
    s << "<polyline fill=\"none\" stroke=\"" << palette(static_cast<int>(k)) << "\" stroke-width=\"2\" points=\"" << pts
      << "\"/>\n";
    s << "<text x=\"" << W - 110 << "\" y=\"" << M + 20 * k << "\" fill=\"" << palette(static_cast<int>(k)) << "\">"
      << reports[k].kind << " p=" << reports[k].p << " " << to_string(reports[k].verdict) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace wj
