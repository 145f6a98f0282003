#pragma once

#include <string>
#include <vector>

namespace wj {

// Strictly decreasing list of scales. "0.2x8" means 8 scales 0.2 * 2^-k;
// "0.2,0.1,0.03" is taken verbatim.
struct Schedule {
  std::vector<double> scales;

  static Schedule parse(const std::string& text);
  static Schedule geometric(double delta0, int count);

  std::size_t size() const { return scales.size(); }
  bool empty() const { return scales.empty(); }
  double coarsest() const { return scales.front(); }
  double finest() const { return scales.back(); }
  Schedule drop_finest() const;
  std::string str() const;
};

}  // namespace wj
