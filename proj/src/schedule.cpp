#include "wj/schedule.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace wj {

Schedule Schedule::geometric(double delta0, int count) {
  if (!(delta0 > 0) || count < 1) throw std::invalid_argument("schedule: need delta0 > 0 and count >= 1");
  Schedule s;
  for (int k = 0; k < count; ++k) s.scales.push_back(std::ldexp(delta0, -k));
  return s;
}

Schedule Schedule::parse(const std::string& text) {
  const auto x = text.find('x');
  if (x != std::string::npos) {
    std::size_t used = 0;
    const double d0 = std::stod(text.substr(0, x), &used);
    if (used != x) throw std::invalid_argument("schedule: bad scale '" + text + "'");
    const std::string tail = text.substr(x + 1);
    const int count = std::stoi(tail, &used);
    if (used != tail.size()) throw std::invalid_argument("schedule: bad count '" + text + "'");
    return geometric(d0, count);
  }
  Schedule s;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    s.scales.push_back(std::stod(item));
  }
  if (s.scales.empty()) throw std::invalid_argument("schedule: empty");
  for (std::size_t i = 0; i < s.scales.size(); ++i) {
    if (!(s.scales[i] > 0)) throw std::invalid_argument("schedule: scales must be positive");
    if (i > 0 && !(s.scales[i] < s.scales[i - 1]))
      throw std::invalid_argument("schedule: scales must be strictly decreasing");
  }
  return s;
}

Schedule Schedule::drop_finest() const {
  Schedule s = *this;
  if (!s.scales.empty()) s.scales.pop_back();
  return s;
}

std::string Schedule::str() const {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < scales.size(); ++i) os << (i ? "," : "") << scales[i];
  return os.str();
}

}  // namespace wj
