#pragma once

#include "wj/whitney.hpp"

#include <string>
#include <vector>

namespace wj {

// Scatter of the first two coordinates (1-D samples on a line), colored by fiber dimension.
std::string svg_fiber_map(const MatrixXd& points, const std::vector<int>& dims, const std::string& title = "");

// Bin maxima against the bin scale on log-log axes, one curve per report.
std::string svg_decay(const std::vector<ModulusReport>& reports, const std::string& title = "");

}  // namespace wj
