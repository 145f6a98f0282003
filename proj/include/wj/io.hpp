#pragma once

#include "wj/paratangent.hpp"
#include "wj/scenes.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>

namespace wj {

using json = nlohmann::json;

inline constexpr const char* tool_version = "0.1.0";

// Malformed input: message names the file, line or field.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json to_json(const Schedule& s);
json to_json(const Tolerances& t);
json to_json(const ModulusOptions& o);
json to_json(const Polyd& P);
json to_json(const JetDuald& xi);
json to_json(const WhitneyField& F);
json to_json(const Bundled& B);
json to_json(const SaturationTrace& t);
json to_json(const ModulusReport& r);
json to_json(const RefineDiagnostics& d);
json to_json(const CriterionVerdict& v);
json to_json(const ProbeTable& t);
json to_json(const Cloud& c);
json to_json(const Scene& s);
json to_json(const PiecewisePoly& pp);

Tolerances tolerances_from_json(const json& j);
Polyd poly_from_json(const json& j);
WhitneyField field_from_json(const json& j);
Bundled bundle_from_json(const json& j);
Cloud cloud_from_json(const json& j);
Scene scene_from_json(const json& j);

// {tool_version, config_echo, seed} plus the payload fields.
json envelope(const json& config, std::uint64_t seed, const json& payload);

json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);

struct PointsCsv {
  MatrixXd points;  // n x N
  std::optional<VectorXd> values;
};

// Header x1..xn[,f]; 17 significant digits on output.
PointsCsv read_points_csv(const std::string& path);
void write_points_csv(const std::string& path, const MatrixXd& points, const std::optional<VectorXd>& values = {});

// Header x1..xn, then one column per jet coordinate named F[a1 a2 ...].
WhitneyField read_field_csv(const std::string& path);
void write_field_csv(const std::string& path, const WhitneyField& F);

}  // namespace wj
