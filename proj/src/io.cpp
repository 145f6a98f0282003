#include "wj/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace wj {

namespace {

json vec(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

// one array per column
json cols(const MatrixXd& M) {
  json a = json::array();
  for (Eigen::Index j = 0; j < M.cols(); ++j) a.push_back(vec(M.col(j)));
  return a;
}

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw IoError(where + ": missing field '" + key + "'");
  return j.at(key);
}

double num(const json& j, const std::string& where) {
  if (!j.is_number()) throw IoError(where + ": expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw IoError(where + ": expected an integer");
  return j.get<int>();
}

VectorXd to_vec(const json& j, const std::string& where, Eigen::Index len = -1) {
  if (!j.is_array()) throw IoError(where + ": expected an array");
  if (len >= 0 && static_cast<Eigen::Index>(j.size()) != len)
    throw IoError(where + ": expected " + std::to_string(len) + " entries, got " + std::to_string(j.size()));
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = num(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

MatrixXd to_cols(const json& j, Eigen::Index rows, const std::string& where) {
  if (!j.is_array()) throw IoError(where + ": expected an array of vectors");
  MatrixXd M(rows, j.size());
  for (std::size_t c = 0; c < j.size(); ++c) M.col(c) = to_vec(j[c], where + "[" + std::to_string(c) + "]", rows);
  return M;
}

json multiindex(const MultiIndex& a) { return json(a); }

JetSignature signature(const json& j, const std::string& where) {
  const int n = integer(field(j, "n", where), where + ".n");
  const int p = integer(field(j, "p", where), where + ".p");
  if (n < 1 || p < 0) throw IoError(where + ": need n >= 1 and p >= 0");
  return JetSignature(n, p);
}

}  // namespace

json to_json(const Schedule& s) { return {{"text", s.str()}, {"scales", s.scales}}; }

json to_json(const Tolerances& t) {
  return {{"eps_alg", t.eps_alg},       {"eps_rank", t.eps_rank},         {"theta_tol", t.theta_tol},
          {"theta_persist", t.theta_persist}, {"theta_near", t.theta_near}, {"tau_vis", t.tau_vis},
          {"tau_pool", t.tau_pool},     {"tau_close", t.tau_close},       {"vertical_eps", t.vertical_eps},
          {"neighbor_cap", t.neighbor_cap}, {"min_neighbors", t.min_neighbors}};
}

Tolerances tolerances_from_json(const json& j) {
  Tolerances t;
  if (!j.is_object()) return t;
  auto get = [&](const char* k, double& v) {
    if (j.contains(k)) v = num(j.at(k), std::string("tolerances.") + k);
  };
  get("eps_alg", t.eps_alg);
  get("eps_rank", t.eps_rank);
  get("theta_tol", t.theta_tol);
  get("theta_persist", t.theta_persist);
  get("theta_near", t.theta_near);
  get("tau_vis", t.tau_vis);
  get("tau_pool", t.tau_pool);
  get("tau_close", t.tau_close);
  get("vertical_eps", t.vertical_eps);
  if (j.contains("neighbor_cap")) t.neighbor_cap = integer(j.at("neighbor_cap"), "tolerances.neighbor_cap");
  if (j.contains("min_neighbors")) t.min_neighbors = integer(j.at("min_neighbors"), "tolerances.min_neighbors");
  return t;
}

json to_json(const ModulusOptions& o) {
  return {{"eps_mod", o.eps_mod}, {"eps_fail", o.eps_fail}, {"noise_floor", o.noise_floor}};
}

json to_json(const Polyd& P) {
  return {{"n", P.n()}, {"p", P.p()}, {"center", vec(P.center)}, {"coeffs", vec(P.coeffs)}};
}

Polyd poly_from_json(const json& j) {
  const JetSignature sig = signature(j, "poly");
  return Polyd(sig, to_vec(field(j, "center", "poly"), "poly.center", sig.n()),
               to_vec(field(j, "coeffs", "poly"), "poly.coeffs", sig.dim()));
}

json to_json(const JetDuald& xi) {
  return {{"n", xi.sig.n()}, {"p", xi.sig.p()}, {"center", vec(xi.center)}, {"coords", vec(xi.coords)}};
}

json to_json(const WhitneyField& F) {
  json basis = json::array();
  for (const auto& a : F.sig.basis()) basis.push_back(multiindex(a));
  return {{"n", F.sig.n()}, {"p", F.sig.p()}, {"basis", basis}, {"points", cols(F.points)}, {"jets", cols(F.jets)}};
}

WhitneyField field_from_json(const json& j) {
  const json& f = j.contains("field") ? j.at("field") : j;
  const JetSignature sig = signature(f, "field");
  const MatrixXd pts = to_cols(field(f, "points", "field"), sig.n(), "field.points");
  const MatrixXd jets = to_cols(field(f, "jets", "field"), sig.dim(), "field.jets");
  if (pts.cols() != jets.cols()) throw IoError("field: points and jets differ in count");
  for (Eigen::Index i = 0; i < jets.size(); ++i)
    if (!std::isfinite(jets.data()[i])) throw IoError("field.jets: non-finite entry");
  return WhitneyField(sig, pts, jets);
}

json to_json(const Bundled& B) {
  json fr;
  if (const auto* jf = dynamic_cast<const JetFrame*>(B.frame.get()))
    fr = {{"kind", jf->name()}, {"n", jf->sig.n()}, {"p", jf->sig.p()}, {"extra", jf->extra}};
  else
    fr = {{"kind", "fixed"}};
  json fibers = json::array();
  for (const auto& f : B.fibers) fibers.push_back({{"rank", f.rank()}, {"basis", cols(f.basis)}});
  return {{"ambient_dim", B.ambient}, {"frame", fr}, {"points", cols(B.points)}, {"fibers", fibers}};
}

Bundled bundle_from_json(const json& j) {
  const std::string w = "bundle";
  const int r = integer(field(j, "ambient_dim", w), w + ".ambient_dim");
  const json& pts = field(j, "points", w);
  if (!pts.is_array()) throw IoError(w + ".points: expected an array");
  const Eigen::Index n = pts.empty() ? 0 : static_cast<Eigen::Index>(pts[0].size());
  std::shared_ptr<const FiberFrame<double>> frame;
  if (j.contains("frame") && j.at("frame").value("kind", "fixed") == "jet_local") {
    const json& fr = j.at("frame");
    frame = std::make_shared<JetFrame>(signature(fr, w + ".frame"), integer(field(fr, "extra", w), w + ".frame.extra"));
  }
  Bundled B(to_cols(pts, n, w + ".points"), r, frame);
  const json& fibers = field(j, "fibers", w);
  if (!fibers.is_array() || static_cast<int>(fibers.size()) != B.size())
    throw IoError(w + ".fibers: expected one fiber per point");
  for (int a = 0; a < B.size(); ++a) {
    const std::string fw = w + ".fibers[" + std::to_string(a) + "]";
    B.fibers[a] = Subspaced::from_orthonormal(to_cols(field(fibers[a], "basis", fw), r, fw + ".basis"));
  }
  return B;
}

json to_json(const SaturationTrace& t) {
  return {{"dims", t.dims},
          {"iterations", t.iterations},
          {"cap", t.cap},
          {"stabilized", t.stabilized},
          {"last_drift", t.last_drift}};
}

json to_json(const ModulusReport& r) {
  json bins = json::array();
  for (const auto& b : r.bins) {
    json e = {{"lo", b.lo}, {"hi", b.hi}, {"max", b.max_value}, {"count", b.count}};
    if (b.count > 0) e["witness"] = {{"a", b.wa}, {"b", b.wb}, {"alpha", b.walpha}};
    if (r.kind == "divided_difference") e["drift"] = b.drift;
    bins.push_back(e);
  }
  json out = {{"kind", r.kind},
              {"p", r.p},
              {"schedule", to_json(r.schedule)},
              {"options", to_json(r.options)},
              {"bins", bins},
              {"verdict", to_string(r.verdict)},
              {"note", r.note}};
  if (r.witness) {
    const auto& w = *r.witness;
    out["witness"] = {{"a", w.a}, {"b", w.b}, {"alpha", w.alpha}, {"value", w.value}, {"distance", w.distance}};
  }
  return out;
}

json to_json(const RefineDiagnostics& d) {
  return {{"unresolved", d.unresolved}, {"capped", d.capped}, {"nonconverged", d.nonconverged}};
}

json to_json(const CriterionVerdict& v) {
  json dims = json::object();
  for (std::size_t a = 0; a < v.fiber_dims.size(); ++a) dims[std::to_string(a)] = v.fiber_dims[a];
  json out = {{"verdict", to_string(v.is_function)},
              {"fiber_dims", dims},
              {"diagnostics",
               {{"iterations", v.iterations},
                {"stabilized", v.stabilized},
                {"vertical_points", v.vertical_points},
                {"scale_robust", v.scale_robust},
                {"coarse_verdict", v.coarse_verdict},
                {"refine", to_json(v.diag)},
                {"note", v.note}}}};
  if (v.is_function == Verdict::inconclusive) out["is_function"] = "inconclusive";
  else out["is_function"] = v.is_function == Verdict::pass;
  if (v.witness) {
    const auto& w = *v.witness;
    out["witness"] = {{"point", w.point},
                      {"vector", vec(w.vector)},
                      {"base_norm", w.base_norm},
                      {"vertical", w.vertical},
                      {"iteration", w.iteration}};
  } else {
    out["witness"] = nullptr;
  }
  return out;
}

json to_json(const ProbeTable& t) {
  return {{"q", t.q}, {"dims", t.dims}, {"monotone", t.monotone}, {"first_stable", t.first_stable}};
}

json to_json(const Cloud& c) {
  return {{"scene", c.scene}, {"scale", c.scale}, {"seed", c.seed}, {"n", c.points.rows()}, {"points", cols(c.points)}};
}

Cloud cloud_from_json(const json& j) {
  const json& c = j.contains("cloud") ? j.at("cloud") : j;
  Cloud out;
  if (c.contains("scene") && c.at("scene").is_string()) out.scene = c.at("scene").get<std::string>();
  if (c.contains("scale")) out.scale = num(c.at("scale"), "cloud.scale");
  if (c.contains("seed") && c.at("seed").is_number_unsigned()) out.seed = c.at("seed").get<std::uint64_t>();
  const json& pts = field(c, "points", "cloud");
  if (!pts.is_array() || pts.empty()) throw IoError("cloud.points: expected a nonempty array");
  const Eigen::Index n = c.contains("n") ? integer(c.at("n"), "cloud.n") : static_cast<Eigen::Index>(pts[0].size());
  if (n < 1) throw IoError("cloud: dimension must be >= 1");
  out.points = to_cols(pts, n, "cloud.points");
  return out;
}

json to_json(const Scene& s) {
  json comps = json::array();
  for (const auto& c : s.components) {
    if (const auto* a = std::get_if<ParametricArc>(&c)) {
      comps.push_back({{"kind", "arc"}, {"coeffs", a->coeffs}, {"t0", a->t0}, {"t1", a->t1}});
    } else if (const auto* q = std::get_if<PointSequence>(&c)) {
      comps.push_back({{"kind", "point_sequence"},
                       {"center", vec(q->center)},
                       {"direction", vec(q->direction)},
                       {"count", q->count},
                       {"include_limit", q->include_limit}});
    } else if (const auto* r = std::get_if<Region>(&c)) {
      if (r->shape == Region::Shape::ball)
        comps.push_back({{"kind", "ball"}, {"center", vec(r->center)}, {"radius", r->radius}});
      else
        comps.push_back({{"kind", "box"}, {"lo", vec(r->lo)}, {"hi", vec(r->hi)}});
    } else {
      comps.push_back({{"kind", "raw"}, {"points", cols(std::get<RawCloud>(c).points)}});
    }
  }
  json markers = json::array();
  for (const auto& m : s.markers) markers.push_back(vec(m));
  return {{"name", s.name}, {"components", comps}, {"markers", markers}, {"refine_levels", s.refine_levels}};
}

Scene scene_from_json(const json& j) {
  Scene s;
  s.name = j.value("name", "custom");
  if (j.contains("refine_levels")) s.refine_levels = integer(j.at("refine_levels"), "scene.refine_levels");
  const json& comps = field(j, "components", "scene");
  if (!comps.is_array()) throw IoError("scene.components: expected an array");
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const json& c = comps[i];
    const std::string w = "scene.components[" + std::to_string(i) + "]";
    const std::string kind = field(c, "kind", w).get<std::string>();
    if (kind == "arc") {
      ParametricArc a;
      a.coeffs = field(c, "coeffs", w).get<std::vector<std::vector<double>>>();
      for (const auto& cf : a.coeffs)
        if (cf.size() > 7) throw IoError(w + ": arc degree exceeds 6");
      a.t0 = num(field(c, "t0", w), w + ".t0");
      a.t1 = num(field(c, "t1", w), w + ".t1");
      s.components.push_back(a);
    } else if (kind == "point_sequence") {
      PointSequence q;
      q.center = to_vec(field(c, "center", w), w + ".center");
      q.direction = to_vec(field(c, "direction", w), w + ".direction", q.center.size());
      q.count = integer(field(c, "count", w), w + ".count");
      q.include_limit = c.value("include_limit", true);
      s.components.push_back(q);
    } else if (kind == "ball") {
      Region r;
      r.center = to_vec(field(c, "center", w), w + ".center");
      r.radius = num(field(c, "radius", w), w + ".radius");
      s.components.push_back(r);
    } else if (kind == "box") {
      Region r;
      r.shape = Region::Shape::box;
      r.lo = to_vec(field(c, "lo", w), w + ".lo");
      r.hi = to_vec(field(c, "hi", w), w + ".hi", r.lo.size());
      s.components.push_back(r);
    } else if (kind == "raw") {
      const json& pts = field(c, "points", w);
      if (!pts.is_array() || pts.empty()) throw IoError(w + ".points: expected a nonempty array");
      s.components.push_back(RawCloud{to_cols(pts, static_cast<Eigen::Index>(pts[0].size()), w + ".points")});
    } else {
      throw IoError(w + ": unknown component kind '" + kind + "'");
    }
  }
  if (j.contains("markers"))
    for (const auto& m : j.at("markers")) s.markers.push_back(to_vec(m, "scene.markers"));
  return s;
}

json to_json(const PiecewisePoly& pp) {
  json pieces = json::array();
  for (const auto& P : pp.pieces) pieces.push_back(to_json(P));
  return {{"nodes", pp.nodes}, {"pieces", pieces}, {"left", to_json(pp.left)}, {"right", to_json(pp.right)}};
}

json envelope(const json& config, std::uint64_t seed, const json& payload) {
  json out = {{"tool_version", tool_version}, {"config_echo", config}, {"seed", seed}};
  for (auto it = payload.begin(); it != payload.end(); ++it) out[it.key()] = it.value();
  return out;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot write");
  out << j.dump(1) << "\n";
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_cell(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) throw IoError(where + ": not a finite number '" + s + "'");
  return v;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open");
  CsvTable t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_csv(line);
    if (t.header.empty()) {
      t.header = cells;
      continue;
    }
    if (cells.size() != t.header.size())
      throw IoError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                    " fields, got " + std::to_string(cells.size()));
    std::vector<double> row;
    for (std::size_t c = 0; c < cells.size(); ++c)
      row.push_back(parse_cell(cells[c], path + ":" + std::to_string(lineno) + ": field '" + t.header[c] + "'"));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw IoError(path + ": empty file");
  if (t.rows.empty()) throw IoError(path + ": no data rows");
  return t;
}

}  // namespace

PointsCsv read_points_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  int n = 0;
  while (n < static_cast<int>(t.header.size()) && t.header[n] == "x" + std::to_string(n + 1)) ++n;
  const int rest = static_cast<int>(t.header.size()) - n;
  if (n == 0 || rest > 1 || (rest == 1 && t.header.back() != "f"))
    throw IoError(path + ":1: header must be x1..xn optionally followed by f");
  PointsCsv out;
  out.points.resize(n, t.rows.size());
  if (rest == 1) out.values = VectorXd(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (int k = 0; k < n; ++k) out.points(k, i) = t.rows[i][k];
    if (rest == 1) (*out.values)(i) = t.rows[i][n];
  }
  return out;
}

void write_points_csv(const std::string& path, const MatrixXd& points, const std::optional<VectorXd>& values) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot write");
  for (int k = 0; k < points.rows(); ++k) out << (k ? "," : "") << "x" << k + 1;
  if (values) out << ",f";
  out << "\n";
  for (int i = 0; i < points.cols(); ++i) {
    for (int k = 0; k < points.rows(); ++k) out << (k ? "," : "") << fmt17(points(k, i));
    if (values) out << "," << fmt17((*values)(i));
    out << "\n";
  }
}

namespace {

std::string jet_name(const MultiIndex& a) {
  std::string s = "F[";
  for (std::size_t i = 0; i < a.size(); ++i) s += (i ? " " : "") + std::to_string(a[i]);
  return s + "]";
}

}  // namespace

WhitneyField read_field_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  int n = 0;
  while (n < static_cast<int>(t.header.size()) && t.header[n] == "x" + std::to_string(n + 1)) ++n;
  if (n == 0) throw IoError(path + ":1: header must start with x1..xn");
  const int d = static_cast<int>(t.header.size()) - n;
  int p = 0;
  while (JetSignature(n, p).dim() < d) ++p;
  const JetSignature sig(n, p);
  if (sig.dim() != d) throw IoError(path + ":1: jet column count does not match any order");
  for (int i = 0; i < d; ++i)
    if (t.header[n + i] != jet_name(sig[i])) throw IoError(path + ":1: expected column '" + jet_name(sig[i]) + "'");
  MatrixXd pts(n, t.rows.size()), jets(d, t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (int k = 0; k < n; ++k) pts(k, r) = t.rows[r][k];
    for (int i = 0; i < d; ++i) jets(i, r) = t.rows[r][n + i];
  }
  return WhitneyField(sig, pts, jets);
}

void write_field_csv(const std::string& path, const WhitneyField& F) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot write");
  for (int k = 0; k < F.sig.n(); ++k) out << (k ? "," : "") << "x" << k + 1;
  for (int i = 0; i < F.sig.dim(); ++i) out << "," << jet_name(F.sig[i]);
  out << "\n";
  for (int a = 0; a < F.size(); ++a) {
    for (int k = 0; k < F.sig.n(); ++k) out << (k ? "," : "") << fmt17(F.points(k, a));
    for (int i = 0; i < F.sig.dim(); ++i) out << "," << fmt17(F.jets(i, a));
    out << "\n";
  }
}

}  // namespace wj
