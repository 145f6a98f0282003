#include "wj/io.hpp"
#include "wj/svg.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>

using namespace wj;

namespace {

constexpr int exit_io = 3;

// Scales from the sample diameter down to about the closest pair, halving each time.
Schedule auto_schedule(const MatrixXd& X) {
  double diam = 0, closest = INFINITY;
  for (Eigen::Index i = 0; i < X.cols(); ++i)
    for (Eigen::Index j = i + 1; j < X.cols(); ++j) {
      const double d = (X.col(i) - X.col(j)).norm();
      diam = std::max(diam, d);
      if (d > 0) closest = std::min(closest, d);
    }
  if (!(diam > 0)) throw IoError("sample needs two distinct points");
  const int count = std::clamp(static_cast<int>(std::ceil(std::log2(diam / closest))) + 1, 3, 30);
  return Schedule::geometric(diam, count);
}

Schedule schedule_or(const std::string& text, const MatrixXd& X) {
  return text.empty() ? auto_schedule(X) : Schedule::parse(text);
}

void require_p(int p) {
  if (p < 0 || p > 6) throw IoError("--p must lie in [0, 6]");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot write");
  out << text;
}

void emit(const std::string& path, const json& j) {
  if (path.empty() || path == "-") std::cout << j.dump(1) << "\n";
  else write_json_file(path, j);
}

void print_modulus(const ModulusReport& r, const MatrixXd& points) {
  std::cout << r.kind << " p=" << r.p << " verdict: " << to_string(r.verdict) << "\n";
  if (r.witness && r.witness->a >= 0) {
    const auto& w = *r.witness;
    std::cout << "witness pair: a=" << w.a << " (" << points.col(w.a).transpose() << ")  b=" << w.b << " ("
              << points.col(w.b).transpose() << ")  value=" << w.value << "\n";
  }
  if (!r.note.empty()) std::cout << "note: " << r.note << "\n";
}

VectorXd matched_values(const PointsCsv& csv, const MatrixXd& X, const std::string& path) {
  if (!csv.values) throw IoError(path + ":1: missing column 'f'");
  if (csv.points.rows() != X.rows() || csv.points.cols() != X.cols())
    throw IoError(path + ": expected " + std::to_string(X.cols()) + " rows of dimension " + std::to_string(X.rows()));
  for (Eigen::Index i = 0; i < X.cols(); ++i)
    if ((csv.points.col(i) - X.col(i)).norm() > 1e-12 * std::max(1.0, X.col(i).norm()))
      throw IoError(path + ":" + std::to_string(i + 2) + ": point does not match cloud point " + std::to_string(i));
  return *csv.values;
}

json dims_of(const Bundled& B) {
  json d = json::array();
  for (const auto& f : B.fibers) d.push_back(f.rank());
  return d;
}

ModulusReport report_from_json(const json& j) {
  ModulusReport r;
  r.kind = j.value("kind", "whitney");
  r.p = j.value("p", 0);
  const std::string v = j.value("verdict", "inconclusive");
  r.verdict = v == "pass" ? Verdict::pass : v == "fail" ? Verdict::fail : Verdict::inconclusive;
  for (const auto& b : j.at("bins")) {
    ModulusBin bin;
    bin.lo = b.at("lo").get<double>();
    bin.hi = b.at("hi").get<double>();
    bin.max_value = b.at("max").get<double>();
    bin.count = b.at("count").get<std::size_t>();
    r.bins.push_back(bin);
  }
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Whitney jets, paratangent bundles and extension checks on point clouds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tool_version));

  std::string scene_name, scene_file, out, in, field_path, csv_path, cloud_path, values_path, verdict_path,
      schedule_text;
  int p = 1, k = 1, q = 1, probe_qmax = 0, point = -1;
  double scale = 0.01;
  std::uint64_t seed = 0;

  auto* gen = app.add_subcommand("gen", "sample a scene into a cloud");
  auto* scene_opt = gen->add_option("--scene", scene_name, "builtin scene name");
  gen->add_option("--scene-file", scene_file, "scene JSON")->excludes(scene_opt);
  gen->add_option("--p", p, "order (parabola_union only)");
  auto* scale_opt =
      gen->add_option("--scale", scale, "sampling scale (default 0.01, 0.05 for scenes with regions)")->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed);
  gen->add_option("-o", out, "cloud JSON")->required();

  auto* wc = app.add_subcommand("whitney-check", "Whitney modulus check of a field");
  wc->add_option("--field", field_path, "field JSON or CSV")->required();
  wc->add_option("--p", p)->required();
  wc->add_option("--schedule", schedule_text, "default: from the sample diameter to the closest pair");
  wc->add_option("-o", out);

  auto* c1 = app.add_subcommand("check1d", "divided-difference check of 1-D data");
  c1->add_option("--csv", csv_path, "x1,f")->required();
  c1->add_option("--p", p)->required();
  c1->add_option("--schedule", schedule_text);
  c1->add_option("-o", out);

  auto* tau = app.add_subcommand("tau", "paratangent bundle of a cloud");
  tau->add_option("--cloud", cloud_path)->required();
  tau->add_option("--p", p)->required();
  tau->add_option("--k", k)->check(CLI::PositiveNumber);
  tau->add_option("--schedule", schedule_text)->default_str("0.2x8");
  tau->add_option("-o", out);

  auto* nab = app.add_subcommand("nabla", "extension criterion for values on a cloud");
  nab->add_option("--cloud", cloud_path)->required();
  nab->add_option("--values", values_path, "x1..xn,f")->required();
  nab->add_option("--p", p)->required();
  nab->add_option("--k", k)->check(CLI::PositiveNumber);
  nab->add_option("--schedule", schedule_text)->default_str("0.2x8");
  nab->add_option("-o", out);

  auto* ex = app.add_subcommand("extract-field", "field read off a nabla bundle");
  ex->add_option("--verdict", verdict_path)->required();
  ex->add_option("-o", out);

  auto* zar = app.add_subcommand("zariski", "polynomial surrogate of the Zariski bundle");
  zar->add_option("--cloud", cloud_path)->required();
  zar->add_option("--p", p)->required();
  zar->add_option("--q", q)->required();
  zar->add_option("--probe-qmax", probe_qmax, "also run the stability probe up to this q");
  zar->add_option("--point", point, "probe point index (default: closest to the centroid)");
  zar->add_option("-o", out);

  auto* ext = app.add_subcommand("extend1d", "C^p extension of a 1-D field");
  ext->add_option("--field", field_path)->required();
  ext->add_option("--schedule", schedule_text);
  ext->add_option("-o", out);

  auto* plot = app.add_subcommand("plot", "SVG of a report or bundle");
  plot->add_option("--in", in)->required();
  plot->add_option("-o", out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_io;
  }

  json config;
  for (const auto* opt : app.get_subcommands().front()->get_options())
    if (opt->count() > 0 && opt->get_name() != "--help") config[opt->get_name()] = opt->as<std::string>();
  config["command"] = app.get_subcommands().front()->get_name();

  try {
    if (gen->parsed()) {
      if (scene_name.empty() == scene_file.empty()) throw IoError("gen: give exactly one of --scene, --scene-file");
      json payload;
      Cloud c;
      if (scene_name == "zigzag") {
        const Zigzag z = zigzag_sequence();
        c = sample(scene_zigzag(z), scale, seed);
        payload["field"] = to_json(zigzag_field(z));
      } else {
        const Scene s = scene_file.empty() ? builtin_scene(scene_name, p) : scene_from_json(read_json_file(scene_file));
        const bool region = std::any_of(s.components.begin(), s.components.end(),
                                        [](const Component& x) { return std::holds_alternative<Region>(x); });
        if (scale_opt->count() == 0 && region) scale = 0.05;
        c = sample(s, scale, seed);
      }
      payload["cloud"] = to_json(c);
      payload["verdict"] = "pass";
      emit(out, envelope(config, seed, payload));
      std::cout << c.scene << ": " << c.points.cols() << " points in R^" << c.points.rows() << "\n";
      return 0;
    }

    if (wc->parsed()) {
      require_p(p);
      const json j = field_path.size() > 4 && field_path.substr(field_path.size() - 4) == ".csv"
                         ? to_json(read_field_csv(field_path))
                         : read_json_file(field_path);
      const WhitneyField F = field_from_json(j);
      if (F.sig.p() != p)
        throw IoError(field_path + ": field has order " + std::to_string(F.sig.p()) + ", --p is " + std::to_string(p));
      const ModulusReport r = whitney_check(F, schedule_or(schedule_text, F.points), {});
      print_modulus(r, F.points);
      json payload = to_json(r);
      if (r.witness && r.witness->a >= 0)
        payload["witness"]["points"] = {std::vector<double>(F.points.col(r.witness->a).data(),
                                                            F.points.col(r.witness->a).data() + F.sig.n()),
                                        std::vector<double>(F.points.col(r.witness->b).data(),
                                                            F.points.col(r.witness->b).data() + F.sig.n())};
      if (!out.empty()) emit(out, envelope(config, 0, payload));
      return exit_code(r.verdict);
    }

    if (c1->parsed()) {
      require_p(p);
      const PointsCsv csv = read_points_csv(csv_path);
      if (csv.points.rows() != 1) throw IoError(csv_path + ":1: check1d needs a single coordinate x1");
      if (!csv.values) throw IoError(csv_path + ":1: missing column 'f'");
      const std::vector<double> xs(csv.points.data(), csv.points.data() + csv.points.cols());
      const std::vector<double> fs(csv.values->data(), csv.values->data() + csv.values->size());
      const ModulusReport r = whitney_1d_check(xs, fs, p, schedule_or(schedule_text, csv.points), {});
      print_modulus(r, csv.points);
      if (!out.empty()) emit(out, envelope(config, 0, to_json(r)));
      return exit_code(r.verdict);
    }

    if (tau->parsed()) {
      require_p(p);
      const Cloud c = cloud_from_json(read_json_file(cloud_path));
      DeltaConfig cfg;
      cfg.p = p;
      cfg.k = k;
      cfg.schedule = Schedule::parse(schedule_text.empty() ? "0.2x8" : schedule_text);
      const TauResult r = tau_p(c.points, cfg);
      const Verdict v = r.stabilized ? Verdict::pass : Verdict::inconclusive;
      json payload = {{"verdict", to_string(v)},       {"stabilized", r.stabilized}, {"p", p},
                      {"k", k},                        {"schedule", to_json(cfg.schedule)},
                      {"tolerances", to_json(cfg.tol)}, {"fiber_dims", dims_of(r.bundle)},
                      {"trace", to_json(r.trace)},     {"diagnostics", to_json(r.diag)},
                      {"bundle", to_json(r.bundle)}};
      emit(out, envelope(config, c.seed, payload));
      std::cout << "tau p=" << p << " k=" << k << ": " << r.trace.iterations << " iterations, "
                << (r.stabilized ? "stabilized" : "not stabilized") << "\n";
      return exit_code(v);
    }

    if (nab->parsed()) {
      require_p(p);
      const Cloud c = cloud_from_json(read_json_file(cloud_path));
      const VectorXd f = matched_values(read_points_csv(values_path), c.points, values_path);
      DeltaConfig cfg;
      cfg.p = p;
      cfg.k = k;
      cfg.schedule = Schedule::parse(schedule_text.empty() ? "0.2x8" : schedule_text);
      const NablaResult r = nabla_p(f, c.points, cfg);
      json payload = to_json(r.verdict);
      payload["p"] = p;
      payload["schedule"] = to_json(cfg.schedule);
      payload["tolerances"] = to_json(cfg.tol);
      payload["trace"] = to_json(r.trace);
      payload["bundle"] = to_json(r.bundle);
      emit(out, envelope(config, c.seed, payload));
      std::cout << "nabla p=" << p << " verdict: " << to_string(r.verdict.is_function) << "\n";
      if (r.verdict.witness) {
        const auto& w = *r.verdict.witness;
        std::cout << "vertical witness at point " << w.point << " (" << c.points.col(w.point).transpose()
                  << "), base norm " << w.base_norm << "\n";
      }
      if (!r.verdict.note.empty()) std::cout << "note: " << r.verdict.note << "\n";
      return exit_code(r.verdict.is_function);
    }

    if (ex->parsed()) {
      const json j = read_json_file(verdict_path);
      if (!j.contains("bundle")) throw IoError(verdict_path + ": missing field 'bundle'");
      const Bundled B = bundle_from_json(j.at("bundle"));
      if (!jet_frame(B)) throw IoError(verdict_path + ": bundle.frame is not a jet frame");
      const FieldExtraction fx = field_from_nabla(B);
      const WhitneyField kept = restrict_field(fx.field, fx.complete);
      const Verdict v = fx.partial ? Verdict::inconclusive : Verdict::pass;
      json complete = json::array();
      for (char ch : fx.complete) complete.push_back(ch != 0);
      json payload = {{"verdict", to_string(v)},
                      {"partial", fx.partial},
                      {"complete", complete},
                      {"worst_residual", fx.worst_residual},
                      {"field", to_json(kept)}};
      emit(out, envelope(config, j.value("seed", std::uint64_t{0}), payload));
      std::cout << "field at " << kept.size() << " of " << B.size() << " points" << (fx.partial ? " (partial)" : "")
                << "\n";
      return exit_code(v);
    }

    if (zar->parsed()) {
      require_p(p);
      if (q < p) throw IoError("--q must be >= --p");
      const Cloud c = cloud_from_json(read_json_file(cloud_path));
      const ZariskiResult z = zariski_Tp(c.points, p, q);
      Verdict v = z.underdetermined || z.ambiguous_rank ? Verdict::inconclusive : Verdict::pass;
      json payload = {{"p", p},
                      {"q", q},
                      {"center", std::vector<double>(z.center.data(), z.center.data() + z.center.size())},
                      {"vanishing_rank", z.vanishing.cols()},
                      {"vanishing", json::array()},
                      {"singular_values", std::vector<double>(z.singular_values.data(),
                                                              z.singular_values.data() + z.singular_values.size())},
                      {"underdetermined", z.underdetermined},
                      {"ambiguous_rank", z.ambiguous_rank},
                      {"fiber_dims", dims_of(z.bundle)},
                      {"bundle", to_json(z.bundle)}};
      for (Eigen::Index j = 0; j < z.vanishing.cols(); ++j)
        payload["vanishing"].push_back(
            std::vector<double>(z.vanishing.col(j).data(), z.vanishing.col(j).data() + z.vanishing.rows()));
      if (probe_qmax > 0) {
        int a = point;
        if (a < 0) (c.points.colwise() - z.center).colwise().squaredNorm().minCoeff(&a);
        if (a >= c.points.cols()) throw IoError("--point out of range");
        const ProbeTable t = stability_probe(c.points, c.points.col(a), p, probe_qmax);
        payload["probe"] = to_json(t);
        payload["probe"]["point"] = a;
        if (!t.monotone) v = Verdict::inconclusive;
      }
      payload["verdict"] = to_string(v);
      emit(out, envelope(config, c.seed, payload));
      std::cout << "zariski p=" << p << " q=" << q << ": " << z.vanishing.cols() << " vanishing polynomials"
                << (z.underdetermined ? " (underdetermined)" : "") << (z.ambiguous_rank ? " (ambiguous rank)" : "")
                << "\n";
      return exit_code(v);
    }

    if (ext->parsed()) {
      const WhitneyField F = field_from_json(read_json_file(field_path));
      std::optional<Schedule> s;
      if (!schedule_text.empty()) s = Schedule::parse(schedule_text);
      const PiecewisePoly pp = extend_1d(F, s);
      json payload = to_json(pp);
      payload["verdict"] = "pass";
      emit(out, envelope(config, 0, payload));
      return 0;
    }

    if (plot->parsed()) {
      const json j = read_json_file(in);
      std::string svg;
      if (j.contains("bins")) {
        svg = svg_decay({report_from_json(j)}, in);
      } else if (j.contains("reports")) {
        std::vector<ModulusReport> rs;
        for (const auto& r : j.at("reports")) rs.push_back(report_from_json(r));
        svg = svg_decay(rs, in);
      } else if (j.contains("bundle")) {
        const Bundled B = bundle_from_json(j.at("bundle"));
        std::vector<int> dims;
        for (const auto& f : B.fibers) dims.push_back(f.rank());
        svg = svg_fiber_map(B.points, dims, in);
      } else {
        throw IoError(in + ": nothing to plot (need 'bins', 'reports' or 'bundle')");
      }
      write_text(out, svg);
      return 0;
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_io;
  } catch (const json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << "\n";
    return exit_io;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_io;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_io;
  }
  return exit_io;
}
