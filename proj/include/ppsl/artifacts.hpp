#pragma once

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "ppsl/io.hpp"

namespace ppsl {

namespace fs = std::filesystem;

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline int log_verbosity() {
  const char* env = std::getenv("PPSL_LOG");
  if (!env) return 1;
  const std::string v = env;
  if (v == "quiet") return 0;
  if (v == "debug") return 2;
  return 1;
}

// Content-addressed run directory: config hash + seed.
inline fs::path run_output_dir(const fs::path& base, const RunConfig& cfg) {
  const std::string canonical = run_config_to_json(cfg).dump();
  const std::string tag = hex64(fnv1a64(canonical)).substr(0, 12) + "-s" + std::to_string(cfg.seed);
  return base / tag;
}

namespace detail {

inline void append_vec_columns(std::vector<std::string>& header, const std::string& prefix, int n) {
  for (int i = 0; i < n; ++i) header.push_back(prefix + std::to_string(i));
}

inline CsvTable archive_table(const std::vector<LoggedEvaluation>& log) {
  CsvTable t;
  if (log.empty()) return t;
  const int n = log.front().rec.x.dim();
  const int p = log.front().rec.t.dim();
  const int m = log.front().rec.y.dim();
  append_vec_columns(t.header, "x_", n);
  append_vec_columns(t.header, "t_", p);
  append_vec_columns(t.header, "y_", m);
  t.header.push_back("iteration");
  t.header.push_back("counter");
  for (const auto& e : log) {
    std::vector<std::string> row;
    for (int i = 0; i < n; ++i) row.push_back(fmt_double(e.rec.x.values[i]));
    for (int i = 0; i < p; ++i) row.push_back(fmt_double(e.rec.t.values[i]));
    for (int i = 0; i < m; ++i) row.push_back(fmt_double(e.rec.y.values[i]));
    row.push_back(fmt_int(e.iteration));
    row.push_back(fmt_int(e.counter));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline CsvTable front_table(const std::vector<FrontPoint>& points) {
  CsvTable t;
  if (points.empty()) return t;
  const int ml = static_cast<int>(points.front().lambda.size());
  const int n = static_cast<int>(points.front().x.size());
  const int m = static_cast<int>(points.front().y.size());
  append_vec_columns(t.header, "lambda_", ml);
  append_vec_columns(t.header, "x_", n);
  append_vec_columns(t.header, "y_", m);
  for (const auto& pt : points) {
    std::vector<std::string> row;
    for (int i = 0; i < ml; ++i) row.push_back(fmt_double(pt.lambda[i]));
    for (int i = 0; i < n; ++i) row.push_back(fmt_double(pt.x[i]));
    for (int i = 0; i < m; ++i) row.push_back(fmt_double(pt.y[i]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline std::vector<Vec> front_objectives_from_csv(const CsvTable& t) {
  std::vector<int> ycols;
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i].rfind("y_", 0) == 0) ycols.push_back(static_cast<int>(i));
  std::vector<Vec> out;
  for (const auto& row : t.rows) {
    Vec y(ycols.size());
    for (std::size_t i = 0; i < ycols.size(); ++i) y[static_cast<Eigen::Index>(i)] = std::strtod(row[ycols[i]].c_str(), nullptr);
    out.push_back(std::move(y));
  }
  return out;
}

inline json file_inventory(const fs::path& dir) {
  json files = json::array();
  std::vector<fs::path> paths;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().filename() != "manifest.json")
      paths.push_back(entry.path());
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) {
    const std::string content = read_file(p);
    files.push_back({{"name", fs::relative(p, dir).string()},
                     {"bytes", content.size()},
                     {"fnv1a64", hex64(fnv1a64(content))}});
  }
  return files;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// run artifacts
// ---------------------------------------------------------------------------

inline void write_static_artifacts(const fs::path& dir, const RunConfig& cfg, RunResult& result) {
  write_csv(dir / "archive.csv", detail::archive_table(result.log));

  CsvTable trace;
  trace.header = {"iteration", "evaluations", "loss_first", "loss_last", "loss_mean"};
  const std::size_t heldout_count =
      result.trace.empty() ? 0 : result.trace.front().heldout_hv.size();
  for (std::size_t h = 0; h < heldout_count; ++h) trace.header.push_back("hv_h" + std::to_string(h));
  for (const auto& row : result.trace) {
    std::vector<std::string> cells = {fmt_int(row.iteration), fmt_int(row.evaluations),
                                      fmt_double(row.loss_first), fmt_double(row.loss_last),
                                      fmt_double(row.loss_mean)};
    for (double v : row.heldout_hv) cells.push_back(fmt_double(v));
    trace.rows.push_back(std::move(cells));
  }
  write_csv(dir / "trace.csv", trace);

  atomic_write(dir / "checkpoint.json",
               checkpoint_to_json(cfg, result.model, result.surrogate,
                                  result.problem->parameter_box())
                   .dump(2));

  fs::create_directories(dir / "fronts");
  for (std::size_t h = 0; h < result.heldout.size(); ++h) {
    std::vector<FrontPoint> points;
    for (const auto& [lambda, x] : infer_front(result.model, result.heldout[h], cfg.infer_points)) {
      Vec y = result.problem->evaluate_audit(x, result.heldout[h]).values;
      points.push_back({lambda.weights, x.values, std::move(y)});
    }
    write_csv(dir / "fronts" / ("front_h" + std::to_string(h) + ".csv"),
              detail::front_table(points));
  }
}

inline void write_dynamic_artifacts(const fs::path& dir, const RunConfig& cfg,
                                    DynamicRunResult& result) {
  write_csv(dir / "archive.csv", detail::archive_table(result.state.log));

  CsvTable trace;
  trace.header = {"tau",         "t_env",       "t_frac",    "igd",         "hv",
                  "archive_size", "evaluations", "loss_mean", "batch_start", "batch_count"};
  for (const auto& g : result.state.traces) {
    trace.rows.push_back({fmt_int(g.tau), fmt_double(g.t_env), fmt_double(g.t_frac),
                          fmt_double(g.igd_value), fmt_double(g.hv_value),
                          fmt_int(g.archive_size), fmt_int(g.evaluations),
                          fmt_double(g.loss_mean), fmt_int(g.batch_start),
                          fmt_int(g.batch_count)});
  }
  write_csv(dir / "trace.csv", trace);

  atomic_write(dir / "checkpoint.json",
               checkpoint_to_json(cfg, result.state.model, result.state.surrogate,
                                  result.problem->parameter_box())
                   .dump(2));

  fs::create_directories(dir / "fronts");
  for (std::size_t g = 0; g < result.state.step_points.size(); ++g) {
    char name[32];
    std::snprintf(name, sizeof(name), "front_g%03zu.csv", g);
    write_csv(dir / "fronts" / name, detail::front_table(result.state.step_points[g]));
  }
}

// ---------------------------------------------------------------------------
// commands (shared by the CLI binary and the test suite)
// ---------------------------------------------------------------------------

inline int cmd_run(const std::string& config_path, const std::string& out_base) {
  RunConfig cfg;
  json config_json;
  try {
    config_json = parse_json_text(read_file(config_path), config_path);
    cfg = run_config_from_json(config_json);
    build_problem(cfg);  // fail before creating any output
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  const fs::path dir = run_output_dir(out_base, cfg);
  if (fs::exists(dir)) {
    std::cerr << "error: output directory " << dir << " already exists\n";
    return 2;
  }
  fs::create_directories(dir);

  json manifest{{"version", kVersion},
                {"started_utc", utc_timestamp()},
                {"seed", cfg.seed},
                {"mode", cfg.mode == RunMode::static_mode ? "static" : "dynamic"},
                {"config", run_config_to_json(cfg)}};
  try {
    if (cfg.mode == RunMode::static_mode) {
      RunResult result = run_static(cfg);
      write_static_artifacts(dir, cfg, result);
      json heldout = json::array();
      for (const auto& t : result.heldout) heldout.push_back(vec_to_json(t.values));
      manifest["heldout_t"] = heldout;
      manifest["evaluations"] = result.problem->evaluation_count();
      manifest["audit_evaluations"] = result.problem->audit_count();
    } else {
      DynamicRunResult result = run_dynamic(cfg);
      write_dynamic_artifacts(dir, cfg, result);
      manifest["migd"] = result.migd_value;
      manifest["mhv"] = result.mhv_value;
      manifest["evaluations"] = result.problem->evaluation_count();
      manifest["audit_evaluations"] = result.problem->audit_count();
    }
    manifest["status"] = "ok";
  } catch (const std::exception& e) {
    manifest["status"] = "error";
    manifest["error"] = e.what();
    manifest["finished_utc"] = utc_timestamp();
    manifest["files"] = detail::file_inventory(dir);
    atomic_write(dir / "manifest.json", manifest.dump(2));
    std::cerr << "error: run failed: " << e.what() << "\n";
    return 1;
  }
  manifest["finished_utc"] = utc_timestamp();
  manifest["files"] = detail::file_inventory(dir);
  atomic_write(dir / "manifest.json", manifest.dump(2));
  if (log_verbosity() > 0) std::cout << dir.string() << "\n";
  return 0;
}

inline int cmd_infer(const std::string& checkpoint_path, const std::vector<double>& t_values,
                     int k, const std::string& out_dir) {
  Checkpoint ckpt;
  try {
    ckpt = checkpoint_from_json(parse_json_text(read_file(checkpoint_path), checkpoint_path));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (t_values.empty() || k < 1) {
    std::cerr << "error: infer needs at least one t value and k >= 1\n";
    return 2;
  }
  const fs::path dir = out_dir;
  if (fs::exists(dir)) {
    std::cerr << "error: output directory " << dir << " already exists\n";
    return 2;
  }
  fs::create_directories(dir);

  ProblemPtr problem;
  try {
    problem = make_problem(ckpt.problem, ckpt.problem_params);
  } catch (const std::exception&) {
    problem = nullptr;  // unregistered problem: no audit objectives
  }

  json summary = json::array();
  for (std::size_t i = 0; i < t_values.size(); ++i) {
    Vec tv(ckpt.parameter_box.dim() > 0 ? ckpt.parameter_box.dim() : 1);
    tv.setConstant(t_values[i]);
    const TaskParameter t(tv);
    const bool extrapolated = !ckpt.parameter_box.contains(t.values);
    if (extrapolated)
      std::cerr << "warning: t=" << t_values[i]
                << " lies outside the trained parameter box; inferring anyway\n";

    const auto start = std::chrono::steady_clock::now();
    const auto front = infer_front(ckpt.model, t, k);
    const double wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

    std::vector<FrontPoint> points;
    points.reserve(front.size());
    const bool audit = problem && !extrapolated;
    for (const auto& [lambda, x] : front) {
      FrontPoint pt{lambda.weights, x.values, Vec(0)};
      if (audit) pt.y = problem->evaluate_audit(x, t).values;
      points.push_back(std::move(pt));
    }
    const std::string name = "front_t" + std::to_string(i) + ".csv";
    write_csv(dir / name, detail::front_table(points));
    summary.push_back({{"t", t_values[i]},
                       {"file", name},
                       {"k", k},
                       {"wall_ms", wall_ms},
                       {"extrapolated", extrapolated},
                       {"audit_objectives", audit}});
    if (log_verbosity() > 0)
      std::cout << name << ": " << k << " solutions in " << wall_ms << " ms\n";
  }
  atomic_write(dir / "infer_summary.json", json{{"version", kVersion}, {"fronts", summary}}.dump(2));
  return 0;
}

inline int cmd_eval(const std::string& run_dir) {
  const fs::path dir = run_dir;
  std::vector<std::string> missing;
  for (const char* f : {"manifest.json", "archive.csv", "trace.csv"})
    if (!fs::exists(dir / f)) missing.push_back(f);
  if (!fs::exists(dir / "fronts") || fs::is_empty(dir / "fronts")) missing.push_back("fronts/");
  if (!missing.empty()) {
    std::cerr << "error: run directory incomplete, missing:";
    for (const auto& f : missing) std::cerr << " " << f;
    std::cerr << "\n";
    return 1;
  }

  try {
    const json manifest = parse_json_text(read_file(dir / "manifest.json"), "manifest.json");
    const RunConfig cfg = run_config_from_json(manifest.at("config"));
    ProblemPtr problem = build_problem(cfg);
    CsvTable metrics;
    metrics.header = {"metric", "step", "value"};

    if (manifest.at("mode").get<std::string>() == "static") {
      const auto& heldout = manifest.at("heldout_t");
      for (std::size_t h = 0; h < heldout.size(); ++h) {
        const fs::path f = dir / "fronts" / ("front_h" + std::to_string(h) + ".csv");
        if (!fs::exists(f)) {
          std::cerr << "error: missing " << f << "\n";
          return 1;
        }
        const TaskParameter t(vec_from_json(heldout[h]));
        const auto objs = detail::front_objectives_from_csv(read_csv(f));
        const double hv =
            normalized_hv(nondominated_filter(objs), normalization_from_front(*problem, t));
        metrics.rows.push_back({"normalized_hv", fmt_int(static_cast<long>(h)), fmt_double(hv)});
      }
    } else {
      const CsvTable trace = read_csv(dir / "trace.csv");
      const int tau_col = trace.column("tau");
      const int tenv_col = trace.column("t_env");
      std::vector<double> igds;
      std::vector<std::vector<Vec>> fronts;
      std::vector<Vec> refs;
      for (const auto& row : trace.rows) {
        const long tau = std::strtol(row[tau_col].c_str(), nullptr, 10);
        const double t_env = std::strtod(row[tenv_col].c_str(), nullptr);
        char name[32];
        std::snprintf(name, sizeof(name), "front_g%03ld.csv", tau);
        const fs::path f = dir / "fronts" / name;
        if (!fs::exists(f)) {
          std::cerr << "error: missing " << f << "\n";
          return 1;
        }
        Vec tv(1);
        tv[0] = t_env;
        const TaskParameter t(tv);
        const auto front = nondominated_filter(detail::front_objectives_from_csv(read_csv(f)));
        const auto analytic = problem->analytic_front(t, cfg.igd_reference_points);
        std::vector<Vec> ref_objs;
        for (const auto& fo : analytic) ref_objs.push_back(fo.values);
        const double step_igd = igd(ref_objs, front);
        const double step_hv = hypervolume(front, mhv_reference(analytic));
        metrics.rows.push_back({"igd", fmt_int(tau), fmt_double(step_igd)});
        metrics.rows.push_back({"hv", fmt_int(tau), fmt_double(step_hv)});
        igds.push_back(step_igd);
        fronts.push_back(front);
        refs.push_back(mhv_reference(analytic));
      }
      metrics.rows.push_back({"migd", "-1", fmt_double(migd(igds))});
      metrics.rows.push_back({"mhv", "-1", fmt_double(mhv(fronts, refs))});
    }
    write_csv(dir / "metrics.csv", metrics);
    if (log_verbosity() > 0) std::cout << (dir / "metrics.csv").string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ppsl
