#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "ppsl/dynamic.hpp"
#include "ppsl/runner.hpp"

namespace ppsl {

using nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// formatting / hashing / atomic files
// ---------------------------------------------------------------------------

// 17 significant digits: enough for bit-faithful double round-trips.
inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_int(long v) { return std::to_string(v); }

inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Write-temp-then-rename so partially written files never appear.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
};

inline std::string csv_to_string(const CsvTable& table) {
  std::ostringstream out;
  for (std::size_t i = 0; i < table.header.size(); ++i)
    out << (i ? "," : "") << table.header[i];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
  return out.str();
}

inline void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  atomic_write(path, csv_to_string(table));
}

inline CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.push_back("");
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

inline CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

// ---------------------------------------------------------------------------
// json <-> linear algebra
// ---------------------------------------------------------------------------

inline json vec_to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Vec vec_from_json(const json& a) {
  Vec v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

inline json mat_to_json(const Mat& m) {
  json data = json::array();
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) data.push_back(m(i, j));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline Mat mat_from_json(const json& j) {
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw std::invalid_argument("mat_from_json: data length mismatch");
  Mat m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index j2 = 0; j2 < cols; ++j2)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j2) = data[k++].get<double>();
  return m;
}

inline json box_to_json(const Box& b) {
  return json{{"lb", vec_to_json(b.lb)}, {"ub", vec_to_json(b.ub)}};
}

inline Box box_from_json(const json& j) {
  return Box(vec_from_json(j.at("lb")), vec_from_json(j.at("ub")));
}

// ---------------------------------------------------------------------------
// run configuration
// ---------------------------------------------------------------------------

inline int line_of_offset(const std::string& text, std::size_t offset) {
  int line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

inline json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(origin + ":" + std::to_string(line_of_offset(text, e.byte)) +
                                ": " + e.what());
  }
}

namespace detail {

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void reject_unknown_keys(const json& j, const std::vector<std::string>& known,
                                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& k : known)
      if (it.key() == k) ok = true;
    if (!ok) throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
  }
}

}  // namespace detail

inline RunConfig run_config_from_json(const json& j) {
  detail::reject_unknown_keys(
      j,
      {"problem", "mode", "ablation", "seed", "budget", "n_init", "batch_size", "pool_size",
       "train", "gp", "model", "ideal_epsilon", "heldout_count", "infer_points",
       "igd_reference_points", "dynamic"},
      "top level");
  RunConfig cfg;
  if (j.contains("problem")) {
    const auto& p = j.at("problem");
    if (p.is_string()) {
      cfg.problem = p.get<std::string>();
    } else {
      detail::reject_unknown_keys(p, {"name", "params"}, "problem");
      cfg.problem = p.at("name").get<std::string>();
      if (p.contains("params"))
        for (auto it = p.at("params").begin(); it != p.at("params").end(); ++it)
          cfg.problem_params[it.key()] = it.value().get<double>();
    }
  }
  if (j.contains("mode")) {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "static")
      cfg.mode = RunMode::static_mode;
    else if (mode == "dynamic")
      cfg.mode = RunMode::dynamic_mode;
    else
      throw std::invalid_argument("config: mode must be 'static' or 'dynamic'");
  }
  if (j.contains("ablation")) cfg.ablation = ablation_mode(j.at("ablation").get<std::string>());
  detail::read_field(j, "seed", cfg.seed);
  detail::read_field(j, "budget", cfg.budget);
  detail::read_field(j, "n_init", cfg.n_init);
  detail::read_field(j, "batch_size", cfg.batch_size);
  detail::read_field(j, "pool_size", cfg.pool_size);
  detail::read_field(j, "ideal_epsilon", cfg.ideal_epsilon);
  detail::read_field(j, "heldout_count", cfg.heldout_count);
  detail::read_field(j, "infer_points", cfg.infer_points);
  detail::read_field(j, "igd_reference_points", cfg.igd_reference_points);

  if (j.contains("train")) {
    const auto& t = j.at("train");
    detail::reject_unknown_keys(
        t, {"n_tasks", "n_prefs", "steps", "eta_base", "eta_hypernet", "nu", "beta"}, "train");
    detail::read_field(t, "n_tasks", cfg.train.n_tasks);
    detail::read_field(t, "n_prefs", cfg.train.n_prefs);
    detail::read_field(t, "steps", cfg.train.steps);
    detail::read_field(t, "eta_base", cfg.train.eta_base);
    detail::read_field(t, "eta_hypernet", cfg.train.eta_hypernet);
    detail::read_field(t, "nu", cfg.train.nu);
    detail::read_field(t, "beta", cfg.train.beta);
    cfg.train.validate();
  }
  if (j.contains("gp")) {
    const auto& g = j.at("gp");
    detail::reject_unknown_keys(
        g, {"kernel", "noise_variance", "learn_noise", "mll_steps", "mll_step_size", "restarts"},
        "gp");
    if (g.contains("kernel")) cfg.gp.kernel = kernel_from_string(g.at("kernel").get<std::string>());
    detail::read_field(g, "noise_variance", cfg.gp.noise_variance);
    detail::read_field(g, "learn_noise", cfg.gp.learn_noise);
    detail::read_field(g, "mll_steps", cfg.gp.mll_steps);
    detail::read_field(g, "mll_step_size", cfg.gp.mll_step_size);
    detail::read_field(g, "restarts", cfg.gp.restarts);
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    detail::reject_unknown_keys(m, {"ps_hidden", "hn_hidden", "rank"}, "model");
    detail::read_field(m, "ps_hidden", cfg.ps_hidden);
    detail::read_field(m, "hn_hidden", cfg.hn_hidden);
    detail::read_field(m, "rank", cfg.rank);
  }
  if (j.contains("dynamic")) {
    const auto& d = j.at("dynamic");
    detail::reject_unknown_keys(d, {"n_t", "tau_t", "t_max", "preset"}, "dynamic");
    detail::read_field(d, "n_t", cfg.dynamic.n_t);
    detail::read_field(d, "tau_t", cfg.dynamic.tau_t);
    detail::read_field(d, "t_max", cfg.dynamic.t_max);
    if (d.contains("preset")) {
      const std::string preset = d.at("preset").get<std::string>();
      if (preset == "df-protocol") {
        // Appendix-style benchmark protocol: n=10 decision variables, 20
        // environment changes at frequency tau_t=2.
        cfg.dynamic = DynamicSpec{20, 2, 42};
        if (cfg.problem == "synth-d1" && !cfg.problem_params.count("n"))
          cfg.problem_params["n"] = 10;
      } else if (preset != "none") {
        throw std::invalid_argument("config: unknown dynamic preset '" + preset + "'");
      }
    }
    cfg.dynamic.validate();
  }
  return cfg;
}

inline json run_config_to_json(const RunConfig& cfg) {
  json params = json::object();
  for (const auto& [k, v] : cfg.problem_params) params[k] = v;
  return json{
      {"problem", {{"name", cfg.problem}, {"params", params}}},
      {"mode", cfg.mode == RunMode::static_mode ? "static" : "dynamic"},
      {"ablation", to_string(cfg.ablation)},
      {"seed", cfg.seed},
      {"budget", cfg.budget},
      {"n_init", cfg.n_init},
      {"batch_size", cfg.batch_size},
      {"pool_size", cfg.pool_size},
      {"train",
       {{"n_tasks", cfg.train.n_tasks},
        {"n_prefs", cfg.train.n_prefs},
        {"steps", cfg.train.steps},
        {"eta_base", cfg.train.eta_base},
        {"eta_hypernet", cfg.train.eta_hypernet},
        {"nu", cfg.train.nu},
        {"beta", cfg.train.beta}}},
      {"gp",
       {{"kernel", to_string(cfg.gp.kernel)},
        {"noise_variance", cfg.gp.noise_variance},
        {"learn_noise", cfg.gp.learn_noise},
        {"mll_steps", cfg.gp.mll_steps},
        {"mll_step_size", cfg.gp.mll_step_size},
        {"restarts", cfg.gp.restarts}}},
      {"model", {{"ps_hidden", cfg.ps_hidden}, {"hn_hidden", cfg.hn_hidden}, {"rank", cfg.rank}}},
      {"ideal_epsilon", cfg.ideal_epsilon},
      {"heldout_count", cfg.heldout_count},
      {"infer_points", cfg.infer_points},
      {"igd_reference_points", cfg.igd_reference_points},
      {"dynamic",
       {{"n_t", cfg.dynamic.n_t}, {"tau_t", cfg.dynamic.tau_t}, {"t_max", cfg.dynamic.t_max}}}};
}

// ---------------------------------------------------------------------------
// checkpoint
// ---------------------------------------------------------------------------

inline json psmodel_to_json(const ParametricPsModel& model) {
  json layers = json::array();
  for (const auto& s : model.layer_specs()) layers.push_back({{"in", s.in_dim}, {"out", s.out_dim}});
  json base_w = json::array(), base_b = json::array();
  for (const auto& w : model.base_weights().w) base_w.push_back(mat_to_json(w));
  for (const auto& b : model.base_weights().b) base_b.push_back(vec_to_json(b));
  json hn_w = json::array(), hn_b = json::array();
  for (const auto& w : model.hypernet().weights().w) hn_w.push_back(mat_to_json(w));
  for (const auto& b : model.hypernet().weights().b) hn_b.push_back(vec_to_json(b));
  return json{{"layers", layers},
              {"rank", model.rank()},
              {"decision_box", box_to_json(model.decision_box())},
              {"base", {{"w", base_w}, {"b", base_b}}},
              {"hypernet", {{"w", hn_w}, {"b", hn_b}}}};
}

inline ParametricPsModel psmodel_from_json(const json& j) {
  std::vector<MlpLayerSpec> layers;
  for (const auto& l : j.at("layers"))
    layers.push_back({l.at("in").get<int>(), l.at("out").get<int>()});
  BaseWeights base;
  for (const auto& w : j.at("base").at("w")) base.w.push_back(mat_from_json(w));
  for (const auto& b : j.at("base").at("b")) base.b.push_back(vec_from_json(b));
  MlpWeights hn;
  for (const auto& w : j.at("hypernet").at("w")) hn.w.push_back(mat_from_json(w));
  for (const auto& b : j.at("hypernet").at("b")) hn.b.push_back(vec_from_json(b));
  return ParametricPsModel(std::move(layers), std::move(base), HyperNetwork(std::move(hn)),
                           j.at("rank").get<int>(), box_from_json(j.at("decision_box")));
}

inline json surrogate_to_json(const GaussianSurrogate& s) {
  json models = json::array();
  for (const auto& gp : s.models()) {
    models.push_back({{"kernel", to_string(gp.kernel())},
                      {"lengthscales", vec_to_json(gp.hyper().lengthscales)},
                      {"signal_variance", gp.hyper().signal_variance},
                      {"noise_variance", gp.hyper().noise_variance},
                      {"constant_mean", gp.hyper().constant_mean},
                      {"inputs", mat_to_json(gp.train_inputs())},
                      {"targets", vec_to_json(gp.train_targets_raw())}});
  }
  return json{{"decision_box", box_to_json(s.decision_box())},
              {"parameter_box", box_to_json(s.parameter_box())},
              {"models", models}};
}

inline GaussianSurrogate surrogate_from_json(const json& j) {
  std::vector<GpModel> models;
  for (const auto& mj : j.at("models")) {
    GpHyperparameters h;
    h.lengthscales = vec_from_json(mj.at("lengthscales"));
    h.signal_variance = mj.at("signal_variance").get<double>();
    h.noise_variance = mj.at("noise_variance").get<double>();
    h.constant_mean = mj.at("constant_mean").get<double>();
    models.emplace_back(kernel_from_string(mj.at("kernel").get<std::string>()), std::move(h),
                        mat_from_json(mj.at("inputs")), vec_from_json(mj.at("targets")));
  }
  return GaussianSurrogate::from_models(std::move(models), box_from_json(j.at("decision_box")),
                                        box_from_json(j.at("parameter_box")));
}

inline json checkpoint_to_json(const RunConfig& cfg, const ParametricPsModel& model,
                               const GaussianSurrogate& surrogate, const Box& parameter_box) {
  json params = json::object();
  for (const auto& [k, v] : cfg.problem_params) params[k] = v;
  json j{{"format", "ppsl-checkpoint-v1"},
         {"version", kVersion},
         {"problem", {{"name", cfg.problem}, {"params", params}}},
         {"parameter_box", box_to_json(parameter_box)},
         {"psmodel", psmodel_to_json(model)}};
  if (surrogate.fitted()) j["surrogate"] = surrogate_to_json(surrogate);
  return j;
}

struct Checkpoint {
  std::string problem;
  std::map<std::string, double> problem_params;
  Box parameter_box;
  ParametricPsModel model;
  GaussianSurrogate surrogate;  // optional; unfitted when absent
};

inline Checkpoint checkpoint_from_json(const json& j) {
  if (!j.contains("format") || j.at("format").get<std::string>() != "ppsl-checkpoint-v1")
    throw std::invalid_argument("checkpoint: unknown format");
  Checkpoint c;
  c.problem = j.at("problem").at("name").get<std::string>();
  for (auto it = j.at("problem").at("params").begin(); it != j.at("problem").at("params").end(); ++it)
    c.problem_params[it.key()] = it.value().get<double>();
  c.parameter_box = box_from_json(j.at("parameter_box"));
  c.model = psmodel_from_json(j.at("psmodel"));
  if (j.contains("surrogate")) c.surrogate = surrogate_from_json(j.at("surrogate"));
  return c;
}

}  // namespace ppsl
