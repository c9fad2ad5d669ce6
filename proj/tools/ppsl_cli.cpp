#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ppsl/ppsl.hpp"

int main(int argc, char** argv) {
  CLI::App app{"PPSL-MOBO: parametric Pareto set learning with multi-objective Bayesian optimization"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_base = "runs";
  auto* run = app.add_subcommand("run", "execute a run described by a JSON config");
  run->add_option("config", config_path, "path to the run config")->required();
  run->add_option("--out", out_base, "base directory for run outputs (default: runs)");

  std::string checkpoint_path;
  std::vector<double> t_values;
  int k = 100;
  std::string infer_out = "inferred";
  auto* infer = app.add_subcommand("infer", "infer Pareto fronts from a checkpoint");
  infer->add_option("checkpoint", checkpoint_path, "path to checkpoint.json")->required();
  infer->add_option("--t", t_values, "task parameter values (comma separated)")
      ->required()
      ->delimiter(',');
  infer->add_option("--k", k, "number of preferences per front (default: 100)");
  infer->add_option("--out", infer_out, "output directory (default: inferred)");

  std::string run_dir;
  auto* eval = app.add_subcommand("eval", "recompute metrics from a run directory");
  eval->add_option("run_dir", run_dir, "path to a completed run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (run->parsed()) return ppsl::cmd_run(config_path, out_base);
  if (infer->parsed()) return ppsl::cmd_infer(checkpoint_path, t_values, k, infer_out);
  return ppsl::cmd_eval(run_dir);
}
