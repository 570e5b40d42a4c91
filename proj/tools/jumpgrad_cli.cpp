// Command-line front end.
//
//   jumpgrad run --config cfg.json [--experiment NAME] [--seed S]
//                [--workers N] [--out DIR] [...field overrides]
//   jumpgrad validate [--seed S] [--out DIR]
//
// Exit codes: 0 success, 2 validation failure, 1 any other error.
// JUMPGRAD_WORKERS provides the default for --workers.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "jumpgrad/experiments.hpp"

namespace {

using nlohmann::json;

int default_workers() {
  if (const char* env = std::getenv("JUMPGRAD_WORKERS")) {
    try {
      return std::stoi(env);
    } catch (...) {
      std::cerr << "warning: ignoring non-numeric JUMPGRAD_WORKERS='" << env << "'\n";
    }
  }
  return 1;
}

struct Overrides {
  std::optional<std::string> experiment, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::size_t> n_samples, n_steps, train_steps;
  std::optional<double> fd_h, theta, x0, horizon, learning_rate;
  std::optional<std::vector<double>> thetas;
  std::optional<std::vector<std::size_t>> n_grid, widths;
  std::optional<std::vector<std::string>> estimators;
  std::optional<bool> randomize_reward_integral, record_path;
};

void add_override_flags(CLI::App& cmd, Overrides& o) {
  cmd.add_option("--experiment", o.experiment, "experiment name");
  cmd.add_option("--seed", o.seed, "master RNG seed");
  cmd.add_option("--workers", o.workers, "replication fan-out (0 = all cores)");
  cmd.add_option("--out", o.out, "output directory");
  cmd.add_option("--n-samples", o.n_samples, "Monte Carlo sample count");
  cmd.add_option("--n-steps", o.n_steps, "Euler grid steps");
  cmd.add_option("--fd-h", o.fd_h, "finite-difference step");
  cmd.add_option("--theta", o.theta, "single model parameter value");
  cmd.add_option("--thetas", o.thetas, "parameter sweep values")->delimiter(',');
  cmd.add_option("--n-grid", o.n_grid, "parameter-count grid")->delimiter(',');
  cmd.add_option("--widths", o.widths, "LQ policy hidden widths")->delimiter(',');
  cmd.add_option("--estimators", o.estimators, "subset of gg,pd,fd")->delimiter(',');
  cmd.add_option("--x0", o.x0, "initial state (scalar models)");
  cmd.add_option("--horizon", o.horizon, "time horizon T");
  cmd.add_option("--train-steps", o.train_steps, "train_demo descent steps");
  cmd.add_option("--learning-rate", o.learning_rate, "train_demo step size");
  cmd.add_flag("--randomize-reward-integral,!--no-randomize-reward-integral",
               o.randomize_reward_integral, "randomize the reward-rate time integral");
  cmd.add_flag("--record-path", o.record_path, "dump one sample path per model");
}

void apply(const Overrides& o, json& j) {
  if (o.experiment) j["experiment"] = *o.experiment;
  if (o.seed) j["seed"] = *o.seed;
  if (o.workers) j["workers"] = *o.workers;
  if (o.out) j["out"] = *o.out;
  if (o.n_samples) j["n-samples"] = *o.n_samples;
  if (o.n_steps) j["n-steps"] = *o.n_steps;
  if (o.fd_h) j["fd-h"] = *o.fd_h;
  if (o.theta) j["theta"] = *o.theta;
  if (o.thetas) j["thetas"] = *o.thetas;
  if (o.n_grid) j["n-grid"] = *o.n_grid;
  if (o.widths) j["widths"] = *o.widths;
  if (o.estimators) j["estimators"] = *o.estimators;
  if (o.x0) j["x0"] = *o.x0;
  if (o.horizon) j["horizon"] = *o.horizon;
  if (o.train_steps) j["train-steps"] = *o.train_steps;
  if (o.learning_rate) j["learning-rate"] = *o.learning_rate;
  if (o.randomize_reward_integral)
    j["randomize-reward-integral"] = *o.randomize_reward_integral;
  if (o.record_path) j["record-path"] = *o.record_path;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo gradient estimation for parameterized jump diffusions"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides run_o, val_o;

  CLI::App* run = app.add_subcommand("run", "run a configured experiment");
  run->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  add_override_flags(*run, run_o);

  CLI::App* validate =
      app.add_subcommand("validate", "check every model's analytic derivatives");
  validate->add_option("--seed", val_o.seed, "master RNG seed");
  validate->add_option("--out", val_o.out, "output directory");
  validate->add_option("--workers", val_o.workers, "replication fan-out");

  CLI11_PARSE(app, argc, argv);

  try {
    json j = json::object();
    const Overrides& o = run->parsed() ? run_o : val_o;
    if (run->parsed() && !config_path.empty()) {
      std::ifstream in(config_path);
      try {
        j = json::parse(in);
      } catch (const json::parse_error& e) {
        std::cerr << "error: " << config_path << ": " << e.what() << "\n";
        return 1;
      }
    }
    if (!run->parsed()) j["experiment"] = "validate";
    apply(o, j);
    if (!j.contains("workers")) j["workers"] = default_workers();

    const auto cfg = jumpgrad::exp::config_from_json(j);
    return jumpgrad::exp::run_experiment(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
