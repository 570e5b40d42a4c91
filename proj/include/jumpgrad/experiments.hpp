// Configuration-driven experiment runner: reproduces the CIR / ReLU gradient
// tables, the LQ standard-error comparison, and the runtime-scaling benchmark
// as CSV artifacts (with JSON mirrors), and hosts the model validation and
// training-demo entry points used by the CLI.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace jumpgrad::exp {

struct ExperimentConfig {
  std::string experiment;  // cir | relu | lq_bench | timing | validate | train_demo
  std::uint64_t master_seed = 1;
  std::size_t n_samples = 0;  // 0 = experiment default
  std::size_t n_steps = 0;    // 0 = experiment default
  double fd_h = 0.05;
  std::vector<std::string> estimators;  // subset of {gg,pd,fd}; empty = default
  std::vector<double> thetas;           // cir/relu sweep; empty = table defaults
  std::vector<std::size_t> n_grid;      // lq_bench/timing parameter-count grid
  std::vector<std::size_t> widths;      // LQ policy hidden widths override
  bool randomize_reward_integral = true;  // LQ reward-rate randomization
  bool record_path = false;               // dump one sample path per model run
  double x0_override = 0.0;
  bool has_x0_override = false;
  double horizon_override = 0.0;
  bool has_horizon_override = false;
  std::size_t train_steps = 20;     // train_demo
  double learning_rate = 0.05;      // train_demo
  int workers = 1;                  // 0 = auto
  std::string output_dir = "out";
};

// Parses the merged JSON document (config file with CLI overrides already
// applied). Unknown keys are an error; kebab-case keys as documented in the
// README. Throws std::runtime_error with the offending field on bad input.
ExperimentConfig config_from_json(const nlohmann::json& j);

// Canonical serialization of the effective config; hashing it gives the
// provenance line in every artifact.
nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

inline constexpr const char* kVersion = "0.1.0";

// Tabular artifact written as <dir>/<name>.csv (header + provenance comment
// lines) and mirrored to <dir>/<name>.json.
struct Artifact {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

void write_artifact(const Artifact& a, const ExperimentConfig& cfg);

std::string fmt(double v);  // shortest round-trippable decimal

// Runs the configured experiment, writing artifacts into cfg.output_dir.
// Returns 0 on success, 2 when a validation experiment fails its checks.
// Errors (bad config, filesystem, non-finite samples) throw.
int run_experiment(const ExperimentConfig& cfg);

}  // namespace jumpgrad::exp
