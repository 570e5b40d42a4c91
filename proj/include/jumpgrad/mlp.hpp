// Minimal fully-connected network u(t, x) with exact parameter gradients and
// input Jacobians (manual reverse accumulation). Used as the control policy
// in the linear-quadratic experiment.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jumpgrad/linalg.hpp"

namespace jumpgrad::nn {

enum class Activation { kTanh, kRelu, kIdentity };

struct MlpSpec {
  std::size_t input_dim = 0;   // 1 + d (time prepended to state)
  std::vector<std::size_t> hidden_widths;
  std::size_t output_dim = 0;  // m
  Activation activation = Activation::kTanh;
  std::uint64_t init_seed = 0;

  // Flattened parameter count: sum over layers of (fan_in + 1) * fan_out.
  std::size_t param_count() const;
  // Layer sizes including input and output.
  std::vector<std::size_t> layer_dims() const;
};

// Parameters flattened layer-major: for each layer, weights row-major
// (fan_out rows of fan_in), then the bias (fan_out).
struct FlatParams {
  Vec theta;
};

// Seed-deterministic init: uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
FlatParams init_params(const MlpSpec& spec);

// Reusable scratch to avoid per-call allocation in hot loops.
struct MlpWorkspace {
  std::vector<Vec> pre;   // pre-activation per layer
  std::vector<Vec> act;   // post-activation per layer (act[0] = input)
  std::vector<Vec> bar;   // adjoints
};

void forward(const MlpSpec& spec, const Vec& theta, double t, const Vec& x, Vec& out,
             MlpWorkspace& ws);
Vec forward(const MlpSpec& spec, const Vec& theta, double t, const Vec& x);

// Derivatives of every output: one reverse sweep per output row yields both
// the parameter gradient row (m x n) and the full input gradient, from which
// the x block (m x d) and the t column (m) are split out. Null outputs are
// skipped.
void gradients(const MlpSpec& spec, const Vec& theta, double t, const Vec& x,
               Vec* value,        // m, may be null
               Mat* grad_theta,   // m x n, may be null
               Mat* jac_x,        // m x d, may be null
               Vec* jac_t,        // m, may be null
               MlpWorkspace& ws);

Mat grad_theta(const MlpSpec& spec, const Vec& theta, double t, const Vec& x);
Mat jac_x(const MlpSpec& spec, const Vec& theta, double t, const Vec& x);

// Flat binary parameter file: 8-byte magic "JGMLPv1\0", uint64 n
// little-endian, then n little-endian doubles.
void save_params(const std::string& path, const Vec& theta);
Vec load_params(const std::string& path);
void export_params_csv(const std::string& path, const Vec& theta);

}  // namespace jumpgrad::nn
