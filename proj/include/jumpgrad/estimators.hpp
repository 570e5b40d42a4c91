// Gradient estimators for parameterized jump diffusions:
//   - generator-gradient (GG): randomizes the time integral of the
//     theta-derivative of the generator, contracting against the pathwise
//     functionals Z and H built from the variation flows;
//   - pathwise differentiation (PD): joint simulation of (X, d_theta X);
//   - central finite differences (FD): value-function differences under
//     common random numbers, O(h^2) biased, used as an oracle.
#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "jumpgrad/linalg.hpp"
#include "jumpgrad/model.hpp"
#include "jumpgrad/sim.hpp"

namespace jumpgrad::est {

enum class EstimatorKind { kGG, kPD, kFD };

struct EstimatorConfig {
  SimConfig sim;
  std::uint64_t master_seed = 0;
  // GG: randomize the reward-rate integral with an independent uniform time
  // instead of accumulating it on the grid. Lower variance when off.
  bool randomize_reward_integral = false;
  // PD: single-tau randomized form instead of the full time integral.
  bool pd_randomize_time = false;
  // Jump part of GG: share the Z-path noise between the draw at X(tau) and
  // the shifted draw at X(tau) + chi (variance experiment; default
  // independent draws).
  bool coupled_jump_z = false;
  double fd_h = 0.05;
  int workers = 1;  // replication fan-out inside value/FD estimation
};

struct SampleDraw {
  Vec gradient;                        // R^n
  double tau = 0.0;                    // randomized time (GG / randomized PD)
  std::uint64_t replication_index = 0;
};

// Realization of the Z (and optionally H) functionals at (t,x).
struct ZHValue {
  Vec z;   // R^d
  Mat h;   // d x d, symmetric; empty unless has_h
  bool has_h = false;
};

struct GradientEstimate {
  Vec mean, se, ci95_halfwidth;
  std::size_t n_samples = 0;
  double wall_seconds = 0.0;
  EstimatorKind kind = EstimatorKind::kGG;
};

struct ComparisonReport {
  Vec se_gg, se_pd;
  Vec ratio;                  // se_gg / se_pd per coordinate
  std::vector<bool> ratio_missing;
  double avg_se_gg = 0.0, avg_se_pd = 0.0;
  double avg_ratio = 0.0;     // over coordinates with a defined ratio
  std::size_t n_missing = 0;
  // Shared fixed binning over both SE samples, for histogram export.
  Vec bin_edges;
  std::vector<std::size_t> hist_gg, hist_pd;
};

// Counts sample_Z_H invocations that simulated the second variation; lets
// tests assert the d+d^2 shortcut when sigma is theta-independent.
extern std::atomic<std::uint64_t> h_request_count;

// Monte Carlo estimate of v(0,x0) = E[int rho dt + g(X(T))], left-endpoint
// rule on the Euler grid. Returns (mean, se). Requires n_samples >= 2.
std::pair<double, double> value_estimate(const ModelSpec& model, const Vec& x0,
                                         const EstimatorConfig& cfg,
                                         std::size_t n_samples);

// Single-replication cumulative reward along one base path with the given
// theta (exposed for CRN finite differencing).
double value_sample(const ModelSpec& model, const Vec& theta, const Vec& x0,
                    const EstimatorConfig& cfg, std::uint64_t replication);

// One realization of Z(t,x) (and H(t,x) when need_h) by simulating the
// augmented system on [t, T]. salt separates independent Z draws within one
// replication.
ZHValue sample_Z_H(const ModelSpec& model, const Vec& theta, double t, const Vec& x,
                   const EstimatorConfig& cfg, std::uint64_t replication, bool need_h,
                   std::uint32_t salt = 0);

// One generator-gradient draw D(x0).
SampleDraw gg_sample(const ModelSpec& model, const Vec& x0, const EstimatorConfig& cfg,
                     std::uint64_t replication);

// One pathwise-differentiation draw.
SampleDraw pd_sample(const ModelSpec& model, const Vec& x0, const EstimatorConfig& cfg,
                     std::uint64_t replication);

// Central finite differences of value_estimate at theta +- h/2 e_k under
// common random numbers; O(h^2) bias in h.
GradientEstimate fd_estimate(const ModelSpec& model, const Vec& x0, double h,
                             const EstimatorConfig& cfg, std::size_t n_samples);

// Per-coordinate mean and SE = sd/sqrt(N) with a deterministic pairwise tree
// reduction in replication-index order. Requires >= 2 samples.
GradientEstimate mc_aggregate(const std::vector<SampleDraw>& samples,
                              EstimatorKind kind, double wall_seconds = 0.0);

ComparisonReport se_comparison(const std::vector<SampleDraw>& gg,
                               const std::vector<SampleDraw>& pd,
                               std::size_t n_bins = 30);

}  // namespace jumpgrad::est
