// Fixed-grid Euler-Maruyama time stepping for the base jump diffusion and the
// variation / parameter-sensitivity systems simulated jointly with it.
#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "jumpgrad/linalg.hpp"
#include "jumpgrad/model.hpp"
#include "jumpgrad/rng.hpp"

namespace jumpgrad {

struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SimConfig {
  std::size_t n_steps = 400;  // uniform grid on [0, horizon]
  bool record_path = false;

  double dt(double horizon) const { return horizon / static_cast<double>(n_steps); }
  // Number of grid steps for a sub-interval at (approximately) the same
  // resolution as the [0, horizon] grid.
  std::size_t steps_for(double t0, double t1, double horizon) const {
    const double span = t1 - t0;
    if (span <= 0.0) return 0;
    const double h = dt(horizon);
    auto k = static_cast<std::size_t>(std::ceil(span / h - 1e-12));
    return k == 0 ? 1 : k;
  }
};

// Upper-triangular pair index for symmetric (a,b) storage, a <= b.
inline std::size_t tri_index(std::size_t a, std::size_t b, std::size_t d) {
  return a * d - a * (a + 1) / 2 + b;
}
inline std::size_t tri_size(std::size_t d) { return d * (d + 1) / 2; }

// Joint state (X, grad X, H[X]) of the base process and its first/second
// variation flows. hess_x stores, per component i, only the upper triangle of
// the symmetric (a,b) block: total scalar count d + d^2 + d * d(d+1)/2.
struct AugmentedState {
  Vec x;                      // d
  Mat grad_x;                 // d x d, [i][a] = d_a X_i
  std::vector<double> hess_x; // d * tri_size(d), [i * tri + tri_index(a,b)]
  double t = 0.0;
  bool has_hess = false;

  double hess(std::size_t i, std::size_t a, std::size_t b, std::size_t d) const {
    if (a > b) std::swap(a, b);
    return hess_x[i * tri_size(d) + tri_index(a, b, d)];
  }
  std::size_t scalar_count() const {
    const std::size_t d = x.size();
    return d + d * d + (has_hess ? d * tri_size(d) : 0);
  }
};

// Joint state (X, d_theta X) for pathwise differentiation.
struct PathwiseState {
  Vec x;          // d
  Mat dtheta_x;   // n x d, [k][i] = d_{theta_k} X_i
  double t = 0.0;

  std::size_t scalar_count() const { return x.size() + dtheta_x.data.size(); }
};

// Stream bundle for one simulation. Z-path simulations inside an estimator
// draw from separate purposes (and salts) so they never perturb the base
// path's draws.
struct SimStreams {
  rng::Stream brownian, jump_count, marks, comp_mark;
};

inline SimStreams make_sim_streams(std::uint64_t seed, std::uint64_t replication,
                                   bool z_path = false, std::uint32_t salt = 0) {
  using rng::Purpose;
  if (z_path)
    return {rng::Stream(seed, replication, Purpose::kZBrownian, salt),
            rng::Stream(seed, replication, Purpose::kZJumpCount, salt),
            rng::Stream(seed, replication, Purpose::kZMarks, salt),
            rng::Stream(seed, replication, Purpose::kZCompensatorMark, salt)};
  return {rng::Stream(seed, replication, Purpose::kBrownian, salt),
          rng::Stream(seed, replication, Purpose::kJumpCount, salt),
          rng::Stream(seed, replication, Purpose::kMarks, salt),
          rng::Stream(seed, replication, Purpose::kCompensatorMark, salt)};
}

// Observers see the state at each left grid point (step index, time, state),
// i.e. before the step is taken; suitable for left-endpoint time integrals.
using BaseObserver = std::function<void(std::size_t, double, const Vec&)>;
using AugmentedObserver = std::function<void(std::size_t, double, const AugmentedState&)>;
using PathwiseObserver = std::function<void(std::size_t, double, const PathwiseState&)>;

// Euler path of the base SDE on [t0, t1]; returns the terminal state. theta
// is passed explicitly so finite-difference callers can shift it under common
// random numbers. If path != nullptr the full grid path (including x0) is
// stored there.
Vec simulate_base(const ModelSpec& model, const Vec& theta, const Vec& x0, double t0,
                  double t1, const SimConfig& cfg, SimStreams& streams,
                  const BaseObserver& observer = nullptr,
                  std::vector<Vec>* path = nullptr);

// Jointly steps (X, grad X[, H[X]]) with shared draws. At zero elapsed time
// grad_x is the identity and hess_x zero. with_hess requires the model's dxx
// evaluators.
AugmentedState simulate_augmented(const ModelSpec& model, const Vec& theta, const Vec& x0,
                                  double t0, double t1, const SimConfig& cfg,
                                  SimStreams& streams, bool with_hess,
                                  const AugmentedObserver& observer = nullptr);

// Jointly steps (X, d_theta X) with shared draws; d_theta X starts at zero.
PathwiseState simulate_pathwise(const ModelSpec& model, const Vec& theta, const Vec& x0,
                                double t0, double t1, const SimConfig& cfg,
                                SimStreams& streams,
                                const PathwiseObserver& observer = nullptr);

}  // namespace jumpgrad
