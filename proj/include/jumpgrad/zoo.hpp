// Ready-made models: the linear-quadratic control benchmark with a neural
// policy, the CIR and ReLU-drift one-dimensional experiments, and small
// validation models (GBM, a discrete-mark jump model).
#pragma once

#include <cstdint>

#include "jumpgrad/mlp.hpp"
#include "jumpgrad/model.hpp"

namespace jumpgrad::zoo {

struct LqSpec {
  Mat A, B, C;      // dynamics dX = (A x + B u) dt + C dB
  Mat Q, Q_T, R;    // running cost x'Qx + u'Ru, terminal x'Q_T x
  Vec x0;
  double T = 1.0;
  nn::MlpSpec policy;
  Vec policy_theta;  // flattened network parameters (the model's theta)
};

// Canonical instance: 2D point mass (positions + velocities), force control,
// 4 hidden layers. widths sized so the parameter count lands near
// param_target (exactly 102 for the smallest instance).
LqSpec default_lq(std::size_t param_target = 102, std::uint64_t init_seed = 42);

ModelSpec build_lq(const LqSpec& spec);

struct CirSpec {
  double theta = 4.0;
  double x0 = 0.1;
  double T = 2.0;
};
// dX = (theta - X) dt + sqrt(X) dB, reward rate rho = x; positivity kept by
// clamping the discretized state to its absolute value.
ModelSpec build_cir(const CirSpec& spec);

struct ReluDriftSpec {
  double theta = 1.0;
  double x0 = -0.1;
  double T = 2.0;
};
// dX = (ReLU(theta X) + 1) dt + dB, reward rate rho = x. The drift kink uses
// the a.e. convention 1{theta x > 0}.
ModelSpec build_relu(const ReluDriftSpec& spec);

// dX = theta X dt + sigma0 X dB, terminal reward g(x) = x. Closed form:
// d/dtheta E g(X(T)) = x0 T e^{theta T}.
ModelSpec build_gbm(double theta, double sigma0, double T);

// d = 1 jump model exercising the jump part of the generator gradient with
// exact atom sums: dX = (theta - X) dt + 0.3 dB + compensated jumps with
// marks z in {-1, +1}, weights 1/2 each, chi = 0.2 theta z; rho = x.
ModelSpec build_jump_test(double theta, double T = 1.0);

}  // namespace jumpgrad::zoo
