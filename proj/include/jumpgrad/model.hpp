// Model interface: a parameterized jump diffusion
//   dX = mu(t,X,theta) dt + sigma(t,X,theta) dB + jump terms
// together with running/terminal rewards. A model supplies coefficient
// values and the space/parameter derivatives the estimators contract
// against; derivatives are analytic (validated against finite differences
// by validate_model, see below).
//
// Index conventions, fixed across the library:
//   drift      value  mu[i]                    (length d)
//              dx     (i,l)   = d_l mu_i       (d x d)
//              dxx    (i,l,m) = d_m d_l mu_i   (d x d x d, symmetric in l,m)
//              dtheta (k,i)   = d_{theta_k} mu_i  (n x d)
//   volatility value  (i,k)   = sigma_{i,k}    (d x d')
//              dx     (i,k,l) = d_l sigma_{i,k}   (d x d' x d)
//              dxx    (i,k,l,m)                    (d x d' x d x d)
//              dtheta (k,i,j) = d_{theta_k} sigma_{i,j}  (n x d x d')
//   jump chi(t,x,z): same layout as the drift, with the mark z as an
//              extra argument.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "jumpgrad/linalg.hpp"
#include "jumpgrad/rng.hpp"

namespace jumpgrad {

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DriftEval {
  std::function<void(double t, const Vec& x, const Vec& th, Vec& out)> value;
  std::function<void(double t, const Vec& x, const Vec& th, Mat& out)> dx;
  std::function<void(double t, const Vec& x, const Vec& th, Tens3& out)> dxx;
  std::function<void(double t, const Vec& x, const Vec& th, Mat& out)> dtheta;
};

struct VolEval {
  std::function<void(double t, const Vec& x, const Vec& th, Mat& out)> value;
  std::function<void(double t, const Vec& x, const Vec& th, Tens3& out)> dx;
  std::function<void(double t, const Vec& x, const Vec& th, Tens4& out)> dxx;
  std::function<void(double t, const Vec& x, const Vec& th, Tens3& out)> dtheta;
};

struct JumpEval {
  std::function<void(double t, const Vec& x, const Vec& th, const Vec& z, Vec& out)> value;
  std::function<void(double t, const Vec& x, const Vec& th, const Vec& z, Mat& out)> dx;
  std::function<void(double t, const Vec& x, const Vec& th, const Vec& z, Tens3& out)> dxx;
  std::function<void(double t, const Vec& x, const Vec& th, const Vec& z, Mat& out)> dtheta;
};

struct RewardEval {
  // Running reward rate rho(t,x,theta).
  std::function<double(double t, const Vec& x, const Vec& th)> rho;
  std::function<void(double t, const Vec& x, const Vec& th, Vec& out)> rho_grad;
  std::function<void(double t, const Vec& x, const Vec& th, Mat& out)> rho_hess;
  std::function<void(double t, const Vec& x, const Vec& th, Vec& out)> rho_dtheta;
  // Terminal reward g(x,theta).
  std::function<double(const Vec& x, const Vec& th)> g;
  std::function<void(const Vec& x, const Vec& th, Vec& out)> g_grad;
  std::function<void(const Vec& x, const Vec& th, Mat& out)> g_hess;
  std::function<void(const Vec& x, const Vec& th, Vec& out)> g_dtheta;
};

// Finite-activity jump specification: total intensity lambda together with a
// mark distribution, either a finite atom list or a sampler for nu/lambda.
struct DiscreteMarks {
  std::vector<Vec> atoms;       // each in R^{d'}
  std::vector<double> weights;  // > 0, sum == rate
};

struct ContinuousMarks {
  std::function<Vec(rng::Stream&)> sample;  // draws z ~ nu/lambda
};

struct JumpSpec {
  double rate = 0.0;  // nu(R^{d'} \ {0})
  std::variant<DiscreteMarks, ContinuousMarks> marks;
  bool compensated = true;

  bool discrete() const { return std::holds_alternative<DiscreteMarks>(marks); }
  const DiscreteMarks& discrete_marks() const { return std::get<DiscreteMarks>(marks); }
  const ContinuousMarks& continuous_marks() const { return std::get<ContinuousMarks>(marks); }
};

struct ModelSpec {
  std::size_t dim_state = 1;   // d
  std::size_t dim_noise = 1;   // d'
  std::size_t dim_param = 1;   // n
  double horizon = 1.0;        // T
  Vec theta;                   // evaluation point, length n
  bool sigma_theta_dependent = false;

  DriftEval drift;
  VolEval vol;
  JumpEval jump_coeff;  // only consulted when jump is set
  RewardEval reward;
  std::optional<JumpSpec> jump;

  // Applied after every Euler step when set (e.g. |x| for CIR positivity).
  std::function<void(Vec&)> clamp_fn;

  void check_dims() const {
    if (dim_state < 1 || dim_noise < 1 || dim_param < 1)
      throw std::invalid_argument("ModelSpec: dimensions must be >= 1");
    if (horizon <= 0.0) throw std::invalid_argument("ModelSpec: horizon must be > 0");
    if (theta.size() != dim_param)
      throw std::invalid_argument("ModelSpec: theta length != dim_param");
  }
};

// a_{i,j} = 1/2 sum_k sigma_{i,k} sigma_{j,k}; symmetric PSD by construction.
Mat a_matrix(const ModelSpec& model, double t, const Vec& x, const Vec& theta);

// Component (k,i,j) = d_{theta_k} a_{i,j} by the product rule on sigma.
// Identically zero when sigma_theta_dependent is false.
Tens3 dtheta_a(const ModelSpec& model, double t, const Vec& x, const Vec& theta);

struct DerivativeCheck {
  std::string name;      // e.g. "drift.dx"
  double max_abs_dev = 0.0;
  double max_rel_dev = 0.0;
  bool passed = true;
  double worst_t = 0.0;
  Vec worst_x;
};

struct ValidationReport {
  bool passed = true;
  std::vector<DerivativeCheck> checks;
  std::string summary() const;
};

// Samples probe points and compares every supplied analytic derivative to a
// central finite difference. Failures are reported, not thrown.
ValidationReport validate_model(const ModelSpec& model, int probe_count,
                                std::uint64_t rng_seed, double rel_tol = 1e-4,
                                double fd_step = 1e-5);

// Exact compensator integral for discrete marks: sum_k w_k chi(t,x,z_k).
Vec compensator_exact(const ModelSpec& model, double t, const Vec& x, const Vec& theta);

}  // namespace jumpgrad
