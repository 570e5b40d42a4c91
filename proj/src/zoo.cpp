#include "jumpgrad/zoo.hpp"

#include <cmath>
#include <memory>

namespace jumpgrad::zoo {

namespace {

// Per-thread scratch for the policy network so evaluators stay pure w.r.t.
// their inputs and a single ModelSpec can be shared across replications.
thread_local nn::MlpWorkspace tls_ws;
thread_local Mat tls_grad_theta;
thread_local Mat tls_jac_x;
thread_local Vec tls_u;

}  // namespace

LqSpec default_lq(std::size_t param_target, std::uint64_t init_seed) {
  LqSpec s;
  const std::size_t d = 4, m = 2, dp = 2;
  s.A.resize(d, d);
  s.A(0, 2) = 1.0;  // positions integrate velocities
  s.A(1, 3) = 1.0;
  s.B.resize(d, m);
  s.B(2, 0) = 1.0;  // force acts on velocities
  s.B(3, 1) = 1.0;
  s.C.resize(d, dp);
  s.C(2, 0) = 0.1;
  s.C(3, 1) = 0.1;
  s.Q = Mat::identity(d);
  s.Q_T = Mat::identity(d);
  s.R.resize(m, m);
  s.R(0, 0) = s.R(1, 1) = 0.1;
  s.x0 = {1.0, 1.0, 0.0, 0.0};
  s.T = 1.0;

  s.policy.input_dim = 1 + d;
  s.policy.output_dim = m;
  s.policy.activation = nn::Activation::kTanh;
  s.policy.init_seed = init_seed;
  if (param_target <= 102) {
    s.policy.hidden_widths = {3, 5, 5, 4};  // exactly 102 parameters
  } else {
    // Uniform width w: n(w) = 3w^2 + 11w + 2 for this input/output shape.
    auto w = static_cast<std::size_t>(
        std::llround((-11.0 + std::sqrt(121.0 + 12.0 * (static_cast<double>(param_target) - 2.0))) / 6.0));
    if (w < 2) w = 2;
    s.policy.hidden_widths = {w, w, w, w};
  }
  s.policy_theta = nn::init_params(s.policy).theta;
  return s;
}

ModelSpec build_lq(const LqSpec& spec) {
  const std::size_t d = spec.A.rows, m = spec.B.cols, dp = spec.C.cols;
  if (spec.B.rows != d || spec.C.rows != d || spec.Q.rows != d || spec.Q_T.rows != d ||
      spec.R.rows != m || spec.x0.size() != d)
    throw std::invalid_argument("build_lq: inconsistent dimensions");
  if (spec.policy_theta.size() != spec.policy.param_count())
    throw std::invalid_argument("build_lq: policy parameter length mismatch");

  auto lq = std::make_shared<LqSpec>(spec);
  const std::size_t n = lq->policy_theta.size();

  // Symmetrized cost matrices.
  auto q_sym = std::make_shared<Mat>(d, d);
  auto qt_sym = std::make_shared<Mat>(d, d);
  auto r_sym = std::make_shared<Mat>(m, m);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      (*q_sym)(i, j) = lq->Q(i, j) + lq->Q(j, i);
      (*qt_sym)(i, j) = lq->Q_T(i, j) + lq->Q_T(j, i);
    }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) (*r_sym)(i, j) = lq->R(i, j) + lq->R(j, i);

  ModelSpec model;
  model.dim_state = d;
  model.dim_noise = dp;
  model.dim_param = n;
  model.horizon = lq->T;
  model.theta = lq->policy_theta;
  model.sigma_theta_dependent = false;

  auto policy_value = [lq](double t, const Vec& x, const Vec& th) -> const Vec& {
    nn::forward(lq->policy, th, t, x, tls_u, tls_ws);
    return tls_u;
  };

  model.drift.value = [lq, d, m](double t, const Vec& x, const Vec& th, Vec& out) {
    nn::forward(lq->policy, th, t, x, tls_u, tls_ws);
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t l = 0; l < d; ++l) s += lq->A(i, l) * x[l];
      for (std::size_t j = 0; j < m; ++j) s += lq->B(i, j) * tls_u[j];
      out[i] = s;
    }
  };
  model.drift.dx = [lq, d, m](double t, const Vec& x, const Vec& th, Mat& out) {
    nn::gradients(lq->policy, th, t, x, nullptr, nullptr, &tls_jac_x, nullptr, tls_ws);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t l = 0; l < d; ++l) {
        double s = lq->A(i, l);
        for (std::size_t j = 0; j < m; ++j) s += lq->B(i, j) * tls_jac_x(j, l);
        out(i, l) = s;
      }
  };
  model.drift.dtheta = [lq, d, m, n](double t, const Vec& x, const Vec& th, Mat& out) {
    nn::gradients(lq->policy, th, t, x, nullptr, &tls_grad_theta, nullptr, nullptr, tls_ws);
    // out(k, i) = sum_j B(i, j) * d u_j / d theta_k
    out.set_zero();
    for (std::size_t j = 0; j < m; ++j) {
      const double* grow = &tls_grad_theta.data[j * n];
      for (std::size_t i = 0; i < d; ++i) {
        const double b = lq->B(i, j);
        if (b == 0.0) continue;
        for (std::size_t k = 0; k < n; ++k) out.data[k * d + i] += b * grow[k];
      }
    }
  };

  model.vol.value = [lq](double, const Vec&, const Vec&, Mat& out) { out = lq->C; };
  model.vol.dx = [](double, const Vec&, const Vec&, Tens3& out) { out.set_zero(); };
  model.vol.dtheta = [](double, const Vec&, const Vec&, Tens3& out) { out.set_zero(); };

  model.reward.rho = [lq, policy_value, q_sym, r_sym, d, m](double t, const Vec& x,
                                                            const Vec& th) {
    const Vec& u = policy_value(t, x, th);
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) s += x[i] * lq->Q(i, j) * x[j];
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) s += u[i] * lq->R(i, j) * u[j];
    return s;
  };
  model.reward.rho_grad = [lq, q_sym, r_sym, d, m](double t, const Vec& x, const Vec& th,
                                                   Vec& out) {
    nn::gradients(lq->policy, th, t, x, &tls_u, nullptr, &tls_jac_x, nullptr, tls_ws);
    // (Q + Q')x + jac_x' (R + R') u
    for (std::size_t l = 0; l < d; ++l) {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += (*q_sym)(l, i) * x[i];
      for (std::size_t i = 0; i < m; ++i) {
        double ru = 0.0;
        for (std::size_t j = 0; j < m; ++j) ru += (*r_sym)(i, j) * tls_u[j];
        s += tls_jac_x(i, l) * ru;
      }
      out[l] = s;
    }
  };
  model.reward.rho_dtheta = [lq, r_sym, m, n](double t, const Vec& x, const Vec& th,
                                              Vec& out) {
    nn::gradients(lq->policy, th, t, x, &tls_u, &tls_grad_theta, nullptr, nullptr, tls_ws);
    // out(k) = sum_i (sum_j (R + R')_{i,j} u_j) du_i/dtheta_k
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      double ru = 0.0;
      for (std::size_t j = 0; j < m; ++j) ru += (*r_sym)(i, j) * tls_u[j];
      const double* grow = &tls_grad_theta.data[i * n];
      for (std::size_t k = 0; k < n; ++k) out[k] += ru * grow[k];
    }
  };

  model.reward.g = [lq, d](const Vec& x, const Vec&) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) s += x[i] * lq->Q_T(i, j) * x[j];
    return s;
  };
  model.reward.g_grad = [qt_sym, d](const Vec& x, const Vec&, Vec& out) {
    for (std::size_t l = 0; l < d; ++l) {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += (*qt_sym)(l, i) * x[i];
      out[l] = s;
    }
  };
  model.reward.g_hess = [qt_sym](const Vec&, const Vec&, Mat& out) { out = *qt_sym; };

  return model;
}

ModelSpec build_cir(const CirSpec& spec) {
  if (spec.theta <= 0.0 || spec.T <= 0.0)
    throw std::invalid_argument("build_cir: theta and T must be positive");
  ModelSpec m;
  m.dim_state = m.dim_noise = m.dim_param = 1;
  m.horizon = spec.T;
  m.theta = {spec.theta};
  m.sigma_theta_dependent = false;

  m.drift.value = [](double, const Vec& x, const Vec& th, Vec& out) { out[0] = th[0] - x[0]; };
  m.drift.dx = [](double, const Vec&, const Vec&, Mat& out) { out(0, 0) = -1.0; };
  m.drift.dtheta = [](double, const Vec&, const Vec&, Mat& out) { out(0, 0) = 1.0; };

  m.vol.value = [](double, const Vec& x, const Vec&, Mat& out) {
    out(0, 0) = std::sqrt(std::max(x[0], 0.0));
  };
  // a.e. derivative; the kink at 0 uses the convention 0.
  m.vol.dx = [](double, const Vec& x, const Vec&, Tens3& out) {
    out(0, 0, 0) = x[0] > 0.0 ? 0.5 / std::sqrt(x[0]) : 0.0;
  };

  m.reward.rho = [](double, const Vec& x, const Vec&) { return x[0]; };
  m.reward.rho_grad = [](double, const Vec&, const Vec&, Vec& out) { out[0] = 1.0; };
  m.reward.rho_hess = [](double, const Vec&, const Vec&, Mat& out) { out(0, 0) = 0.0; };
  m.reward.rho_dtheta = [](double, const Vec&, const Vec&, Vec& out) { out[0] = 0.0; };
  m.reward.g = [](const Vec&, const Vec&) { return 0.0; };
  m.reward.g_grad = [](const Vec&, const Vec&, Vec& out) { out[0] = 0.0; };
  m.reward.g_hess = [](const Vec&, const Vec&, Mat& out) { out(0, 0) = 0.0; };
  m.reward.g_dtheta = [](const Vec&, const Vec&, Vec& out) { out[0] = 0.0; };

  m.clamp_fn = [](Vec& x) { x[0] = std::abs(x[0]); };
  return m;
}

ModelSpec build_relu(const ReluDriftSpec& spec) {
  if (spec.theta <= 0.0 || spec.T <= 0.0)
    throw std::invalid_argument("build_relu: theta and T must be positive");
  ModelSpec m;
  m.dim_state = m.dim_noise = m.dim_param = 1;
  m.horizon = spec.T;
  m.theta = {spec.theta};
  m.sigma_theta_dependent = false;

  m.drift.value = [](double, const Vec& x, const Vec& th, Vec& out) {
    out[0] = std::max(th[0] * x[0], 0.0) + 1.0;
  };
  m.drift.dx = [](double, const Vec& x, const Vec& th, Mat& out) {
    out(0, 0) = th[0] * x[0] > 0.0 ? th[0] : 0.0;
  };
  m.drift.dtheta = [](double, const Vec& x, const Vec& th, Mat& out) {
    out(0, 0) = th[0] * x[0] > 0.0 ? x[0] : 0.0;
  };

  m.vol.value = [](double, const Vec&, const Vec&, Mat& out) { out(0, 0) = 1.0; };
  m.vol.dx = [](double, const Vec&, const Vec&, Tens3& out) { out(0, 0, 0) = 0.0; };

  m.reward.rho = [](double, const Vec& x, const Vec&) { return x[0]; };
  m.reward.rho_grad = [](double, const Vec&, const Vec&, Vec& out) { out[0] = 1.0; };
  m.reward.rho_hess = [](double, const Vec&, const Vec&, Mat& out) { out(0, 0) = 0.0; };
  m.reward.rho_dtheta = [](double, const Vec&, const Vec&, Vec& out) { out[0] = 0.0; };
  m.reward.g = [](const Vec&, const Vec&) { return 0.0; };
  m.reward.g_grad = [](const Vec&, const Vec&, Vec& out) { out[0] = 0.0; };
  m.reward.g_hess = [](const Vec&, const Vec&, Mat& out) { out(0, 0) = 0.0; };
  m.reward.g_dtheta = [](const Vec&, const Vec&, Vec& out) { out[0] = 0.0; };
  return m;
}

ModelSpec build_gbm(double theta, double sigma0, double T) {
  ModelSpec m;
  m.dim_state = m.dim_noise = m.dim_param = 1;
  m.horizon = T;
  m.theta = {theta};
  m.sigma_theta_dependent = false;

  m.drift.value = [](double, const Vec& x, const Vec& th, Vec& out) { out[0] = th[0] * x[0]; };
  m.drift.dx = [](double, const Vec&, const Vec& th, Mat& out) { out(0, 0) = th[0]; };
  m.drift.dxx = [](double, const Vec&, const Vec&, Tens3& out) { out(0, 0, 0) = 0.0; };
  m.drift.dtheta = [](double, const Vec& x, const Vec&, Mat& out) { out(0, 0) = x[0]; };

  m.vol.value = [sigma0](double, const Vec& x, const Vec&, Mat& out) {
    out(0, 0) = sigma0 * x[0];
  };
  m.vol.dx = [sigma0](double, const Vec&, const Vec&, Tens3& out) { out(0, 0, 0) = sigma0; };
  m.vol.dtheta = [](double, const Vec&, const Vec&, Tens3& out) { out(0, 0, 0) = 0.0; };

  m.reward.g = [](const Vec& x, const Vec&) { return x[0]; };
  m.reward.g_grad = [](const Vec&, const Vec&, Vec& out) { out[0] = 1.0; };
  m.reward.g_hess = [](const Vec&, const Vec&, Mat& out) { out(0, 0) = 0.0; };
  m.reward.g_dtheta = [](const Vec&, const Vec&, Vec& out) { out[0] = 0.0; };
  return m;
}

ModelSpec build_jump_test(double theta, double T) {
  ModelSpec m;
  m.dim_state = m.dim_noise = m.dim_param = 1;
  m.horizon = T;
  m.theta = {theta};
  m.sigma_theta_dependent = false;

  m.drift.value = [](double, const Vec& x, const Vec& th, Vec& out) { out[0] = th[0] - x[0]; };
  m.drift.dx = [](double, const Vec&, const Vec&, Mat& out) { out(0, 0) = -1.0; };
  m.drift.dtheta = [](double, const Vec&, const Vec&, Mat& out) { out(0, 0) = 1.0; };

  m.vol.value = [](double, const Vec&, const Vec&, Mat& out) { out(0, 0) = 0.3; };
  m.vol.dx = [](double, const Vec&, const Vec&, Tens3& out) { out(0, 0, 0) = 0.0; };

  m.jump_coeff.value = [](double, const Vec&, const Vec& th, const Vec& z, Vec& out) {
    out[0] = 0.2 * th[0] * z[0];
  };
  m.jump_coeff.dx = [](double, const Vec&, const Vec&, const Vec&, Mat& out) {
    out(0, 0) = 0.0;
  };
  m.jump_coeff.dxx = [](double, const Vec&, const Vec&, const Vec&, Tens3& out) {
    out(0, 0, 0) = 0.0;
  };
  m.jump_coeff.dtheta = [](double, const Vec&, const Vec&, const Vec& z, Mat& out) {
    out(0, 0) = 0.2 * z[0];
  };

  JumpSpec js;
  js.rate = 1.0;
  js.compensated = true;
  DiscreteMarks dm;
  dm.atoms = {Vec{-1.0}, Vec{1.0}};
  dm.weights = {0.5, 0.5};
  js.marks = dm;
  m.jump = js;

  m.reward.rho = [](double, const Vec& x, const Vec&) { return x[0]; };
  m.reward.rho_grad = [](double, const Vec&, const Vec&, Vec& out) { out[0] = 1.0; };
  m.reward.rho_hess = [](double, const Vec&, const Vec&, Mat& out) { out(0, 0) = 0.0; };
  m.reward.rho_dtheta = [](double, const Vec&, const Vec&, Vec& out) { out[0] = 0.0; };
  m.reward.g = [](const Vec&, const Vec&) { return 0.0; };
  m.reward.g_grad = [](const Vec&, const Vec&, Vec& out) { out[0] = 0.0; };
  m.reward.g_hess = [](const Vec&, const Vec&, Mat& out) { out(0, 0) = 0.0; };
  m.reward.g_dtheta = [](const Vec&, const Vec&, Vec& out) { out[0] = 0.0; };
  return m;
}

}  // namespace jumpgrad::zoo
