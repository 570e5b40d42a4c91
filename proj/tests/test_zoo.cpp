#include <cmath>
#include <cstddef>
#include <vector>

#include "doctest.h"
#include "jumpgrad/estimators.hpp"
#include "jumpgrad/parallel.hpp"
#include "jumpgrad/zoo.hpp"

using namespace jumpgrad;
using namespace jumpgrad::zoo;

TEST_CASE("cir model structure") {
  ModelSpec m = build_cir({4.0, 0.1, 2.0});
  CHECK(m.dim_state == 1);
  CHECK(m.horizon == 2.0);
  CHECK(!m.sigma_theta_dependent);
  REQUIRE(m.clamp_fn);
  Vec x{-0.3};
  m.clamp_fn(x);
  CHECK(x[0] == 0.3);  // absolute-value positivity fix

  Vec mu(1);
  m.drift.value(0.0, {0.1}, {4.0}, mu);
  CHECK(mu[0] == doctest::Approx(3.9));
  Mat sig(1, 1);
  m.vol.value(0.0, {0.25}, {4.0}, sig);
  CHECK(sig(0, 0) == doctest::Approx(0.5));
  CHECK_THROWS(build_cir({-1.0, 0.1, 2.0}));
}

TEST_CASE("cir gradient is theta-free near the analytic value") {
  // grad = int_0^2 (1 - e^{-(2-t)}) ... = 1 + e^{-2} for any theta.
  const double exact = 1.0 + std::exp(-2.0);
  for (double th : {4.0, 0.55}) {
    ModelSpec m = build_cir({th, 0.1, 2.0});
    est::EstimatorConfig cfg;
    cfg.sim.n_steps = 400;
    cfg.workers = 0;
    std::vector<est::SampleDraw> s(8000);
    for_each_replication(s.size(), 0, [&](std::size_t r) {
      s[r] = est::gg_sample(m, {0.1}, cfg, r);
    });
    const auto g = est::mc_aggregate(s, est::EstimatorKind::kGG);
    INFO("theta = ", th);
    CHECK(std::abs(g.mean[0] - exact) < 4.0 * g.se[0] + 0.005);
  }
}

TEST_CASE("relu drift kink convention") {
  ModelSpec m = build_relu({1.5, -0.1, 2.0});
  Mat dth(1, 1), dx(1, 1);
  m.drift.dtheta(0.0, {0.4}, {1.5}, dth);
  CHECK(dth(0, 0) == 0.4);  // active side: x
  m.drift.dtheta(0.0, {-0.4}, {1.5}, dth);
  CHECK(dth(0, 0) == 0.0);  // inactive side
  m.drift.dx(0.0, {0.4}, {1.5}, dx);
  CHECK(dx(0, 0) == 1.5);
  m.drift.dx(0.0, {-0.4}, {1.5}, dx);
  CHECK(dx(0, 0) == 0.0);
  CHECK_THROWS(build_relu({0.0, -0.1, 2.0}));
}

TEST_CASE("jump test model ships exact discrete marks") {
  ModelSpec m = build_jump_test(0.8);
  REQUIRE(m.jump.has_value());
  CHECK(m.jump->discrete());
  const auto& dm = m.jump->discrete_marks();
  REQUIRE(dm.atoms.size() == 2);
  CHECK(dm.weights[0] + dm.weights[1] == doctest::Approx(m.jump->rate));
  Vec chi(1);
  m.jump_coeff.value(0.0, {0.3}, {0.8}, {1.0}, chi);
  CHECK(chi[0] == doctest::Approx(0.2 * 0.8));
  Mat chi_dth(1, 1);
  m.jump_coeff.dtheta(0.0, {0.3}, {0.8}, {-1.0}, chi_dth);
  CHECK(chi_dth(0, 0) == doctest::Approx(-0.2));
}

TEST_CASE("default lq hits the requested parameter counts") {
  const LqSpec small = default_lq(102, 42);
  CHECK(small.policy.param_count() == 102);
  CHECK(small.policy_theta.size() == 102);
  CHECK(small.policy.hidden_widths.size() == 4);

  const LqSpec big = default_lq(10000, 42);
  const double n = static_cast<double>(big.policy.param_count());
  CHECK(std::abs(n - 10000.0) / 10000.0 < 0.05);

  const ModelSpec m = build_lq(small);
  CHECK(m.dim_state == 4);
  CHECK(m.dim_param == 102);
  CHECK(!m.sigma_theta_dependent);
}

TEST_CASE("lq reward matches the quadratic cost") {
  LqSpec spec = default_lq(102, 42);
  const ModelSpec m = build_lq(spec);
  const Vec x{0.5, -1.0, 0.2, 0.1};
  const double t = 0.4;
  const Vec u = nn::forward(spec.policy, spec.policy_theta, t, x);
  double want = 0.0;
  for (std::size_t i = 0; i < 4; ++i) want += x[i] * spec.Q(i, i) * x[i];
  for (std::size_t j = 0; j < u.size(); ++j) want += u[j] * spec.R(j, j) * u[j];
  CHECK(m.reward.rho(t, x, spec.policy_theta) == doctest::Approx(want).epsilon(1e-12));

  double g_want = 0.0;
  for (std::size_t i = 0; i < 4; ++i) g_want += x[i] * spec.Q_T(i, i) * x[i];
  CHECK(m.reward.g(x, spec.policy_theta) == doctest::Approx(g_want).epsilon(1e-12));
}

TEST_CASE("zero policy confines gradients to the output bias block") {
  LqSpec spec = default_lq(102, 42);
  spec.policy_theta.assign(spec.policy_theta.size(), 0.0);
  const ModelSpec m = build_lq(spec);
  est::EstimatorConfig cfg;
  cfg.sim.n_steps = 100;
  // With all weights zero, every hidden activation is tanh(0) = 0, so the
  // only parameters with nonzero effect on u are the two output biases.
  for (std::uint64_t r = 0; r < 5; ++r) {
    const auto gg = est::gg_sample(m, spec.x0, cfg, r);
    const auto pd = est::pd_sample(m, spec.x0, cfg, r);
    bool bias_hit = false;
    for (std::size_t k = 0; k < 100; ++k) {
      CHECK(gg.gradient[k] == 0.0);
      CHECK(pd.gradient[k] == 0.0);
    }
    bias_hit = gg.gradient[100] != 0.0 || gg.gradient[101] != 0.0;
    CHECK(bias_hit);
  }
}

TEST_CASE("small lq network agrees with the finite-difference oracle") {
  LqSpec spec = default_lq(102, 42);
  spec.policy.hidden_widths = {2};  // 18 parameters: fast enough for FD
  spec.policy_theta = nn::init_params(spec.policy).theta;
  const ModelSpec m = build_lq(spec);
  REQUIRE(m.dim_param == 18);

  est::EstimatorConfig cfg;
  cfg.sim.n_steps = 200;
  cfg.workers = 0;
  cfg.master_seed = 5;
  cfg.randomize_reward_integral = true;
  std::vector<est::SampleDraw> s(4000);
  for_each_replication(s.size(), 0, [&](std::size_t r) {
    s[r] = est::gg_sample(m, spec.x0, cfg, r);
  });
  const auto gg = est::mc_aggregate(s, est::EstimatorKind::kGG);
  const auto fd = est::fd_estimate(m, spec.x0, 0.01, cfg, 4000);
  std::size_t agree = 0;
  for (std::size_t k = 0; k < 18; ++k) {
    const double comb =
        std::sqrt(gg.se[k] * gg.se[k] + fd.se[k] * fd.se[k]);
    if (std::abs(gg.mean[k] - fd.mean[k]) <= 3.0 * comb + 1e-4) ++agree;
  }
  CHECK(agree >= 17);  // allow one 3-SE outlier out of 18
}
