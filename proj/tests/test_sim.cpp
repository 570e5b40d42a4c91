#include <cmath>
#include <vector>

#include "doctest.h"
#include "jumpgrad/linalg.hpp"
#include "jumpgrad/sim.hpp"
#include "jumpgrad/zoo.hpp"

using namespace jumpgrad;

namespace {

SimStreams streams_for(std::uint64_t seed, std::uint64_t repl) {
  return make_sim_streams(seed, repl);
}

// dX = sin(X) dt + 0.3 dB: nonlinear drift with nonvanishing second
// derivative, used for first/second variation oracles.
ModelSpec sine_model() {
  ModelSpec m;
  m.dim_state = m.dim_noise = m.dim_param = 1;
  m.horizon = 1.0;
  m.theta = {0.0};
  m.drift.value = [](double, const Vec& x, const Vec&, Vec& out) { out[0] = std::sin(x[0]); };
  m.drift.dx = [](double, const Vec& x, const Vec&, Mat& out) { out(0, 0) = std::cos(x[0]); };
  m.drift.dxx = [](double, const Vec& x, const Vec&, Tens3& out) {
    out(0, 0, 0) = -std::sin(x[0]);
  };
  m.drift.dtheta = [](double, const Vec&, const Vec&, Mat& out) { out(0, 0) = 0.0; };
  m.vol.value = [](double, const Vec&, const Vec&, Mat& out) { out(0, 0) = 0.3; };
  m.vol.dx = [](double, const Vec&, const Vec&, Tens3& out) { out(0, 0, 0) = 0.0; };
  m.vol.dxx = [](double, const Vec&, const Vec&, Tens4& out) { out(0, 0, 0, 0) = 0.0; };
  return m;
}

// d=2 linear drift dX = A X dt + 0.1 dB with A = [[0,1],[-0.5,0]].
ModelSpec linear2_model() {
  ModelSpec m;
  m.dim_state = m.dim_noise = 2;
  m.dim_param = 1;
  m.horizon = 1.0;
  m.theta = {0.0};
  m.drift.value = [](double, const Vec& x, const Vec&, Vec& out) {
    out[0] = x[1];
    out[1] = -0.5 * x[0];
  };
  m.drift.dx = [](double, const Vec&, const Vec&, Mat& out) {
    out(0, 0) = 0.0;
    out(0, 1) = 1.0;
    out(1, 0) = -0.5;
    out(1, 1) = 0.0;
  };
  m.drift.dxx = [](double, const Vec&, const Vec&, Tens3& out) { out.set_zero(); };
  m.vol.value = [](double, const Vec&, const Vec&, Mat& out) {
    out.set_zero();
    out(0, 0) = 0.1;
    out(1, 1) = 0.1;
  };
  m.vol.dx = [](double, const Vec&, const Vec&, Tens3& out) { out.set_zero(); };
  m.vol.dxx = [](double, const Vec&, const Vec&, Tens4& out) { out.set_zero(); };
  return m;
}

}  // namespace

TEST_CASE("deterministic drift integrates exactly on the grid") {
  ModelSpec m;
  m.dim_state = m.dim_noise = m.dim_param = 1;
  m.horizon = 2.0;
  m.theta = {0.0};
  m.drift.value = [](double, const Vec&, const Vec&, Vec& out) { out[0] = 0.7; };
  m.vol.value = [](double, const Vec&, const Vec&, Mat& out) { out(0, 0) = 0.0; };
  SimConfig cfg;
  cfg.n_steps = 100;
  auto s = streams_for(1, 0);
  const Vec xT = simulate_base(m, m.theta, {0.25}, 0.0, 2.0, cfg, s);
  CHECK(xT[0] == doctest::Approx(0.25 + 0.7 * 2.0).epsilon(1e-13));
}

TEST_CASE("observer sees every left grid point plus the terminal state") {
  ModelSpec m = sine_model();
  SimConfig cfg;
  cfg.n_steps = 50;
  auto s = streams_for(1, 0);
  std::size_t calls = 0, last_step = 0;
  double last_t = -1.0;
  simulate_base(m, m.theta, {0.1}, 0.0, 1.0, cfg, s,
                [&](std::size_t step, double t, const Vec&) {
                  ++calls;
                  last_step = step;
                  last_t = t;
                });
  CHECK(calls == 51);
  CHECK(last_step == 50);
  CHECK(last_t == doctest::Approx(1.0));
}

TEST_CASE("path recording returns the full grid") {
  ModelSpec m = sine_model();
  SimConfig cfg;
  cfg.n_steps = 20;
  auto s = streams_for(1, 0);
  std::vector<Vec> path;
  const Vec xT = simulate_base(m, m.theta, {0.1}, 0.0, 1.0, cfg, s, nullptr, &path);
  REQUIRE(path.size() == 21);
  CHECK(path.front()[0] == 0.1);
  CHECK(path.back()[0] == xT[0]);
}

TEST_CASE("GBM sample mean matches x0 exp(theta T)") {
  ModelSpec m = zoo::build_gbm(0.05, 0.2, 1.0);
  SimConfig cfg;
  cfg.n_steps = 400;
  const std::size_t N = 20000;
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t r = 0; r < N; ++r) {
    auto s = streams_for(5, r);
    const Vec xT = simulate_base(m, m.theta, {1.0}, 0.0, 1.0, cfg, s);
    sum += xT[0];
    sumsq += xT[0] * xT[0];
  }
  const double mean = sum / N;
  const double se = std::sqrt((sumsq / N - mean * mean) / N);
  CHECK(std::abs(mean - std::exp(0.05)) < 3.0 * se);
}

TEST_CASE("variation flow starts at identity with zero Hessian") {
  ModelSpec m = sine_model();
  SimConfig cfg;
  cfg.n_steps = 100;
  auto s = streams_for(2, 0);
  const auto st = simulate_augmented(m, m.theta, {0.4}, 0.5, 0.5, cfg, s, true);
  CHECK(st.grad_x(0, 0) == 1.0);
  CHECK(st.hess(0, 0, 0, 1) == 0.0);
  CHECK(st.x[0] == 0.4);
}

TEST_CASE("state sizes follow the simulated system dimensions") {
  ModelSpec lin = linear2_model();
  SimConfig cfg;
  cfg.n_steps = 10;
  {
    auto s = streams_for(3, 0);
    const auto st = simulate_augmented(lin, lin.theta, {1.0, 0.0}, 0.0, 1.0, cfg, s, false);
    CHECK(st.scalar_count() == 2 + 4);  // d + d^2
  }
  {
    auto s = streams_for(3, 0);
    const auto st = simulate_augmented(lin, lin.theta, {1.0, 0.0}, 0.0, 1.0, cfg, s, true);
    CHECK(st.scalar_count() == 2 + 4 + 2 * 3);  // d + d^2 + d * d(d+1)/2
  }
  {
    ModelSpec g = zoo::build_gbm(0.05, 0.2, 1.0);
    auto s = streams_for(3, 0);
    const auto st = simulate_pathwise(g, g.theta, {1.0}, 0.0, 1.0, cfg, s);
    CHECK(st.scalar_count() == 1 + 1 * 1);  // d + d n
  }
}

TEST_CASE("linear-model variation flow matches the matrix exponential") {
  ModelSpec m = linear2_model();
  SimConfig cfg;
  cfg.n_steps = 2000;
  auto s = streams_for(4, 1);
  const auto st = simulate_augmented(m, m.theta, {1.0, -0.3}, 0.0, 1.0, cfg, s, true);
  Mat A(2, 2);
  A(0, 1) = 1.0;
  A(1, 0) = -0.5;
  const Mat eA = expm(A);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t a = 0; a < 2; ++a)
      CHECK(st.grad_x(i, a) == doctest::Approx(eA(i, a)).epsilon(2e-3));
  // Linear drift, constant vol: the second variation vanishes identically.
  for (double v : st.hess_x) CHECK(std::abs(v) < 1e-14);
}

TEST_CASE("variation flow matches pathwise finite differences under common noise") {
  ModelSpec m = sine_model();
  SimConfig cfg;
  cfg.n_steps = 400;
  const double x0 = 0.4, h = 1e-5;
  const auto run = [&](double x) {
    auto s = streams_for(6, 2);  // identical streams for every call
    return simulate_base(m, m.theta, {x}, 0.0, 1.0, cfg, s)[0];
  };
  const double up = run(x0 + h), dn = run(x0 - h), mid = run(x0);
  auto s = streams_for(6, 2);
  const auto st = simulate_augmented(m, m.theta, {x0}, 0.0, 1.0, cfg, s, true);
  CHECK(st.x[0] == doctest::Approx(mid).epsilon(1e-12));
  CHECK(st.grad_x(0, 0) == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
  CHECK(st.hess(0, 0, 0, 1) ==
        doctest::Approx((up - 2 * mid + dn) / (h * h)).epsilon(1e-3));
}

TEST_CASE("pathwise sensitivity matches theta finite differences under common noise") {
  ModelSpec m = zoo::build_gbm(0.05, 0.2, 1.0);
  SimConfig cfg;
  cfg.n_steps = 400;
  const double h = 1e-6;
  const auto run = [&](double th) {
    auto s = streams_for(7, 3);
    return simulate_base(m, {th}, {1.0}, 0.0, 1.0, cfg, s)[0];
  };
  const double up = run(0.05 + h), dn = run(0.05 - h);
  auto s = streams_for(7, 3);
  const auto st = simulate_pathwise(m, m.theta, {1.0}, 0.0, 1.0, cfg, s);
  CHECK(st.dtheta_x(0, 0) == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
}

TEST_CASE("repeated simulation with the same streams is bit-identical") {
  ModelSpec m = zoo::build_jump_test(1.0);
  SimConfig cfg;
  cfg.n_steps = 200;
  auto s1 = streams_for(8, 5);
  auto s2 = streams_for(8, 5);
  const Vec a = simulate_base(m, m.theta, {0.5}, 0.0, 1.0, cfg, s1);
  const Vec b = simulate_base(m, m.theta, {0.5}, 0.0, 1.0, cfg, s2);
  CHECK(a == b);
}

TEST_CASE("zero jump rate reduces to the pure diffusion") {
  ModelSpec withj = zoo::build_jump_test(1.0);
  withj.jump->rate = 0.0;
  ModelSpec pure = withj;
  pure.jump.reset();
  SimConfig cfg;
  cfg.n_steps = 200;
  auto s1 = streams_for(9, 2);
  auto s2 = streams_for(9, 2);
  const Vec a = simulate_base(withj, withj.theta, {0.5}, 0.0, 1.0, cfg, s1);
  const Vec b = simulate_base(pure, pure.theta, {0.5}, 0.0, 1.0, cfg, s2);
  CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-14));
}

TEST_CASE("CIR clamp keeps the discretized state nonnegative") {
  ModelSpec m = zoo::build_cir({0.2, 0.1, 2.0});
  SimConfig cfg;
  cfg.n_steps = 400;
  for (std::uint64_t r = 0; r < 50; ++r) {
    auto s = streams_for(10, r);
    simulate_base(m, m.theta, {0.1}, 0.0, 2.0, cfg, s,
                  [&](std::size_t, double, const Vec& x) { REQUIRE(x[0] >= 0.0); });
  }
}

TEST_CASE("sub-interval step counts keep the base resolution") {
  SimConfig cfg;
  cfg.n_steps = 400;
  CHECK(cfg.steps_for(0.0, 1.0, 1.0) == 400);
  CHECK(cfg.steps_for(0.5, 1.0, 1.0) == 200);
  CHECK(cfg.steps_for(0.999, 1.0, 1.0) >= 1);
  CHECK(cfg.steps_for(1.0, 1.0, 1.0) == 0);
}

TEST_CASE("non-finite states are reported as simulation errors") {
  ModelSpec m;
  m.dim_state = m.dim_noise = m.dim_param = 1;
  m.horizon = 1.0;
  m.theta = {0.0};
  m.drift.value = [](double, const Vec& x, const Vec&, Vec& out) {
    out[0] = x[0] * x[0] * x[0] * 1e4;  // explodes
  };
  m.vol.value = [](double, const Vec&, const Vec&, Mat& out) { out(0, 0) = 0.0; };
  SimConfig cfg;
  cfg.n_steps = 100;
  auto s = streams_for(11, 0);
  CHECK_THROWS_AS(simulate_base(m, m.theta, {2.0}, 0.0, 1.0, cfg, s), SimError);
}
