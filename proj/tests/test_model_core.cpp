#include <cmath>

#include "doctest.h"
#include "jumpgrad/model.hpp"
#include "jumpgrad/zoo.hpp"

using namespace jumpgrad;

namespace {

// 2-state model with theta-dependent volatility, used to exercise a and its
// theta-derivative: sigma = [[th0, th1*x1], [0, th0*th1]].
ModelSpec theta_vol_model() {
  ModelSpec m;
  m.dim_state = 2;
  m.dim_noise = 2;
  m.dim_param = 2;
  m.horizon = 1.0;
  m.theta = {0.7, 1.3};
  m.sigma_theta_dependent = true;
  m.drift.value = [](double, const Vec& x, const Vec&, Vec& out) {
    out[0] = -x[0];
    out[1] = -x[1];
  };
  m.vol.value = [](double, const Vec& x, const Vec& th, Mat& out) {
    out(0, 0) = th[0];
    out(0, 1) = th[1] * x[1];
    out(1, 0) = 0.0;
    out(1, 1) = th[0] * th[1];
  };
  m.vol.dtheta = [](double, const Vec& x, const Vec& th, Tens3& out) {
    out.set_zero();
    out(0, 0, 0) = 1.0;          // d_{th0} sigma_00
    out(0, 1, 1) = th[1];        // d_{th0} sigma_11
    out(1, 0, 1) = x[1];         // d_{th1} sigma_01
    out(1, 1, 1) = th[0];        // d_{th1} sigma_11
  };
  return m;
}

}  // namespace

TEST_CASE("a_matrix closed forms") {
  ModelSpec m;
  m.dim_state = 2;
  m.dim_noise = 2;
  m.theta = {0.0};
  const Vec x{0.3, -0.4};

  SUBCASE("identity volatility gives a = I/2") {
    m.vol.value = [](double, const Vec&, const Vec&, Mat& out) {
      out(0, 0) = out(1, 1) = 1.0;
      out(0, 1) = out(1, 0) = 0.0;
    };
    const Mat a = a_matrix(m, 0.0, x, m.theta);
    CHECK(a(0, 0) == doctest::Approx(0.5));
    CHECK(a(1, 1) == doctest::Approx(0.5));
    CHECK(a(0, 1) == doctest::Approx(0.0));
  }
  SUBCASE("zero volatility gives a = 0") {
    m.vol.value = [](double, const Vec&, const Vec&, Mat& out) { out.set_zero(); };
    const Mat a = a_matrix(m, 0.0, x, m.theta);
    for (double v : a.data) CHECK(v == 0.0);
  }
  SUBCASE("scalar sigma = 0.5 gives a = 0.125") {
    ModelSpec s;
    s.dim_state = s.dim_noise = 1;
    s.theta = {0.0};
    s.vol.value = [](double, const Vec&, const Vec&, Mat& out) { out(0, 0) = 0.5; };
    const Mat a = a_matrix(s, 0.0, {1.0}, s.theta);
    CHECK(a(0, 0) == doctest::Approx(0.125));
  }
}

TEST_CASE("a_matrix is symmetric positive semidefinite") {
  ModelSpec m = theta_vol_model();
  const Vec x{0.5, 1.2};
  const Mat a = a_matrix(m, 0.3, x, m.theta);
  CHECK(a(0, 1) == doctest::Approx(a(1, 0)));
  // 2x2 PSD: nonnegative diagonal and determinant.
  CHECK(a(0, 0) >= 0.0);
  CHECK(a(1, 1) >= 0.0);
  CHECK(a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0) >= -1e-14);
}

TEST_CASE("dtheta_a matches finite differences of a_matrix") {
  ModelSpec m = theta_vol_model();
  const Vec x{0.5, 1.2};
  const double t = 0.3;
  const Tens3 da = dtheta_a(m, t, x, m.theta);
  const double h = 1e-6;
  for (std::size_t k = 0; k < 2; ++k) {
    Vec tp = m.theta, tm = m.theta;
    tp[k] += h;
    tm[k] -= h;
    const Mat ap = a_matrix(m, t, x, tp);
    const Mat am = a_matrix(m, t, x, tm);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j)
        CHECK(da(k, i, j) ==
              doctest::Approx((ap(i, j) - am(i, j)) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("dtheta_a is zero when sigma is theta-independent") {
  ModelSpec m = zoo::build_gbm(0.05, 0.2, 1.0);
  const Tens3 da = dtheta_a(m, 0.5, {1.0}, m.theta);
  for (double v : da.data) CHECK(v == 0.0);
}

TEST_CASE("validate_model accepts a correct model") {
  const auto report = validate_model(zoo::build_gbm(0.05, 0.2, 1.0), 16, 11);
  CHECK(report.passed);
  CHECK(!report.checks.empty());
  for (const auto& c : report.checks) {
    INFO(c.name);
    CHECK(c.passed);
  }
}

TEST_CASE("validate_model flags a planted derivative fault") {
  ModelSpec m = zoo::build_gbm(0.05, 0.2, 1.0);
  m.drift.dtheta = [](double, const Vec& x, const Vec&, Mat& out) {
    out(0, 0) = 1.1 * x[0];  // should be x
  };
  const auto report = validate_model(m, 16, 11);
  CHECK(!report.passed);
  bool fault_named = false;
  for (const auto& c : report.checks)
    if (c.name == "drift.dtheta" && !c.passed) fault_named = true;
  CHECK(fault_named);
  CHECK(report.summary().find("drift.dtheta") != std::string::npos);
}

TEST_CASE("validate_model skips absent evaluators") {
  ModelSpec m;
  m.dim_state = m.dim_noise = m.dim_param = 1;
  m.theta = {0.0};
  m.drift.value = [](double, const Vec&, const Vec&, Vec& out) { out[0] = 0.0; };
  m.vol.value = [](double, const Vec&, const Vec&, Mat& out) { out(0, 0) = 1.0; };
  const auto report = validate_model(m, 8, 5);
  CHECK(report.passed);  // nothing to check, nothing to fail
}

TEST_CASE("compensator_exact sums atoms with weights") {
  ModelSpec m = zoo::build_jump_test(0.8);
  const Vec x{0.2};
  // chi = 0.2 * theta * z with atoms z in {-1, +1}, weights 1/2 each: the
  // weighted sum cancels exactly.
  const Vec comp = compensator_exact(m, 0.1, x, m.theta);
  CHECK(comp[0] == doctest::Approx(0.0).epsilon(1e-15));

  // Break the symmetry to get a nonzero compensator.
  ModelSpec asym = m;
  asym.jump->marks = DiscreteMarks{{Vec{-1.0}, Vec{1.0}}, {0.25, 0.75}};
  const Vec comp2 = compensator_exact(asym, 0.1, x, asym.theta);
  CHECK(comp2[0] == doctest::Approx(0.2 * 0.8 * (0.75 - 0.25)));
}
