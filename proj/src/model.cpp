#include "jumpgrad/model.hpp"

#include <cmath>
#include <sstream>

namespace jumpgrad {

Mat a_matrix(const ModelSpec& model, double t, const Vec& x, const Vec& theta) {
  const std::size_t d = model.dim_state, dp = model.dim_noise;
  Mat sigma(d, dp);
  model.vol.value(t, x, theta, sigma);
  if (!all_finite(sigma.data, sigma.data.size())) {
    std::ostringstream os;
    os << "a_matrix: non-finite sigma at t=" << t << " x=(";
    for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
    os << ")";
    throw EvalError(os.str());
  }
  Mat a(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < dp; ++k) s += sigma(i, k) * sigma(j, k);
      a(i, j) = 0.5 * s;
      a(j, i) = a(i, j);
    }
  return a;
}

Tens3 dtheta_a(const ModelSpec& model, double t, const Vec& x, const Vec& theta) {
  const std::size_t d = model.dim_state, dp = model.dim_noise, n = model.dim_param;
  Tens3 out(n, d, d);
  if (!model.sigma_theta_dependent) return out;

  Mat sigma(d, dp);
  model.vol.value(t, x, theta, sigma);
  Tens3 dsig(n, d, dp);
  model.vol.dtheta(t, x, theta, dsig);
  if (!all_finite(dsig.data, dsig.data.size()))
    throw EvalError("dtheta_a: non-finite sigma theta-derivative");

  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) {
        double s = 0.0;
        for (std::size_t kp = 0; kp < dp; ++kp)
          s += dsig(k, i, kp) * sigma(j, kp) + sigma(i, kp) * dsig(k, j, kp);
        out(k, i, j) = 0.5 * s;
        out(k, j, i) = out(k, i, j);
      }
  return out;
}

Vec compensator_exact(const ModelSpec& model, double t, const Vec& x, const Vec& theta) {
  Vec total(model.dim_state, 0.0);
  if (!model.jump) return total;
  const auto& marks = model.jump->discrete_marks();
  Vec chi(model.dim_state);
  for (std::size_t k = 0; k < marks.atoms.size(); ++k) {
    model.jump_coeff.value(t, x, theta, marks.atoms[k], chi);
    axpy(marks.weights[k], chi, total);
  }
  return total;
}

namespace {

struct ProbeContext {
  const ModelSpec& model;
  double rel_tol;
  double step;
  std::vector<DerivativeCheck>& checks;

  DerivativeCheck& check(const std::string& name) {
    for (auto& c : checks)
      if (c.name == name) return c;
    DerivativeCheck fresh;
    fresh.name = name;
    checks.push_back(std::move(fresh));
    return checks.back();
  }

  void record(const std::string& name, double analytic, double fd, double t, const Vec& x) {
    auto& c = check(name);
    const double dev = std::abs(analytic - fd);
    const double scale = std::max({1.0, std::abs(analytic), std::abs(fd)});
    const double rel = dev / scale;
    if (dev > c.max_abs_dev) c.max_abs_dev = dev;
    if (rel > c.max_rel_dev) {
      c.max_rel_dev = rel;
      c.worst_t = t;
      c.worst_x = x;
    }
    if (rel > rel_tol) c.passed = false;
  }
};

// Central finite difference of a vector-valued callable in one coordinate of
// its perturbation vector.
template <class F>
Vec central_fd(F&& f, Vec& pert, std::size_t coord, double h) {
  const double saved = pert[coord];
  pert[coord] = saved + h;
  Vec up = f();
  pert[coord] = saved - h;
  Vec dn = f();
  pert[coord] = saved;
  Vec out(up.size());
  for (std::size_t i = 0; i < up.size(); ++i) out[i] = (up[i] - dn[i]) / (2.0 * h);
  return out;
}

}  // namespace

std::string ValidationReport::summary() const {
  std::ostringstream os;
  os << (passed ? "PASS" : "FAIL") << "\n";
  for (const auto& c : checks) {
    os << "  " << (c.passed ? "ok  " : "FAIL") << " " << c.name
       << "  max_abs=" << c.max_abs_dev << "  max_rel=" << c.max_rel_dev;
    if (!c.passed) {
      os << "  worst at t=" << c.worst_t << " x=(";
      for (std::size_t i = 0; i < c.worst_x.size(); ++i) os << (i ? "," : "") << c.worst_x[i];
      os << ")";
    }
    os << "\n";
  }
  return os.str();
}

ValidationReport validate_model(const ModelSpec& model, int probe_count,
                                std::uint64_t rng_seed, double rel_tol, double fd_step) {
  model.check_dims();
  const std::size_t d = model.dim_state, dp = model.dim_noise, n = model.dim_param;
  ValidationReport report;
  ProbeContext ctx{model, rel_tol, fd_step, report.checks};

  rng::Stream stream(rng_seed, 0, rng::Purpose::kProbe);

  Vec mu(d), chi(d), grad(d);
  Mat mu_dx(d, d), mu_dth(n, d), sigma(d, dp), hess(d, d);
  Tens3 mu_dxx(d, d, d), sig_dx(d, dp, d), sig_dth(n, d, dp), chi_dxx(d, d, d);
  Tens4 sig_dxx(d, dp, d, d);
  Mat chi_dx(d, d), chi_dth(n, d);
  Vec rho_dth(n), g_dth(n);

  // Marks probed for the jump coefficient: atoms if discrete, a handful of
  // sampled marks otherwise.
  std::vector<Vec> probe_marks;
  if (model.jump) {
    if (model.jump->discrete()) {
      probe_marks = model.jump->discrete_marks().atoms;
    } else {
      for (int i = 0; i < 3; ++i)
        probe_marks.push_back(model.jump->continuous_marks().sample(stream));
    }
  }

  for (int probe = 0; probe < probe_count; ++probe) {
    const double t = stream.uniform(0.0, model.horizon);
    Vec x(d);
    // Positive probe points so models with sqrt-type coefficients stay in
    // their natural domain.
    for (auto& xi : x) xi = 0.2 + std::abs(stream.normal());
    Vec theta = model.theta;

    const double h = fd_step;

    // --- drift ---
    if (model.drift.dx) {
      model.drift.dx(t, x, theta, mu_dx);
      for (std::size_t l = 0; l < d; ++l) {
        Vec fd = central_fd(
            [&] {
              Vec v(d);
              model.drift.value(t, x, theta, v);
              return v;
            },
            x, l, h);
        for (std::size_t i = 0; i < d; ++i)
          ctx.record("drift.dx", mu_dx(i, l), fd[i], t, x);
      }
    }
    if (model.drift.dxx) {
      model.drift.dxx(t, x, theta, mu_dxx);
      for (std::size_t m = 0; m < d; ++m) {
        Vec fd_flat = central_fd(
            [&] {
              Mat g(d, d);
              model.drift.dx(t, x, theta, g);
              return g.data;
            },
            x, m, h);
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t l = 0; l < d; ++l)
            ctx.record("drift.dxx", mu_dxx(i, l, m), fd_flat[i * d + l], t, x);
      }
    }
    if (model.drift.dtheta) {
      model.drift.dtheta(t, x, theta, mu_dth);
      for (std::size_t k = 0; k < n; ++k) {
        Vec fd = central_fd(
            [&] {
              Vec v(d);
              model.drift.value(t, x, theta, v);
              return v;
            },
            theta, k, h);
        for (std::size_t i = 0; i < d; ++i)
          ctx.record("drift.dtheta", mu_dth(k, i), fd[i], t, x);
      }
    }

    // --- volatility ---
    if (model.vol.dx) {
      model.vol.dx(t, x, theta, sig_dx);
      for (std::size_t l = 0; l < d; ++l) {
        Vec fd_flat = central_fd(
            [&] {
              Mat s(d, dp);
              model.vol.value(t, x, theta, s);
              return s.data;
            },
            x, l, h);
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t k = 0; k < dp; ++k)
            ctx.record("vol.dx", sig_dx(i, k, l), fd_flat[i * dp + k], t, x);
      }
    }
    if (model.vol.dxx) {
      model.vol.dxx(t, x, theta, sig_dxx);
      for (std::size_t m = 0; m < d; ++m) {
        Vec fd_flat = central_fd(
            [&] {
              Tens3 g(d, dp, d);
              model.vol.dx(t, x, theta, g);
              return g.data;
            },
            x, m, h);
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t k = 0; k < dp; ++k)
            for (std::size_t l = 0; l < d; ++l)
              ctx.record("vol.dxx", sig_dxx(i, k, l, m), fd_flat[(i * dp + k) * d + l], t, x);
      }
    }
    if (model.vol.dtheta) {
      model.vol.dtheta(t, x, theta, sig_dth);
      for (std::size_t k = 0; k < n; ++k) {
        Vec fd_flat = central_fd(
            [&] {
              Mat s(d, dp);
              model.vol.value(t, x, theta, s);
              return s.data;
            },
            theta, k, h);
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j < dp; ++j)
            ctx.record("vol.dtheta", sig_dth(k, i, j), fd_flat[i * dp + j], t, x);
      }
    }

    // --- jump coefficient ---
    for (const Vec& z : probe_marks) {
      if (model.jump_coeff.dx) {
        model.jump_coeff.dx(t, x, theta, z, chi_dx);
        for (std::size_t l = 0; l < d; ++l) {
          Vec fd = central_fd(
              [&] {
                Vec v(d);
                model.jump_coeff.value(t, x, theta, z, v);
                return v;
              },
              x, l, h);
          for (std::size_t i = 0; i < d; ++i)
            ctx.record("jump.dx", chi_dx(i, l), fd[i], t, x);
        }
      }
      if (model.jump_coeff.dtheta) {
        model.jump_coeff.dtheta(t, x, theta, z, chi_dth);
        for (std::size_t k = 0; k < n; ++k) {
          Vec fd = central_fd(
              [&] {
                Vec v(d);
                model.jump_coeff.value(t, x, theta, z, v);
                return v;
              },
              theta, k, h);
          for (std::size_t i = 0; i < d; ++i)
            ctx.record("jump.dtheta", chi_dth(k, i), fd[i], t, x);
        }
      }
    }

    // --- rewards ---
    if (model.reward.rho_grad) {
      model.reward.rho_grad(t, x, theta, grad);
      for (std::size_t l = 0; l < d; ++l) {
        Vec fd = central_fd(
            [&] { return Vec{model.reward.rho(t, x, theta)}; }, x, l, h);
        ctx.record("rho.grad", grad[l], fd[0], t, x);
      }
    }
    if (model.reward.rho_hess) {
      model.reward.rho_hess(t, x, theta, hess);
      for (std::size_t m = 0; m < d; ++m) {
        Vec fd = central_fd(
            [&] {
              Vec g(d);
              model.reward.rho_grad(t, x, theta, g);
              return g;
            },
            x, m, h);
        for (std::size_t l = 0; l < d; ++l)
          ctx.record("rho.hess", hess(l, m), fd[l], t, x);
      }
    }
    if (model.reward.rho_dtheta) {
      model.reward.rho_dtheta(t, x, theta, rho_dth);
      for (std::size_t k = 0; k < n; ++k) {
        Vec fd = central_fd(
            [&] { return Vec{model.reward.rho(t, x, theta)}; }, theta, k, h);
        ctx.record("rho.dtheta", rho_dth[k], fd[0], t, x);
      }
    }
    if (model.reward.g_grad) {
      model.reward.g_grad(x, theta, grad);
      for (std::size_t l = 0; l < d; ++l) {
        Vec fd = central_fd([&] { return Vec{model.reward.g(x, theta)}; }, x, l, h);
        ctx.record("g.grad", grad[l], fd[0], t, x);
      }
    }
    if (model.reward.g_hess) {
      model.reward.g_hess(x, theta, hess);
      for (std::size_t m = 0; m < d; ++m) {
        Vec fd = central_fd(
            [&] {
              Vec g(d);
              model.reward.g_grad(x, theta, g);
              return g;
            },
            x, m, h);
        for (std::size_t l = 0; l < d; ++l)
          ctx.record("g.hess", hess(l, m), fd[l], t, x);
      }
    }
    if (model.reward.g_dtheta) {
      model.reward.g_dtheta(x, theta, g_dth);
      for (std::size_t k = 0; k < n; ++k) {
        Vec fd = central_fd([&] { return Vec{model.reward.g(x, theta)}; }, theta, k, h);
        ctx.record("g.dtheta", g_dth[k], fd[0], t, x);
      }
    }
  }

  for (const auto& c : report.checks)
    if (!c.passed) report.passed = false;
  return report;
}

}  // namespace jumpgrad
