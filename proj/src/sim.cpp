#include "jumpgrad/sim.hpp"

#include <cmath>
#include <sstream>

namespace jumpgrad {

namespace {

void check_interval(const ModelSpec& model, double t0, double t1) {
  if (t0 > t1) throw std::invalid_argument("simulate: t0 > t1");
  if (t1 > model.horizon * (1.0 + 1e-12))
    throw std::invalid_argument("simulate: t1 exceeds model horizon");
}

[[noreturn]] void throw_nonfinite(std::size_t step) {
  std::ostringstream os;
  os << "simulate: non-finite state at step " << step;
  throw SimError(os.str());
}

// One step's worth of jump randomness: the applied jumps (mark, multiplicity)
// and, when compensated, the marks/weights for the compensator drift (exact
// atom sum for discrete marks, a single unbiased draw scaled by the total
// rate for continuous marks).
struct JumpDraws {
  std::vector<std::pair<const Vec*, double>> events;   // (mark, count)
  std::vector<std::pair<const Vec*, double>> comp;     // (mark, weight)
  std::vector<Vec> owned_marks;                        // storage for sampled marks

  void draw(const ModelSpec& model, double dt, SimStreams& s) {
    events.clear();
    comp.clear();
    owned_marks.clear();
    if (!model.jump || model.jump->rate <= 0.0) return;
    const JumpSpec& js = *model.jump;
    if (js.discrete()) {
      const auto& dm = js.discrete_marks();
      for (std::size_t k = 0; k < dm.atoms.size(); ++k) {
        const auto count = s.jump_count.poisson(dm.weights[k] * dt);
        if (count > 0) events.emplace_back(&dm.atoms[k], static_cast<double>(count));
        if (js.compensated) comp.emplace_back(&dm.atoms[k], dm.weights[k]);
      }
    } else {
      const auto count = s.jump_count.poisson(js.rate * dt);
      owned_marks.reserve(count + 1);
      for (std::uint64_t j = 0; j < count; ++j)
        owned_marks.push_back(js.continuous_marks().sample(s.marks));
      if (js.compensated)
        owned_marks.push_back(js.continuous_marks().sample(s.comp_mark));
      for (std::uint64_t j = 0; j < count; ++j) events.emplace_back(&owned_marks[j], 1.0);
      if (js.compensated) comp.emplace_back(&owned_marks.back(), js.rate);
    }
  }
};

}  // namespace

Vec simulate_base(const ModelSpec& model, const Vec& theta, const Vec& x0, double t0,
                  double t1, const SimConfig& cfg, SimStreams& streams,
                  const BaseObserver& observer, std::vector<Vec>* path) {
  check_interval(model, t0, t1);
  const std::size_t d = model.dim_state, dp = model.dim_noise;
  const std::size_t n_steps = cfg.steps_for(t0, t1, model.horizon);
  const double dt = n_steps ? (t1 - t0) / static_cast<double>(n_steps) : 0.0;
  const double sqrt_dt = std::sqrt(dt);

  Vec x = x0;
  if (path) {
    path->clear();
    path->push_back(x);
  }

  Vec mu(d), chi(d), db(dp);
  Mat sigma(d, dp);
  JumpDraws jumps;

  for (std::size_t step = 0; step < n_steps; ++step) {
    const double t = t0 + static_cast<double>(step) * dt;
    if (observer) observer(step, t, x);

    model.drift.value(t, x, theta, mu);
    model.vol.value(t, x, theta, sigma);
    for (std::size_t k = 0; k < dp; ++k) db[k] = sqrt_dt * streams.brownian.normal();
    jumps.draw(model, dt, streams);

    Vec x_new = x;
    for (std::size_t i = 0; i < d; ++i) {
      double incr = mu[i] * dt;
      for (std::size_t k = 0; k < dp; ++k) incr += sigma(i, k) * db[k];
      x_new[i] += incr;
    }
    for (const auto& [z, count] : jumps.events) {
      model.jump_coeff.value(t, x, theta, *z, chi);
      axpy(count, chi, x_new);
    }
    for (const auto& [z, w] : jumps.comp) {
      model.jump_coeff.value(t, x, theta, *z, chi);
      axpy(-dt * w, chi, x_new);
    }

    if (model.clamp_fn) model.clamp_fn(x_new);
    if (!all_finite(x_new)) throw_nonfinite(step);
    x = std::move(x_new);
    if (path) path->push_back(x);
  }
  if (observer) observer(n_steps, t1, x);
  return x;
}

AugmentedState simulate_augmented(const ModelSpec& model, const Vec& theta, const Vec& x0,
                                  double t0, double t1, const SimConfig& cfg,
                                  SimStreams& streams, bool with_hess,
                                  const AugmentedObserver& observer) {
  check_interval(model, t0, t1);
  const std::size_t d = model.dim_state, dp = model.dim_noise;
  const std::size_t tri = tri_size(d);
  const std::size_t n_steps = cfg.steps_for(t0, t1, model.horizon);
  const double dt = n_steps ? (t1 - t0) / static_cast<double>(n_steps) : 0.0;
  const double sqrt_dt = std::sqrt(dt);

  AugmentedState st;
  st.x = x0;
  st.grad_x = Mat::identity(d);
  st.has_hess = with_hess;
  if (with_hess) st.hess_x.assign(d * tri, 0.0);
  st.t = t0;

  Vec mu(d), chi(d), db(dp);
  Mat sigma(d, dp), mu_dx(d, d), chi_dx(d, d);
  Tens3 sig_dx(d, dp, d), mu_dxx(d, d, d), chi_dxx(d, d, d);
  Tens4 sig_dxx(d, dp, d, d);

  // Effective per-step linear map M (first-order) and bilinear map M2
  // (second-order): grad <- grad + M grad, and the Hessian picks up
  // M hess + M2[grad, grad].
  Mat eff(d, d);
  Tens3 eff2(with_hess ? d : 0, with_hess ? d : 0, with_hess ? d : 0);
  Vec x_new(d);
  Mat grad_new(d, d);
  std::vector<double> hess_new(with_hess ? d * tri : 0);
  JumpDraws jumps;

  for (std::size_t step = 0; step < n_steps; ++step) {
    const double t = t0 + static_cast<double>(step) * dt;
    st.t = t;
    if (observer) observer(step, t, st);

    model.drift.value(t, st.x, theta, mu);
    model.vol.value(t, st.x, theta, sigma);
    model.drift.dx(t, st.x, theta, mu_dx);
    model.vol.dx(t, st.x, theta, sig_dx);
    if (with_hess) {
      model.drift.dxx(t, st.x, theta, mu_dxx);
      model.vol.dxx(t, st.x, theta, sig_dxx);
    }
    for (std::size_t k = 0; k < dp; ++k) db[k] = sqrt_dt * streams.brownian.normal();
    jumps.draw(model, dt, streams);

    // Base state increment.
    x_new = st.x;
    for (std::size_t i = 0; i < d; ++i) {
      double incr = mu[i] * dt;
      for (std::size_t k = 0; k < dp; ++k) incr += sigma(i, k) * db[k];
      x_new[i] += incr;
    }

    // Effective maps: dt-drift + Brownian + jump contributions.
    eff.set_zero();
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t l = 0; l < d; ++l) {
        double v = dt * mu_dx(i, l);
        for (std::size_t k = 0; k < dp; ++k) v += db[k] * sig_dx(i, k, l);
        eff(i, l) = v;
      }
    if (with_hess) {
      eff2.set_zero();
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t l = 0; l < d; ++l)
          for (std::size_t m = 0; m < d; ++m) {
            double v = dt * mu_dxx(i, l, m);
            for (std::size_t k = 0; k < dp; ++k) v += db[k] * sig_dxx(i, k, l, m);
            eff2(i, l, m) = v;
          }
    }

    auto add_jump_terms = [&](const Vec& z, double weight, bool apply_to_x) {
      model.jump_coeff.value(t, st.x, theta, z, chi);
      model.jump_coeff.dx(t, st.x, theta, z, chi_dx);
      if (apply_to_x) axpy(weight, chi, x_new);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t l = 0; l < d; ++l) eff(i, l) += weight * chi_dx(i, l);
      if (with_hess) {
        model.jump_coeff.dxx(t, st.x, theta, z, chi_dxx);
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t l = 0; l < d; ++l)
            for (std::size_t m = 0; m < d; ++m)
              eff2(i, l, m) += weight * chi_dxx(i, l, m);
      }
    };
    for (const auto& [z, count] : jumps.events) add_jump_terms(*z, count, true);
    for (const auto& [z, w] : jumps.comp) {
      model.jump_coeff.value(t, st.x, theta, *z, chi);
      axpy(-dt * w, chi, x_new);
      add_jump_terms(*z, -dt * w, false);
    }

    // grad <- grad + eff * grad
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t a = 0; a < d; ++a) {
        double v = st.grad_x(i, a);
        for (std::size_t l = 0; l < d; ++l) v += eff(i, l) * st.grad_x(l, a);
        grad_new(i, a) = v;
      }

    if (with_hess) {
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t a = 0; a < d; ++a)
          for (std::size_t b = a; b < d; ++b) {
            const std::size_t idx = i * tri + tri_index(a, b, d);
            double v = st.hess_x[idx];
            for (std::size_t l = 0; l < d; ++l)
              v += eff(i, l) * st.hess_x[l * tri + tri_index(a, b, d)];
            for (std::size_t l = 0; l < d; ++l)
              for (std::size_t m = 0; m < d; ++m)
                v += eff2(i, l, m) * st.grad_x(l, a) * st.grad_x(m, b);
            hess_new[idx] = v;
          }
      st.hess_x = hess_new;
    }

    if (model.clamp_fn) model.clamp_fn(x_new);
    if (!all_finite(x_new) || !all_finite(grad_new.data, grad_new.data.size()))
      throw_nonfinite(step);
    st.x = x_new;
    st.grad_x = grad_new;
  }
  st.t = t1;
  if (observer) observer(n_steps, t1, st);
  return st;
}

PathwiseState simulate_pathwise(const ModelSpec& model, const Vec& theta, const Vec& x0,
                                double t0, double t1, const SimConfig& cfg,
                                SimStreams& streams, const PathwiseObserver& observer) {
  check_interval(model, t0, t1);
  const std::size_t d = model.dim_state, dp = model.dim_noise, n = model.dim_param;
  const std::size_t n_steps = cfg.steps_for(t0, t1, model.horizon);
  const double dt = n_steps ? (t1 - t0) / static_cast<double>(n_steps) : 0.0;
  const double sqrt_dt = std::sqrt(dt);

  PathwiseState st;
  st.x = x0;
  st.dtheta_x.resize(n, d);
  st.t = t0;

  Vec mu(d), chi(d), db(dp);
  Mat sigma(d, dp), mu_dx(d, d), chi_dx(d, d);
  Tens3 sig_dx(d, dp, d);
  Mat mu_dth(n, d), chi_dth(n, d);
  Tens3 sig_dth(n, d, dp);

  // Per-step effective first-order map (d x d) and additive theta term
  // (n x d); the sensitivity update is then a single pass over n*d.
  Mat eff(d, d), add(n, d);
  Vec x_new(d);
  Mat dth_new(n, d);
  JumpDraws jumps;

  const bool vol_theta = static_cast<bool>(model.vol.dtheta) && model.sigma_theta_dependent;

  for (std::size_t step = 0; step < n_steps; ++step) {
    const double t = t0 + static_cast<double>(step) * dt;
    st.t = t;
    if (observer) observer(step, t, st);

    model.drift.value(t, st.x, theta, mu);
    model.vol.value(t, st.x, theta, sigma);
    model.drift.dx(t, st.x, theta, mu_dx);
    model.vol.dx(t, st.x, theta, sig_dx);
    model.drift.dtheta(t, st.x, theta, mu_dth);
    if (vol_theta) model.vol.dtheta(t, st.x, theta, sig_dth);
    for (std::size_t k = 0; k < dp; ++k) db[k] = sqrt_dt * streams.brownian.normal();
    jumps.draw(model, dt, streams);

    x_new = st.x;
    for (std::size_t i = 0; i < d; ++i) {
      double incr = mu[i] * dt;
      for (std::size_t k = 0; k < dp; ++k) incr += sigma(i, k) * db[k];
      x_new[i] += incr;
    }

    eff.set_zero();
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t l = 0; l < d; ++l) {
        double v = dt * mu_dx(i, l);
        for (std::size_t k = 0; k < dp; ++k) v += db[k] * sig_dx(i, k, l);
        eff(i, l) = v;
      }
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < d; ++i) {
        double v = dt * mu_dth(k, i);
        if (vol_theta)
          for (std::size_t j = 0; j < dp; ++j) v += db[j] * sig_dth(k, i, j);
        add(k, i) = v;
      }

    auto add_jump_terms = [&](const Vec& z, double weight, bool apply_to_x) {
      model.jump_coeff.value(t, st.x, theta, z, chi);
      model.jump_coeff.dx(t, st.x, theta, z, chi_dx);
      model.jump_coeff.dtheta(t, st.x, theta, z, chi_dth);
      if (apply_to_x) axpy(weight, chi, x_new);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t l = 0; l < d; ++l) eff(i, l) += weight * chi_dx(i, l);
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < d; ++i) add(k, i) += weight * chi_dth(k, i);
    };
    for (const auto& [z, count] : jumps.events) add_jump_terms(*z, count, true);
    for (const auto& [z, w] : jumps.comp) {
      model.jump_coeff.value(t, st.x, theta, *z, chi);
      axpy(-dt * w, chi, x_new);
      add_jump_terms(*z, -dt * w, false);
    }

    for (std::size_t k = 0; k < n; ++k) {
      const double* row = &st.dtheta_x.data[k * d];
      double* out = &dth_new.data[k * d];
      for (std::size_t i = 0; i < d; ++i) {
        double v = row[i] + add(k, i);
        for (std::size_t l = 0; l < d; ++l) v += eff(i, l) * row[l];
        out[i] = v;
      }
    }

    if (model.clamp_fn) model.clamp_fn(x_new);
    if (!all_finite(x_new)) throw_nonfinite(step);
    st.x = x_new;
    std::swap(st.dtheta_x.data, dth_new.data);
  }
  st.t = t1;
  if (observer) observer(n_steps, t1, st);
  return st;
}

}  // namespace jumpgrad
