#include "jumpgrad/estimators.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "jumpgrad/parallel.hpp"

namespace jumpgrad::est {

std::atomic<std::uint64_t> h_request_count{0};

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Deterministic pairwise tree sum of term(i) for i in [lo, hi).
template <class Term>
Vec pairwise_sum(std::size_t lo, std::size_t hi, const Term& term) {
  if (hi - lo == 1) return term(lo);
  const std::size_t mid = lo + (hi - lo) / 2;
  Vec left = pairwise_sum(lo, mid, term);
  const Vec right = pairwise_sum(mid, hi, term);
  for (std::size_t i = 0; i < left.size(); ++i) left[i] += right[i];
  return left;
}

}  // namespace

double value_sample(const ModelSpec& model, const Vec& theta, const Vec& x0,
                    const EstimatorConfig& cfg, std::uint64_t replication) {
  const double T = model.horizon;
  const std::size_t n_steps = cfg.sim.steps_for(0.0, T, T);
  const double dt = T / static_cast<double>(n_steps);
  SimStreams streams = make_sim_streams(cfg.master_seed, replication);
  double acc = 0.0;
  const bool has_rho = static_cast<bool>(model.reward.rho);
  simulate_base(model, theta, x0, 0.0, T, cfg.sim, streams,
                [&](std::size_t step, double t, const Vec& x) {
                  if (step < n_steps) {
                    if (has_rho) acc += dt * model.reward.rho(t, x, theta);
                  } else if (model.reward.g) {
                    acc += model.reward.g(x, theta);
                  }
                });
  return acc;
}

std::pair<double, double> value_estimate(const ModelSpec& model, const Vec& x0,
                                         const EstimatorConfig& cfg,
                                         std::size_t n_samples) {
  if (n_samples < 2)
    throw std::invalid_argument("value_estimate: need n_samples >= 2 for a standard error");
  std::vector<double> vals(n_samples);
  for_each_replication(n_samples, cfg.workers, [&](std::size_t j) {
    vals[j] = value_sample(model, model.theta, x0, cfg, j);
  });
  const Vec sum = pairwise_sum(0, n_samples, [&](std::size_t j) { return Vec{vals[j]}; });
  const double mean = sum[0] / static_cast<double>(n_samples);
  const Vec sq = pairwise_sum(0, n_samples, [&](std::size_t j) {
    const double d = vals[j] - mean;
    return Vec{d * d};
  });
  const double sd = std::sqrt(sq[0] / static_cast<double>(n_samples - 1));
  return {mean, sd / std::sqrt(static_cast<double>(n_samples))};
}

ZHValue sample_Z_H(const ModelSpec& model, const Vec& theta, double t, const Vec& x,
                   const EstimatorConfig& cfg, std::uint64_t replication, bool need_h,
                   std::uint32_t salt) {
  const std::size_t d = model.dim_state;
  const double T = model.horizon;
  if (need_h) h_request_count.fetch_add(1, std::memory_order_relaxed);

  const std::size_t n_steps = cfg.sim.steps_for(t, T, T);
  const double dt = n_steps ? (T - t) / static_cast<double>(n_steps) : 0.0;

  ZHValue out;
  out.z.assign(d, 0.0);
  out.has_h = need_h;
  if (need_h) out.h.resize(d, d);

  Vec rho_grad(d), g_grad(d);
  Mat rho_hess(d, d), g_hess(d, d);
  SimStreams streams = make_sim_streams(cfg.master_seed, replication, /*z_path=*/true, salt);

  simulate_augmented(
      model, theta, x, t, T, cfg.sim, streams, need_h,
      [&](std::size_t step, double tr, const AugmentedState& st) {
        const bool terminal = (step == n_steps);
        const double w = terminal ? 1.0 : dt;
        const Vec* grad = nullptr;
        const Mat* hess = nullptr;
        if (terminal) {
          model.reward.g_grad(st.x, theta, g_grad);
          grad = &g_grad;
          if (need_h) {
            model.reward.g_hess(st.x, theta, g_hess);
            hess = &g_hess;
          }
        } else {
          if (!model.reward.rho_grad) return;
          model.reward.rho_grad(tr, st.x, theta, rho_grad);
          grad = &rho_grad;
          if (need_h) {
            model.reward.rho_hess(tr, st.x, theta, rho_hess);
            hess = &rho_hess;
          }
        }
        // Z^T += w * grad^T grad_x
        for (std::size_t a = 0; a < d; ++a) {
          double s = 0.0;
          for (std::size_t i = 0; i < d; ++i) s += (*grad)[i] * st.grad_x(i, a);
          out.z[a] += w * s;
        }
        if (need_h) {
          // H += w * (grad_x^T hess grad_x + <grad, H[X]>)
          for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = a; b < d; ++b) {
              double s = 0.0;
              for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j)
                  s += st.grad_x(i, a) * (*hess)(i, j) * st.grad_x(j, b);
              for (std::size_t i = 0; i < d; ++i)
                s += (*grad)[i] * st.hess(i, a, b, d);
              out.h(a, b) += w * s;
              if (b != a) out.h(b, a) = out.h(a, b);
            }
        }
      });
  return out;
}

SampleDraw gg_sample(const ModelSpec& model, const Vec& x0, const EstimatorConfig& cfg,
                     std::uint64_t replication) {
  const std::size_t d = model.dim_state, n = model.dim_param;
  const Vec& theta = model.theta;
  const double T = model.horizon;
  const std::size_t n_steps = cfg.sim.steps_for(0.0, T, T);
  const double dt = T / static_cast<double>(n_steps);

  rng::Stream tau_stream(cfg.master_seed, replication, rng::Purpose::kTau);
  const double tau = tau_stream.uniform(0.0, T);
  const std::size_t k_tau =
      std::min(static_cast<std::size_t>(tau / dt), n_steps - 1);

  double tau_reward = 0.0;
  std::size_t k_tau_reward = 0;
  if (cfg.randomize_reward_integral) {
    rng::Stream tr_stream(cfg.master_seed, replication, rng::Purpose::kTauReward);
    tau_reward = tr_stream.uniform(0.0, T);
    k_tau_reward = std::min(static_cast<std::size_t>(tau_reward / dt), n_steps - 1);
  }

  Vec reward_acc(n, 0.0), x_tau(d), scratch(n);
  const bool has_rho_dth = static_cast<bool>(model.reward.rho_dtheta);

  SimStreams streams = make_sim_streams(cfg.master_seed, replication);
  simulate_base(model, theta, x0, 0.0, T, cfg.sim, streams,
                [&](std::size_t step, double t, const Vec& x) {
                  if (step == k_tau) x_tau = x;
                  if (step < n_steps) {
                    if (!has_rho_dth) return;
                    if (cfg.randomize_reward_integral) {
                      if (step == k_tau_reward) {
                        model.reward.rho_dtheta(tau_reward, x, theta, scratch);
                        axpy(T, scratch, reward_acc);
                      }
                    } else {
                      model.reward.rho_dtheta(t, x, theta, scratch);
                      axpy(dt, scratch, reward_acc);
                    }
                  } else if (model.reward.g_dtheta) {
                    model.reward.g_dtheta(x, theta, scratch);
                    axpy(1.0, scratch, reward_acc);
                  }
                });

  // One Z (and H when sigma depends on theta) draw at (tau, X(tau)); reused
  // by the continuous contraction and the jump difference below.
  const bool need_h = model.sigma_theta_dependent;
  const ZHValue zh = sample_Z_H(model, theta, tau, x_tau, cfg, replication, need_h, 0);

  Vec gen_grad(n, 0.0);

  // Continuous part: sum_i dtheta mu_i Z_i + sum_ij dtheta a_ij H_ij.
  if (model.drift.dtheta) {
    Mat mu_dth(n, d);
    model.drift.dtheta(tau, x_tau, theta, mu_dth);
    for (std::size_t k = 0; k < n; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += mu_dth(k, i) * zh.z[i];
      gen_grad[k] += s;
    }
  }
  if (need_h) {
    const Tens3 a_dth = dtheta_a(model, tau, x_tau, theta);
    for (std::size_t k = 0; k < n; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) s += a_dth(k, i, j) * zh.h(i, j);
      gen_grad[k] += s;
    }
  }

  // Jump part: nu-integral of dtheta chi_i (Z_i^{shift} - Z_i), exact atom
  // sum for discrete marks, single randomized mark otherwise.
  if (model.jump && model.jump->rate > 0.0 && model.jump_coeff.dtheta) {
    Vec chi(d), x_shift(d);
    Mat chi_dth(n, d);
    auto add_mark = [&](const Vec& z, double weight, std::uint32_t shift_salt) {
      model.jump_coeff.value(tau, x_tau, theta, z, chi);
      model.jump_coeff.dtheta(tau, x_tau, theta, z, chi_dth);
      for (std::size_t i = 0; i < d; ++i) x_shift[i] = x_tau[i] + chi[i];
      const ZHValue zs = sample_Z_H(model, theta, tau, x_shift, cfg, replication,
                                    /*need_h=*/false, cfg.coupled_jump_z ? 0 : shift_salt);
      for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i)
          s += chi_dth(k, i) * (zs.z[i] - zh.z[i]);
        gen_grad[k] += weight * s;
      }
    };
    if (model.jump->discrete()) {
      const auto& dm = model.jump->discrete_marks();
      for (std::size_t a = 0; a < dm.atoms.size(); ++a)
        add_mark(dm.atoms[a], dm.weights[a], static_cast<std::uint32_t>(1 + a));
    } else {
      rng::Stream mark_stream(cfg.master_seed, replication, rng::Purpose::kJumpPartMark);
      const Vec z = model.jump->continuous_marks().sample(mark_stream);
      add_mark(z, model.jump->rate, 1);
    }
  }

  SampleDraw draw;
  draw.tau = tau;
  draw.replication_index = replication;
  draw.gradient.resize(n);
  for (std::size_t k = 0; k < n; ++k) draw.gradient[k] = T * gen_grad[k] + reward_acc[k];
  if (!all_finite(draw.gradient)) {
    std::ostringstream os;
    os << "gg_sample: non-finite gradient (replication " << replication << ", tau=" << tau
       << ")";
    throw SimError(os.str());
  }
  return draw;
}

SampleDraw pd_sample(const ModelSpec& model, const Vec& x0, const EstimatorConfig& cfg,
                     std::uint64_t replication) {
  const std::size_t d = model.dim_state, n = model.dim_param;
  const Vec& theta = model.theta;
  const double T = model.horizon;
  const std::size_t n_steps = cfg.sim.steps_for(0.0, T, T);
  const double dt = T / static_cast<double>(n_steps);

  double tau = 0.0;
  std::size_t k_tau = 0;
  if (cfg.pd_randomize_time) {
    rng::Stream tau_stream(cfg.master_seed, replication, rng::Purpose::kTau);
    tau = tau_stream.uniform(0.0, T);
    k_tau = std::min(static_cast<std::size_t>(tau / dt), n_steps - 1);
  }

  Vec acc(n, 0.0), rho_grad(d), g_grad(d), scratch(n);
  const bool has_rho_grad = static_cast<bool>(model.reward.rho_grad);
  const bool has_rho_dth = static_cast<bool>(model.reward.rho_dtheta);

  auto running_term = [&](double t, const PathwiseState& st, double weight) {
    if (has_rho_dth) {
      model.reward.rho_dtheta(t, st.x, theta, scratch);
      axpy(weight, scratch, acc);
    }
    if (has_rho_grad) {
      model.reward.rho_grad(t, st.x, theta, rho_grad);
      for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += st.dtheta_x(k, i) * rho_grad[i];
        acc[k] += weight * s;
      }
    }
  };

  SimStreams streams = make_sim_streams(cfg.master_seed, replication);
  simulate_pathwise(model, theta, x0, 0.0, T, cfg.sim, streams,
                    [&](std::size_t step, double t, const PathwiseState& st) {
                      if (step < n_steps) {
                        if (cfg.pd_randomize_time) {
                          if (step == k_tau) running_term(tau, st, T);
                        } else {
                          running_term(t, st, dt);
                        }
                      } else {
                        if (model.reward.g_dtheta) {
                          model.reward.g_dtheta(st.x, theta, scratch);
                          axpy(1.0, scratch, acc);
                        }
                        if (model.reward.g_grad) {
                          model.reward.g_grad(st.x, theta, g_grad);
                          for (std::size_t k = 0; k < n; ++k) {
                            double s = 0.0;
                            for (std::size_t i = 0; i < d; ++i)
                              s += st.dtheta_x(k, i) * g_grad[i];
                            acc[k] += s;
                          }
                        }
                      }
                    });

  SampleDraw draw;
  draw.tau = tau;
  draw.replication_index = replication;
  draw.gradient = std::move(acc);
  if (!all_finite(draw.gradient)) {
    std::ostringstream os;
    os << "pd_sample: non-finite gradient (replication " << replication << ")";
    throw SimError(os.str());
  }
  return draw;
}

GradientEstimate fd_estimate(const ModelSpec& model, const Vec& x0, double h,
                             const EstimatorConfig& cfg, std::size_t n_samples) {
  if (h <= 0.0) throw std::invalid_argument("fd_estimate: h must be > 0");
  if (n_samples < 2) throw std::invalid_argument("fd_estimate: need n_samples >= 2");
  const std::size_t n = model.dim_param;
  const auto t0 = Clock::now();

  // diffs[j] holds the CRN central difference vector for replication j.
  std::vector<Vec> diffs(n_samples);
  for_each_replication(n_samples, cfg.workers, [&](std::size_t j) {
    Vec grad(n);
    for (std::size_t k = 0; k < n; ++k) {
      Vec theta_p = model.theta, theta_m = model.theta;
      theta_p[k] += 0.5 * h;
      theta_m[k] -= 0.5 * h;
      const double vp = value_sample(model, theta_p, x0, cfg, j);
      const double vm = value_sample(model, theta_m, x0, cfg, j);
      grad[k] = (vp - vm) / h;
    }
    diffs[j] = std::move(grad);
  });

  std::vector<SampleDraw> samples(n_samples);
  for (std::size_t j = 0; j < n_samples; ++j) {
    samples[j].gradient = std::move(diffs[j]);
    samples[j].replication_index = j;
  }
  return mc_aggregate(samples, EstimatorKind::kFD, seconds_since(t0));
}

GradientEstimate mc_aggregate(const std::vector<SampleDraw>& samples, EstimatorKind kind,
                              double wall_seconds) {
  if (samples.size() < 2)
    throw std::invalid_argument("mc_aggregate: need at least 2 samples");
  const std::size_t N = samples.size();
  const std::size_t n = samples[0].gradient.size();

  GradientEstimate est;
  est.kind = kind;
  est.n_samples = N;
  est.wall_seconds = wall_seconds;

  const Vec sum =
      pairwise_sum(0, N, [&](std::size_t j) { return samples[j].gradient; });
  est.mean.resize(n);
  for (std::size_t k = 0; k < n; ++k) est.mean[k] = sum[k] / static_cast<double>(N);

  const Vec sq = pairwise_sum(0, N, [&](std::size_t j) {
    Vec out(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double dev = samples[j].gradient[k] - est.mean[k];
      out[k] = dev * dev;
    }
    return out;
  });
  est.se.resize(n);
  est.ci95_halfwidth.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    est.se[k] = std::sqrt(sq[k] / static_cast<double>(N - 1)) /
                std::sqrt(static_cast<double>(N));
    est.ci95_halfwidth[k] = 1.96 * est.se[k];
  }
  return est;
}

ComparisonReport se_comparison(const std::vector<SampleDraw>& gg,
                               const std::vector<SampleDraw>& pd, std::size_t n_bins) {
  if (gg.empty() || pd.empty()) throw std::invalid_argument("se_comparison: empty input");
  if (gg[0].gradient.size() != pd[0].gradient.size())
    throw std::invalid_argument("se_comparison: coordinate dimension mismatch");
  const auto est_gg = mc_aggregate(gg, EstimatorKind::kGG);
  const auto est_pd = mc_aggregate(pd, EstimatorKind::kPD);
  const std::size_t n = est_gg.se.size();

  ComparisonReport rep;
  rep.se_gg = est_gg.se;
  rep.se_pd = est_pd.se;
  rep.ratio.assign(n, 0.0);
  rep.ratio_missing.assign(n, false);

  double sum_ratio = 0.0;
  std::size_t n_defined = 0;
  for (std::size_t k = 0; k < n; ++k) {
    rep.avg_se_gg += rep.se_gg[k] / static_cast<double>(n);
    rep.avg_se_pd += rep.se_pd[k] / static_cast<double>(n);
    if (rep.se_pd[k] == 0.0) {
      rep.ratio_missing[k] = true;
      ++rep.n_missing;
    } else {
      rep.ratio[k] = rep.se_gg[k] / rep.se_pd[k];
      sum_ratio += rep.ratio[k];
      ++n_defined;
    }
  }
  rep.avg_ratio = n_defined ? sum_ratio / static_cast<double>(n_defined) : 0.0;

  // Shared fixed binning over the pooled SE range.
  double max_se = 0.0;
  for (double v : rep.se_gg) max_se = std::max(max_se, v);
  for (double v : rep.se_pd) max_se = std::max(max_se, v);
  if (max_se <= 0.0) max_se = 1.0;
  rep.bin_edges.resize(n_bins + 1);
  for (std::size_t b = 0; b <= n_bins; ++b)
    rep.bin_edges[b] = max_se * static_cast<double>(b) / static_cast<double>(n_bins);
  rep.hist_gg.assign(n_bins, 0);
  rep.hist_pd.assign(n_bins, 0);
  auto bin_of = [&](double v) {
    auto b = static_cast<std::size_t>(v / max_se * static_cast<double>(n_bins));
    return std::min(b, n_bins - 1);
  };
  for (double v : rep.se_gg) ++rep.hist_gg[bin_of(v)];
  for (double v : rep.se_pd) ++rep.hist_pd[bin_of(v)];
  return rep;
}

}  // namespace jumpgrad::est
