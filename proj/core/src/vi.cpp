#include "svreg/vi.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

#include "svreg/adam.hpp"

namespace svreg {

ViResult run_vi(EnergyModel& model, const ViConfig& cfg,
                const std::function<void(int, const ViTraceRow&)>& on_iteration) {
  cfg.validate();
  const std::size_t P = model.size();
  const int R = cfg.rank;

  // optimisation parameters: mean (P), log sigma^2 (P), factor (P*R)
  std::vector<double> theta(P * (2 + static_cast<std::size_t>(R)));
  double* mu = theta.data();
  double* log_s2 = theta.data() + P;
  double* fac = theta.data() + 2 * P;
  for (std::size_t p = 0; p < P; ++p) {
    mu[p] = 0.0;
    log_s2[p] = 2.0 * std::log(cfg.sigma_init);
  }
  for (std::size_t i = 0; i < P * static_cast<std::size_t>(R); ++i)
    fac[i] = cfg.factor_init;

  LowRankGaussian q;
  q.dim = P;
  q.rank = R;
  q.mean.assign(mu, mu + P);
  q.sigma.assign(P, cfg.sigma_init);
  q.factor.assign(fac, fac + P * static_cast<std::size_t>(R));

  AdamState adam;
  adam.init(theta.size());
  Rng rng(cfg.seed);

  std::vector<double> eps(P), x(static_cast<std::size_t>(R));
  std::vector<double> w_plus(P), w_minus(P), g_plus(P), g_minus(P);
  std::vector<double> grad(theta.size());
  std::vector<double> dh_sigma(P), dh_factor(P * static_cast<std::size_t>(R));

  ViResult out;
  out.trace.reserve(cfg.iters);

  // Plateau rule on window means of the noisy ELBO: the run stops when the
  // latest plateau_window-iteration mean fails to beat the previous disjoint
  // window by more than plateau_tol plus twice the standard error of the
  // difference (the two-sample estimator carries O(nu) noise, so a raw
  // 1e-3 threshold alone would trigger on the first spike).
  std::deque<double> window;
  double window_sum = 0.0;
  double best_mean = -1e300;
  bool have_prev = false;
  double diff_var_acc = 0.0;
  int diff_count = 0;
  double last_elbo = 0.0;
  int flat_windows = 0;

  for (int k = 0; k < cfg.iters; ++k) {
    model.begin_iteration(k);

    // reparametrised antithetic pair (same draw order as sample_pair)
    for (int r = 0; r < R; ++r) x[r] = rng.normal();
    for (std::size_t p = 0; p < P; ++p) {
      eps[p] = rng.normal();
      double d = q.sigma[p] * eps[p];
      for (int r = 0; r < R; ++r) d += q.factor[p * R + r] * x[r];
      w_plus[p] = q.mean[p] + d;
      w_minus[p] = q.mean[p] - d;
    }
    model.filter_sample(w_plus);
    model.filter_sample(w_minus);

    const double e_plus = model.eval(w_plus, g_plus);
    const double data_plus = model.last_data_energy();
    const double reg_plus = model.last_reg_energy();
    const double e_minus = model.eval(w_minus, g_minus);
    const double data_minus = model.last_data_energy();
    const double reg_minus = model.last_reg_energy();
    model.filter_sample_adjoint(g_plus);
    model.filter_sample_adjoint(g_minus);

    const double h = entropy(q);
    entropy_grad(q, dh_sigma, dh_factor);

    const double mean_energy = 0.5 * (e_plus + e_minus);
    const double elbo = -(mean_energy - h);
    if (!std::isfinite(elbo))
      throw std::runtime_error("run_vi: ELBO diverged at iteration " +
                               std::to_string(k));

    // loss = <E> - H; w± = mu ± (sigma.*eps + U x)
    for (std::size_t p = 0; p < P; ++p) {
      const double sum = 0.5 * (g_plus[p] + g_minus[p]);
      const double diff = 0.5 * (g_plus[p] - g_minus[p]);
      grad[p] = sum;
      grad[P + p] =
          0.5 * q.sigma[p] * (diff * eps[p] - dh_sigma[p]);  // d/d log sigma^2
      for (int r = 0; r < R; ++r)
        grad[2 * P + p * R + r] = diff * x[r] - dh_factor[p * R + r];
    }

    const double lr = cfg.lr_posterior / (1.0 + cfg.lr_decay * k);
    adam.step(theta, grad, lr);
    for (std::size_t p = 0; p < P; ++p) {
      q.mean[p] = mu[p];
      q.sigma[p] = std::exp(0.5 * log_s2[p]);
    }
    for (std::size_t i = 0; i < P * static_cast<std::size_t>(R); ++i)
      q.factor[i] = fac[i];

    model.saem_update(1.0 / (1.0 + cfg.lr_decay * k));

    ViTraceRow row{k, elbo, 0.5 * (data_plus + data_minus),
                   0.5 * (reg_plus + reg_minus), h};
    out.trace.push_back(row);
    if (on_iteration) on_iteration(k, row);

    if (k > 0) {
      const double d = elbo - last_elbo;
      diff_var_acc += 0.5 * d * d;
      ++diff_count;
    }
    last_elbo = elbo;
    window.push_back(elbo);
    window_sum += elbo;
    if (static_cast<int>(window.size()) == cfg.plateau_window) {
      const double mean = window_sum / cfg.plateau_window;
      if (have_prev) {
        const double noise2 = diff_count ? diff_var_acc / diff_count : 0.0;
        const double se_diff = std::sqrt(2.0 * noise2 / cfg.plateau_window);
        if (mean - best_mean <= cfg.plateau_tol + 2.0 * se_diff) {
          if (++flat_windows >= cfg.plateau_patience) {
            out.plateaued = true;
            out.iters_run = k + 1;
            out.q = std::move(q);
            return out;
          }
        } else {
          flat_windows = 0;
        }
      }
      best_mean = std::max(best_mean, mean);
      have_prev = true;
      window.clear();
      window_sum = 0.0;
      diff_var_acc = 0.0;
      diff_count = 0;
    }
  }
  out.iters_run = cfg.iters;
  out.q = std::move(q);
  return out;
}

}  // namespace svreg
