#pragma once

#include <functional>
#include <vector>

#include "svreg/energy.hpp"
#include "svreg/lowrank.hpp"

namespace svreg {

struct ViConfig {
  int iters = 1024;
  int rank = 1;
  double lr_posterior = 1e-2;
  double lr_gmm = 2e-1;   // forwarded to the model's SAEM step by the caller
  double lr_reg = 1e-2;
  double lr_decay = 1e-3;
  double sigma_init = 0.5;   // voxel units
  double factor_init = 0.1;  // voxel units
  double plateau_tol = 1e-3;
  int plateau_window = 50;
  int plateau_patience = 5;  // consecutive non-improving windows before stopping
  std::uint64_t seed = 0;

  void validate() const {
    check(iters > 0 && rank >= 0, "ViConfig: invalid iteration/rank counts");
    check(lr_posterior > 0 && lr_gmm > 0 && lr_reg > 0 && lr_decay >= 0,
          "ViConfig: step sizes must be positive, decay non-negative");
    check(sigma_init > 0, "ViConfig: sigma_init must be positive");
    check(plateau_window > 0, "ViConfig: plateau window must be positive");
  }
};

struct ViTraceRow {
  int iter = 0;
  double elbo = 0.0;
  double energy_data = 0.0;
  double energy_reg = 0.0;
  double entropy = 0.0;
};

struct ViResult {
  LowRankGaussian q;
  std::vector<ViTraceRow> trace;
  int iters_run = 0;
  bool plateaued = false;
};

/// Maximise the ELBO of a diagonal + low-rank Gaussian over the model
/// parameters: antithetic reparametrised pair per iteration, Adam on
/// (mean, log sigma^2, factor), then one SAEM step on the model's
/// hyperparameters. Stops at `iters` or when the moving average of the ELBO
/// has not improved by more than plateau_tol for plateau_window iterations.
ViResult run_vi(EnergyModel& model, const ViConfig& cfg,
                const std::function<void(int, const ViTraceRow&)>& on_iteration = {});

}  // namespace svreg
