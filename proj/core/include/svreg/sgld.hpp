#pragma once

#include <functional>
#include <vector>

#include "svreg/energy.hpp"
#include "svreg/rng.hpp"

namespace svreg {

struct SgldConfig {
  double tau = 0.4;
  long burn_in = 100000;
  long thin = 200;
  long retain = 250;  // retained samples for this chain
  bool noise = true;  // disabled: plain preconditioned gradient descent
  double saem_decay = 1e-3;
  double lr_gmm = 2e-1;  // consumed by the model's SAEM hook
  double lr_reg = 1e-2;
  std::uint64_t seed = 0;
  std::vector<double> precond;  // diagonal A; empty = identity
  long trace_every = 100;

  void validate() const {
    check(tau > 0.0, "SgldConfig: tau must be positive");
    check(burn_in >= 0 && thin >= 1 && retain >= 0, "SgldConfig: bad counts");
    for (double a : precond)
      check(a > 0.0, "SgldConfig: preconditioner must be positive");
  }
};

struct SgldTraceRow {
  long iter = 0;
  double energy_data = 0.0;
  double energy_reg = 0.0;
};

struct SgldResult {
  std::vector<std::vector<double>> samples;
  std::vector<SgldTraceRow> trace;
  long steps_run = 0;
};

/// Langevin sampling of exp(-E): w <- w + tau A grad(log pi) + sqrt(2 tau A) xi,
/// with the model's gradient filter applied to the drift and one SAEM step per
/// transition. Retains every thin-th state after burn_in until `retain`
/// samples are collected. Deterministic for a given seed.
SgldResult run_sgld(EnergyModel& model, std::vector<double> init_w,
                    const SgldConfig& cfg,
                    const std::function<void(long, const SgldTraceRow&)>& on_trace = {});

}  // namespace svreg
