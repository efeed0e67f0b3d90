#pragma once

#include "svreg/field.hpp"

namespace svreg {

enum class RegMode {
  LognormalLearnable,  // log-normal prior on the gradient energy
  FixedL2,             // classic 0.5 * lambda * |Lw|^2
  GammaPrior,          // gamma prior on the gradient energy (L2-equivalent)
};

struct RegulariserState {
  RegMode mode = RegMode::LognormalLearnable;
  double mu_chi2 = 0.0;     // location of log chi^2
  double sigma_chi2 = 1.0;  // scale of log chi^2, positive
  double nu = 0.0;          // degrees of freedom = ndim * voxel count
  double lambda_reg = 1.0;  // weight for FixedL2 / GammaPrior

  void validate() const {
    check(sigma_chi2 > 0.0, "RegulariserState: sigma_chi2 must be positive");
    check(nu >= 2.0, "RegulariserState: nu must be >= 2");
    if (mode != RegMode::LognormalLearnable)
      check(lambda_reg > 0.0, "RegulariserState: lambda_reg must be positive");
  }
};

struct RegulariserHyperpriors {
  double lambda_init = 1.2;  // gamma hyperprior rate scale on exp(mu_chi2)
  double eta = 2.8;          // log-normal location for sigma_chi2^2
  double varsigma = 5.0;     // log-normal scale for sigma_chi2^2

  void validate() const {
    check(lambda_init > 0.0, "RegulariserHyperpriors: lambda_init must be positive");
    check(varsigma > 0.0, "RegulariserHyperpriors: varsigma must be positive");
  }
};

/// chi^2 = |Lw|^2: sum of squared forward differences of every component
/// along every axis.
double chi_squared(const VectorField& w);

struct RegEnergyValue {
  double value = 0.0;
  double d_chi2 = 0.0;   // dE/d chi^2 (0 when the floor is active)
  bool floored = false;  // chi^2 hit the log-singularity guard
};

/// Energy as a function of chi^2 only (mode-dependent).
RegEnergyValue reg_energy_chi2(double chi2, const RegulariserState& state);

/// Full energy; optionally the gradient w.r.t. the field via the chain rule
/// through chi^2.
double reg_energy(const VectorField& w, const RegulariserState& state,
                  VectorField* grad = nullptr);

/// Digamma via the ascending recurrence and the asymptotic series.
double digamma(double x);

/// psi(nu/2) - log(lambda_init/2): the mean of log X for
/// X ~ Gamma(nu/2, lambda_init/2).
double init_mu_chi2(double nu, double lambda_init);

/// Log hyperprior: Gamma(nu/2, lambda_init/2) on exp(mu_chi2) with the
/// log-space Jacobian, plus a log-normal on sigma_chi2^2. Constants retained.
double reg_hyper_logprior(const RegulariserState& state,
                          const RegulariserHyperpriors& hp);

}  // namespace svreg
