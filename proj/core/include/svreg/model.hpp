#pragma once

#include <span>
#include <vector>

#include "svreg/adam.hpp"
#include "svreg/energy.hpp"

namespace svreg {

/// Diagnostics of one energy evaluation consumed by a SAEM step.
struct SaemSample {
  GmmStats gmm;
  double chi2 = 0.0;
  double alpha = 1.0;
};

/// One Adam ascent step on the mixture hyperparameters (log beta^{-1/2} and
/// proportion logits, softmax-renormalised) and the regularisation
/// hyperparameters (mu_chi2, log sigma_chi2), using the sample-estimated
/// expected complete-data log-density plus hyperprior terms.
void saem_step(std::span<const SaemSample> samples, LikelihoodState& like,
               RegulariserState& reg, const LikelihoodHyperpriors& like_hp,
               const RegulariserHyperpriors& reg_hp, AdamState& gmm_adam,
               AdamState& reg_adam, double lr_gmm, double lr_reg);

/// EnergyModel adapter around RegistrationEnergy: Sobolev filtering, virtual
/// decimation refresh once per outer iteration, and SAEM hyperparameter
/// updates from cached evaluation stats.
class RegistrationModel : public EnergyModel {
 public:
  RegistrationModel(RegistrationEnergy energy, LikelihoodHyperpriors like_hp,
                    RegulariserHyperpriors reg_hp, SobolevConfig sobolev,
                    bool smooth_samples, bool smooth_gradients,
                    double lr_gmm = 2e-1, double lr_reg = 1e-2);

  std::size_t size() const override;
  /// Smoothing of the sampled field (when enabled) happens here, applied to
  /// the data term only; the prior always sees the raw field.
  double eval(std::span<const double> w, std::span<double> grad) override;
  void filter_gradient(std::span<double> grad) override;
  void begin_iteration(int iter) override;
  void saem_update(double lr_scale) override;

  const RegistrationEnergy& energy() const { return energy_; }
  RegistrationEnergy& energy() { return energy_; }
  double last_chi2() const { return last_chi2_; }
  double current_alpha() const { return energy_.likelihood().alpha; }
  const ScalarField& last_residual() const { return last_residual_; }

 private:
  void apply_sobolev(std::span<double> values, bool adjoint);

  RegistrationEnergy energy_;
  LikelihoodHyperpriors like_hp_;
  RegulariserHyperpriors reg_hp_;
  SobolevConfig sobolev_;
  bool smooth_samples_;
  bool smooth_gradients_;
  double lr_gmm_;
  double lr_reg_;
  AdamState gmm_adam_;
  AdamState reg_adam_;
  std::vector<SaemSample> pending_;
  ScalarField last_residual_;
  bool have_residual_ = false;
  double last_chi2_ = 0.0;
};

}  // namespace svreg
