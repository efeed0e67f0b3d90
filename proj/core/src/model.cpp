#include "svreg/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace svreg {

void saem_step(std::span<const SaemSample> samples, LikelihoodState& like,
               RegulariserState& reg, const LikelihoodHyperpriors& like_hp,
               const RegulariserHyperpriors& reg_hp, AdamState& gmm_adam,
               AdamState& reg_adam, double lr_gmm, double lr_reg) {
  check(!samples.empty(), "saem_step: need at least one sample");
  const int L = like.mixture.components();
  const auto& beta = like.mixture.precisions;
  const auto& rho = like.mixture.proportions;

  // parameters: a_l = log beta_l^{-1/2}, z_l = proportion logits
  std::vector<double> theta(2 * static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) {
    theta[l] = -0.5 * std::log(beta[l]);
    theta[L + l] = std::log(rho[l]);
  }
  if (gmm_adam.m.size() != theta.size()) gmm_adam.init(theta.size());

  // ascent gradient of the sample-estimated objective
  std::vector<double> grad(theta.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  for (const SaemSample& s : samples) {
    const double n_vox = static_cast<double>(s.gmm.voxels);
    for (int l = 0; l < L; ++l) {
      // d/da of alpha * sum_i log-mixture  (beta = exp(-2a))
      grad[l] += inv_n * s.alpha *
                 (beta[l] * s.gmm.resp_r2_sum[l] - s.gmm.resp_sum[l]);
      grad[L + l] += inv_n * s.alpha * (s.gmm.resp_sum[l] - rho[l] * n_vox);
    }
  }
  // hyperprior terms
  const double kappa_sum = like_hp.kappa * L - L;  // sum_m (kappa_m - 1)
  for (int l = 0; l < L; ++l) {
    const double lb = std::log(beta[l]);
    grad[l] += 2.0 * (1.0 + (lb - like_hp.mu_beta) /
                                (like_hp.sigma_beta * like_hp.sigma_beta));
    grad[L + l] += (like_hp.kappa - 1.0) - rho[l] * kappa_sum;
  }

  // Adam minimises; negate for ascent
  for (double& g : grad) g = -g;
  gmm_adam.step(theta, grad, lr_gmm);

  // rebuild the mixture; softmax keeps the proportions on the simplex
  double zmax = -1e300;
  for (int l = 0; l < L; ++l) zmax = std::max(zmax, theta[L + l]);
  double zsum = 0.0;
  std::vector<double> new_rho(L);
  for (int l = 0; l < L; ++l) {
    new_rho[l] = std::exp(theta[L + l] - zmax);
    zsum += new_rho[l];
  }
  double total = 0.0;
  for (int l = 0; l < L; ++l) {
    new_rho[l] /= zsum;
    total += new_rho[l];
    like.mixture.precisions[l] = std::exp(-2.0 * theta[l]);
  }
  if (!(std::abs(total - 1.0) <= 1e-12))
    throw std::runtime_error("saem_step: proportions left the simplex");
  like.mixture.proportions = std::move(new_rho);
  like.mixture.validate();

  // regularisation hyperparameters (skip for fixed-weight modes)
  if (reg.mode != RegMode::LognormalLearnable) return;
  std::vector<double> rtheta{reg.mu_chi2, std::log(reg.sigma_chi2)};
  if (reg_adam.m.size() != rtheta.size()) reg_adam.init(rtheta.size());
  const double s2 = reg.sigma_chi2 * reg.sigma_chi2;
  double g_mu = 0.0, g_ell = 0.0;
  for (const SaemSample& s : samples) {
    const double lc = std::log(std::max(s.chi2, 1e-12));
    const double z = lc - reg.mu_chi2;
    g_mu += inv_n * z / s2;
    g_ell += inv_n * (-1.0 + z * z / s2);
  }
  g_mu += 0.5 * reg.nu - 0.5 * reg_hp.lambda_init * std::exp(reg.mu_chi2);
  {
    const double v = 2.0 * std::log(reg.sigma_chi2);
    g_ell += -2.0 - 2.0 * (v - reg_hp.eta) / (reg_hp.varsigma * reg_hp.varsigma);
  }
  std::vector<double> rgrad{-g_mu, -g_ell};
  reg_adam.step(rtheta, rgrad, lr_reg);
  reg.mu_chi2 = rtheta[0];
  reg.sigma_chi2 = std::exp(rtheta[1]);
  reg.validate();
}

RegistrationModel::RegistrationModel(RegistrationEnergy energy,
                                     LikelihoodHyperpriors like_hp,
                                     RegulariserHyperpriors reg_hp,
                                     SobolevConfig sobolev, bool smooth_samples,
                                     bool smooth_gradients, double lr_gmm,
                                     double lr_reg)
    : energy_(std::move(energy)),
      like_hp_(like_hp),
      reg_hp_(reg_hp),
      sobolev_(sobolev),
      smooth_samples_(smooth_samples),
      smooth_gradients_(smooth_gradients),
      lr_gmm_(lr_gmm),
      lr_reg_(lr_reg) {
  like_hp_.validate();
  reg_hp_.validate();
  sobolev_.validate();
  // initial virtual decimation from the unwarped residual
  ScalarField r = residuals(energy_.fixed(), energy_.moving(),
                            energy_.likelihood().window);
  energy_.likelihood().alpha = virtual_decimation(r);
  last_residual_ = std::move(r);
  have_residual_ = true;
}

std::size_t RegistrationModel::size() const {
  const GridSpec& g = energy_.parameter_grid();
  return g.voxels() * static_cast<std::size_t>(g.ndim);
}

double RegistrationModel::eval(std::span<const double> w,
                               std::span<double> grad) {
  check(w.size() == size(), "RegistrationModel: parameter size mismatch");
  VectorField wf(energy_.parameter_grid());
  std::copy(w.begin(), w.end(), wf.values.begin());
  const bool want_grad = !grad.empty();
  if (want_grad)
    check(grad.size() == size(), "RegistrationModel: gradient size mismatch");

  // The Sobolev filter feeds the data term only; the gradient-energy prior
  // always sees the raw field (its scale hyperparameters target unfiltered
  // velocities).
  RegistrationEnergy::DataTerm data;
  if (smooth_samples_) {
    VectorField smoothed = wf;
    sobolev_smooth_inplace(smoothed, sobolev_);
    data = energy_.data_term(smoothed, want_grad);
    if (want_grad)
      sobolev_smooth_adjoint_inplace(data.d_param, sobolev_);
  } else {
    data = energy_.data_term(wf, want_grad);
  }
  RegistrationEnergy::RegTerm reg = energy_.reg_term(wf, want_grad);

  if (want_grad)
    for (std::size_t i = 0; i < grad.size(); ++i)
      grad[i] = data.d_param.values[i] + reg.d_param.values[i];

  last_data_ = data.energy;
  last_reg_ = reg.energy;
  last_chi2_ = reg.chi2;
  last_residual_ = std::move(data.residual);
  have_residual_ = true;
  pending_.push_back(
      {std::move(data.stats), reg.chi2, energy_.likelihood().alpha});
  return last_data_ + last_reg_;
}

void RegistrationModel::apply_sobolev(std::span<double> values, bool adjoint) {
  VectorField f(energy_.parameter_grid());
  std::copy(values.begin(), values.end(), f.values.begin());
  if (adjoint)
    sobolev_smooth_adjoint_inplace(f, sobolev_);
  else
    sobolev_smooth_inplace(f, sobolev_);
  std::copy(f.values.begin(), f.values.end(), values.begin());
}

void RegistrationModel::filter_gradient(std::span<double> grad) {
  if (smooth_gradients_) apply_sobolev(grad, false);
}

void RegistrationModel::begin_iteration(int) {
  if (have_residual_)
    energy_.likelihood().alpha = virtual_decimation(last_residual_);
}

void RegistrationModel::saem_update(double lr_scale) {
  if (pending_.empty()) return;
  saem_step(pending_, energy_.likelihood(), energy_.regulariser(), like_hp_,
            reg_hp_, gmm_adam_, reg_adam_, lr_gmm_ * lr_scale,
            lr_reg_ * lr_scale);
  pending_.clear();
}

}  // namespace svreg
