#pragma once

#include <vector>

#include "svreg/field.hpp"

namespace svreg {

/// Gaussian mixture over intensity residuals: per-component precision and
/// proportion.
struct MixtureParams {
  std::vector<double> precisions;   // beta_l > 0
  std::vector<double> proportions;  // rho_l > 0, sum 1

  int components() const { return static_cast<int>(precisions.size()); }
  void validate() const;

  /// Geometric ladder of precisions plus uniform proportions.
  static MixtureParams default_init(int components);
};

struct LikelihoodState {
  MixtureParams mixture;
  double alpha = 1.0;  // virtual decimation factor, in (0, 1]
  int window = 5;      // standardisation neighbourhood side length, odd

  void validate() const;
};

struct LikelihoodHyperpriors {
  double kappa = 0.5;       // symmetric Dirichlet concentration
  double mu_beta = 0.0;     // log-normal location for each precision
  double sigma_beta = 2.3;  // log-normal scale

  void validate() const {
    check(kappa > 0.0, "LikelihoodHyperpriors: kappa must be positive");
    check(sigma_beta > 0.0, "LikelihoodHyperpriors: sigma_beta must be positive");
  }
};

/// Cached forward quantities for the standardisation adjoint.
struct StandardiseCache {
  ScalarField input;
  std::vector<double> mean;
  std::vector<double> inv_sd;
  std::vector<double> inv_count;
  std::vector<std::uint8_t> floored;
  int window = 0;
};

/// Subtract the windowed mean and divide by the windowed standard deviation
/// (window clamped at boundaries; variance floored at 1e-6 before the root).
ScalarField local_standardise(const ScalarField& img, int window,
                              StandardiseCache* cache = nullptr);

/// Adjoint of local_standardise w.r.t. its input image.
ScalarField local_standardise_adjoint(const StandardiseCache& cache,
                                      const ScalarField& out_bar);

/// r = standardise(F) - standardise(M_warped)
ScalarField residuals(const ScalarField& fixed, const ScalarField& moving_warped,
                      int window);

/// Per-component sufficient statistics of the responsibilities, accumulated
/// during the energy pass (used by the SAEM hyperparameter updates).
struct GmmStats {
  std::vector<double> resp_sum;     // sum_i gamma_il
  std::vector<double> resp_r2_sum;  // sum_i gamma_il r_i^2
  std::size_t voxels = 0;
};

struct DataEnergyResult {
  double value = 0.0;
  ScalarField grad_residual;  // dE/dr, filled when requested
  GmmStats stats;
};

/// E_data = -alpha * sum_i log sum_l rho_l sqrt(beta_l / 2 pi)
///          exp(-beta_l r_i^2 / 2), with a log-sum-exp stabilised inner sum.
DataEnergyResult data_energy(const ScalarField& residual,
                             const LikelihoodState& state,
                             bool want_grad = false);

/// Per-voxel mixture responsibilities (rows sum to 1).
std::vector<double> responsibilities(double residual, const MixtureParams& m);

/// Effective-degrees-of-freedom factor from the lag-1 autocorrelation of the
/// residual map: alpha = prod_d max(eps, (1 - rho_d)/(1 + rho_d)), capped at 1.
double virtual_decimation(const ScalarField& residual);

/// Log hyperprior density: independent log-normals on each precision plus a
/// symmetric Dirichlet on the proportions. All additive constants retained.
double gmm_log_hyperprior(const MixtureParams& mixture,
                          const LikelihoodHyperpriors& hp);

}  // namespace svreg
