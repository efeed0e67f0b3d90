#pragma once

#include <span>
#include <vector>

#include "svreg/field.hpp"
#include "svreg/rng.hpp"

namespace svreg {

/// Gaussian with covariance diag(sigma^2) + U U^T. The mean and factors are
/// flat over parameter index p (voxel-major, component-fastest for fields).
struct LowRankGaussian {
  std::size_t dim = 0;  // P
  int rank = 0;         // R >= 0
  std::vector<double> mean;    // P
  std::vector<double> sigma;   // P, positive diagonal std
  std::vector<double> factor;  // P x R, row-major u[p * rank + r]

  static LowRankGaussian zero_mean(std::size_t dim, int rank, double sigma_init,
                                   double factor_init);
  void validate() const;

  /// sqrt(sigma_p^2 + sum_r u_pr^2)
  double marginal_std(std::size_t p) const;
};

/// Antithetic reparametrised pair: w = mean +- (sigma .* eps + U x) with one
/// shared draw of (eps, x). Deterministic for a given rng state.
void sample_pair(const LowRankGaussian& q, Rng& rng, std::span<double> w_plus,
                 std::span<double> w_minus);

/// Single reparametrised sample.
void sample_one(const LowRankGaussian& q, Rng& rng, std::span<double> w);

/// log det(diag(sigma^2) + U U^T) via the matrix determinant lemma,
/// O(P R^2) without forming the covariance.
double log_det_cov(const LowRankGaussian& q);

/// Sigma^{-1} v via the Sherman-Morrison / Woodbury identity, O(P R^2).
void apply_precision(const LowRankGaussian& q, std::span<const double> v,
                     std::span<double> out);

/// Closed-form Gaussian entropy 0.5 log det Sigma + P/2 (1 + log 2 pi).
double entropy(const LowRankGaussian& q);

/// Gradient of the entropy w.r.t. sigma (d_sigma) and the factor (d_factor);
/// both derived from diag(Sigma^{-1}) and Sigma^{-1} U.
void entropy_grad(const LowRankGaussian& q, std::span<double> d_sigma,
                  std::span<double> d_factor);

}  // namespace svreg
