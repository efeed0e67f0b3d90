#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "svreg/field.hpp"
#include "svreg/lowrank.hpp"

// Reference implementations kept independent of the production code paths
// they are used to check.
namespace svreg::oracle {

/// Dense P x P covariance diag(sigma^2) + U U^T.
std::vector<double> dense_covariance(const LowRankGaussian& q);

/// log det of the dense covariance via Cholesky (Eigen).
double dense_log_det(const LowRankGaussian& q);

/// Dense solve Sigma x = v.
std::vector<double> dense_solve(const LowRankGaussian& q,
                                std::span<const double> v);

/// Dense Gaussian entropy 0.5 log det(2 pi e Sigma).
double dense_entropy(const LowRankGaussian& q);

/// e^A for a small D x D matrix by the plain power series.
std::array<double, 9> matrix_exponential(const std::array<double, 9>& a, int d,
                                         int terms = 30);

/// Central finite difference of f along coordinate i.
double central_difference(const std::function<double(std::span<const double>)>& f,
                          std::vector<double> at, std::size_t i, double h);

/// Mean of log X over n draws of X ~ Gamma(shape, rate) (Marsaglia-Tsang),
/// plus the standard error of that mean.
struct MonteCarloMean {
  double mean = 0.0;
  double std_error = 0.0;
};
MonteCarloMean gamma_log_mean(double shape, double rate, std::size_t n,
                              std::uint64_t seed);

/// Brute-force symmetric average surface distance over face-connected
/// boundary voxels (O(n^2) pairwise distances; small masks only).
double brute_force_asd(const LabelField& a, const LabelField& b,
                       std::int32_t label);

/// Maximise a 1D function by golden-section search on [lo, hi].
double maximise_1d(const std::function<double(double)>& f, double lo, double hi,
                   double tol = 1e-9);

/// Checks that the windowed moving average of a stochastic objective trace
/// never drops materially below its running maximum: the allowance is four
/// times the window-mean noise estimated from the stationary tail, and the
/// final window must not sit below the first.
bool moving_average_non_decreasing(std::span<const double> values, int window);

}  // namespace svreg::oracle
