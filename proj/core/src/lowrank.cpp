#include "svreg/lowrank.hpp"

#include <cmath>
#include <stdexcept>

namespace svreg {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

// Dense R x R SPD Cholesky (R <= 8); throws if a pivot is non-positive.
void cholesky(std::vector<double>& a, int r) {
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[i * r + j];
      for (int k = 0; k < j; ++k) s -= a[i * r + k] * a[j * r + k];
      if (i == j) {
        if (s <= 0.0)
          throw std::runtime_error(
              "lowrank: capacitance matrix is not positive definite");
        a[i * r + i] = std::sqrt(s);
      } else {
        a[i * r + j] = s / a[j * r + j];
      }
    }
    for (int j = i + 1; j < r; ++j) a[i * r + j] = 0.0;
  }
}

void chol_solve(const std::vector<double>& l, int r, std::vector<double>& b) {
  for (int i = 0; i < r; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= l[i * r + k] * b[k];
    b[i] = s / l[i * r + i];
  }
  for (int i = r - 1; i >= 0; --i) {
    double s = b[i];
    for (int k = i + 1; k < r; ++k) s -= l[k * r + i] * b[k];
    b[i] = s / l[i * r + i];
  }
}

// capacitance M = I_R + U^T diag(sigma^-2) U, returned as its Cholesky factor
std::vector<double> capacitance_chol(const LowRankGaussian& q) {
  const int r = q.rank;
  std::vector<double> m(static_cast<std::size_t>(r) * r, 0.0);
  for (int i = 0; i < r; ++i) m[i * r + i] = 1.0;
  for (std::size_t p = 0; p < q.dim; ++p) {
    const double inv_s2 = 1.0 / (q.sigma[p] * q.sigma[p]);
    const double* up = &q.factor[p * r];
    for (int i = 0; i < r; ++i)
      for (int j = 0; j <= i; ++j) m[i * r + j] += up[i] * inv_s2 * up[j];
  }
  for (int i = 0; i < r; ++i)
    for (int j = i + 1; j < r; ++j) m[i * r + j] = m[j * r + i];
  cholesky(m, r);
  return m;
}

}  // namespace

LowRankGaussian LowRankGaussian::zero_mean(std::size_t dim, int rank,
                                           double sigma_init,
                                           double factor_init) {
  LowRankGaussian q;
  q.dim = dim;
  q.rank = rank;
  q.mean.assign(dim, 0.0);
  q.sigma.assign(dim, sigma_init);
  q.factor.assign(dim * static_cast<std::size_t>(rank), factor_init);
  q.validate();
  return q;
}

void LowRankGaussian::validate() const {
  check(dim > 0, "LowRankGaussian: empty");
  check(rank >= 0 && rank <= 8, "LowRankGaussian: rank must be in [0, 8]");
  check(mean.size() == dim && sigma.size() == dim &&
            factor.size() == dim * static_cast<std::size_t>(rank),
        "LowRankGaussian: size mismatch");
  for (double s : sigma)
    check(s > 0.0 && std::isfinite(s), "LowRankGaussian: sigma must be positive");
}

double LowRankGaussian::marginal_std(std::size_t p) const {
  double v = sigma[p] * sigma[p];
  for (int r = 0; r < rank; ++r) {
    const double u = factor[p * rank + r];
    v += u * u;
  }
  return std::sqrt(v);
}

void sample_pair(const LowRankGaussian& q, Rng& rng, std::span<double> w_plus,
                 std::span<double> w_minus) {
  check(w_plus.size() == q.dim && w_minus.size() == q.dim,
        "sample_pair: output size mismatch");
  std::vector<double> x(static_cast<std::size_t>(q.rank));
  for (double& v : x) v = rng.normal();
  for (std::size_t p = 0; p < q.dim; ++p) {
    double d = q.sigma[p] * rng.normal();
    for (int r = 0; r < q.rank; ++r) d += q.factor[p * q.rank + r] * x[r];
    w_plus[p] = q.mean[p] + d;
    w_minus[p] = q.mean[p] - d;
  }
}

void sample_one(const LowRankGaussian& q, Rng& rng, std::span<double> w) {
  check(w.size() == q.dim, "sample_one: output size mismatch");
  std::vector<double> x(static_cast<std::size_t>(q.rank));
  for (double& v : x) v = rng.normal();
  for (std::size_t p = 0; p < q.dim; ++p) {
    double d = q.sigma[p] * rng.normal();
    for (int r = 0; r < q.rank; ++r) d += q.factor[p * q.rank + r] * x[r];
    w[p] = q.mean[p] + d;
  }
}

double log_det_cov(const LowRankGaussian& q) {
  q.validate();
  double acc = 0.0;
  for (std::size_t p = 0; p < q.dim; ++p) acc += 2.0 * std::log(q.sigma[p]);
  if (q.rank > 0) {
    const auto l = capacitance_chol(q);
    for (int i = 0; i < q.rank; ++i) acc += 2.0 * std::log(l[i * q.rank + i]);
  }
  return acc;
}

void apply_precision(const LowRankGaussian& q, std::span<const double> v,
                     std::span<double> out) {
  q.validate();
  check(v.size() == q.dim && out.size() == q.dim,
        "apply_precision: size mismatch");
  const int r = q.rank;
  // y = D^-1 v
  for (std::size_t p = 0; p < q.dim; ++p)
    out[p] = v[p] / (q.sigma[p] * q.sigma[p]);
  if (r == 0) return;
  // t = U^T y, solve M s = t, out -= D^-1 U s
  std::vector<double> t(static_cast<std::size_t>(r), 0.0);
  for (std::size_t p = 0; p < q.dim; ++p)
    for (int i = 0; i < r; ++i) t[i] += q.factor[p * r + i] * out[p];
  const auto l = capacitance_chol(q);
  chol_solve(l, r, t);
  for (std::size_t p = 0; p < q.dim; ++p) {
    double d = 0.0;
    for (int i = 0; i < r; ++i) d += q.factor[p * r + i] * t[i];
    out[p] -= d / (q.sigma[p] * q.sigma[p]);
  }
}

double entropy(const LowRankGaussian& q) {
  return 0.5 * log_det_cov(q) +
         0.5 * static_cast<double>(q.dim) * (1.0 + std::log(kTwoPi));
}

void entropy_grad(const LowRankGaussian& q, std::span<double> d_sigma,
                  std::span<double> d_factor) {
  q.validate();
  check(d_sigma.size() == q.dim && d_factor.size() == q.factor.size(),
        "entropy_grad: size mismatch");
  const int r = q.rank;
  // W = D^-1 U M^-1 = Sigma^-1 U;  diag(Sigma^-1)_p = 1/sigma_p^2 - W_p . V_p
  std::vector<double> l;
  std::vector<double> minv;
  if (r > 0) {
    l = capacitance_chol(q);
    minv.assign(static_cast<std::size_t>(r) * r, 0.0);
    std::vector<double> e(static_cast<std::size_t>(r));
    for (int j = 0; j < r; ++j) {
      std::fill(e.begin(), e.end(), 0.0);
      e[j] = 1.0;
      chol_solve(l, r, e);
      for (int i = 0; i < r; ++i) minv[i * r + j] = e[i];
    }
  }
  for (std::size_t p = 0; p < q.dim; ++p) {
    const double inv_s2 = 1.0 / (q.sigma[p] * q.sigma[p]);
    double diag_prec = inv_s2;
    if (r > 0) {
      const double* up = &q.factor[p * r];
      for (int i = 0; i < r; ++i) {
        double w = 0.0;
        for (int j = 0; j < r; ++j) w += inv_s2 * up[j] * minv[j * r + i];
        d_factor[p * r + i] = w;            // (Sigma^-1 U)_{pi}
        diag_prec -= w * up[i] * inv_s2;    // subtract (V M^-1 V^T)_pp
      }
    }
    d_sigma[p] = diag_prec * q.sigma[p];
  }
}

}  // namespace svreg
