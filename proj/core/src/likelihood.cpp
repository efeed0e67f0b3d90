#include "svreg/likelihood.hpp"

#include <algorithm>
#include <cmath>

namespace svreg {

namespace {

constexpr double kVarianceFloor = 1e-6;
constexpr double kTwoPi = 6.283185307179586476925287;
constexpr double kAlphaFloor = 1e-3;

// Unnormalised clamped box sum along one axis (window [i-h, i+h] intersected
// with the domain). Self-adjoint.
void box_sum_axis(std::vector<double>& v, const GridSpec& g, int axis, int h) {
  const int n = g.dims[axis];
  auto strides = g.strides();
  const std::size_t stride = strides[axis];
  std::vector<double> line(static_cast<std::size_t>(n));
  const std::size_t total = g.voxels();
  int x[3] = {0, 0, 0};
  for (std::size_t idx = 0; idx < total; ++idx) {
    if (x[axis] == 0) {
      for (int i = 0; i < n; ++i) line[i] = v[idx + i * stride];
      for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - h);
        const int hi = std::min(n - 1, i + h);
        double acc = 0.0;
        for (int j = lo; j <= hi; ++j) acc += line[j];
        v[idx + i * stride] = acc;
      }
    }
    for (int a = g.ndim - 1; a >= 0; --a) {
      if (++x[a] < g.dims[a]) break;
      x[a] = 0;
    }
  }
}

std::vector<double> box_sum(const std::vector<double>& in, const GridSpec& g,
                            int h) {
  std::vector<double> out = in;
  for (int a = 0; a < g.ndim; ++a) box_sum_axis(out, g, a, h);
  return out;
}

std::vector<double> window_counts(const GridSpec& g, int h) {
  std::vector<double> out(g.voxels(), 1.0);
  const std::size_t total = g.voxels();
  int x[3] = {0, 0, 0};
  for (std::size_t idx = 0; idx < total; ++idx) {
    double c = 1.0;
    for (int a = 0; a < g.ndim; ++a) {
      const int lo = std::max(0, x[a] - h);
      const int hi = std::min(g.dims[a] - 1, x[a] + h);
      c *= hi - lo + 1;
    }
    out[idx] = c;
    for (int a = g.ndim - 1; a >= 0; --a) {
      if (++x[a] < g.dims[a]) break;
      x[a] = 0;
    }
  }
  return out;
}

}  // namespace

void MixtureParams::validate() const {
  check(!precisions.empty(), "MixtureParams: need at least one component");
  check(precisions.size() == proportions.size(),
        "MixtureParams: precision/proportion size mismatch");
  double sum = 0.0;
  for (std::size_t l = 0; l < precisions.size(); ++l) {
    check(precisions[l] > 0.0 && std::isfinite(precisions[l]),
          "MixtureParams: precisions must be positive");
    check(proportions[l] > 0.0 && proportions[l] <= 1.0,
          "MixtureParams: proportions must lie in (0, 1]");
    sum += proportions[l];
  }
  check(std::abs(sum - 1.0) <= 1e-12, "MixtureParams: proportions must sum to 1");
}

MixtureParams MixtureParams::default_init(int components) {
  check(components >= 1, "MixtureParams: need at least one component");
  MixtureParams m;
  m.precisions.resize(components);
  m.proportions.assign(components, 1.0 / components);
  if (components == 1) {
    m.precisions[0] = 1.0;
  } else {
    // geometric ladder from 0.25 to 16
    const double lo = std::log(0.25), hi = std::log(16.0);
    for (int l = 0; l < components; ++l)
      m.precisions[l] = std::exp(lo + (hi - lo) * l / (components - 1));
  }
  return m;
}

void LikelihoodState::validate() const {
  mixture.validate();
  check(alpha > 0.0 && alpha <= 1.0, "LikelihoodState: alpha must be in (0, 1]");
  check(window >= 1 && window % 2 == 1, "LikelihoodState: window must be odd");
}

ScalarField local_standardise(const ScalarField& img, int window,
                              StandardiseCache* cache) {
  check(window >= 1 && window % 2 == 1, "local_standardise: window must be odd");
  for (int a = 0; a < img.grid.ndim; ++a)
    check(window <= img.grid.dims[a], "local_standardise: window exceeds dims");
  const int h = window / 2;
  const GridSpec& g = img.grid;
  const std::size_t n = g.voxels();

  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = img.values[i] * img.values[i];
  std::vector<double> s1 = box_sum(img.values, g, h);
  std::vector<double> s2 = box_sum(sq, g, h);
  std::vector<double> cnt = window_counts(g, h);

  ScalarField out(g);
  if (cache) {
    cache->input = img;
    cache->mean.resize(n);
    cache->inv_sd.resize(n);
    cache->inv_count.resize(n);
    cache->floored.resize(n);
    cache->window = window;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double inv_c = 1.0 / cnt[i];
    const double mean = s1[i] * inv_c;
    double var = s2[i] * inv_c - mean * mean;
    const bool floored = var <= kVarianceFloor;
    if (floored) var = kVarianceFloor;
    const double inv_sd = 1.0 / std::sqrt(var);
    out.values[i] = (img.values[i] - mean) * inv_sd;
    if (cache) {
      cache->mean[i] = mean;
      cache->inv_sd[i] = inv_sd;
      cache->inv_count[i] = inv_c;
      cache->floored[i] = floored ? 1 : 0;
    }
  }
  return out;
}

ScalarField local_standardise_adjoint(const StandardiseCache& cache,
                                      const ScalarField& out_bar) {
  const GridSpec& g = cache.input.grid;
  check(out_bar.grid == g, "local_standardise_adjoint: grid mismatch");
  const std::size_t n = g.voxels();
  const int h = cache.window / 2;

  ScalarField dx(g);
  std::vector<double> ds1(n), ds2(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double gb = out_bar.values[i];
    const double inv_sd = cache.inv_sd[i];
    const double centred = cache.input.values[i] - cache.mean[i];
    dx.values[i] = gb * inv_sd;
    double dmean = -gb * inv_sd;
    double dvar = 0.0;
    if (!cache.floored[i]) {
      // d inv_sd = -0.5 * inv_sd^3 * dvar;  d out/d inv_sd = centred
      dvar = gb * centred * (-0.5) * inv_sd * inv_sd * inv_sd;
    }
    // var = s2/c - mean^2, mean = s1/c
    dmean += -2.0 * cache.mean[i] * dvar;
    ds2[i] = dvar * cache.inv_count[i];
    ds1[i] = dmean * cache.inv_count[i];
  }
  // box sum is self-adjoint
  std::vector<double> bs1 = box_sum(ds1, g, h);
  std::vector<double> bs2 = box_sum(ds2, g, h);
  for (std::size_t i = 0; i < n; ++i)
    dx.values[i] += bs1[i] + 2.0 * cache.input.values[i] * bs2[i];
  return dx;
}

ScalarField residuals(const ScalarField& fixed, const ScalarField& moving_warped,
                      int window) {
  check(fixed.grid == moving_warped.grid, "residuals: grid mismatch");
  ScalarField fs = local_standardise(fixed, window);
  ScalarField ms = local_standardise(moving_warped, window);
  for (std::size_t i = 0; i < fs.values.size(); ++i)
    fs.values[i] -= ms.values[i];
  return fs;
}

DataEnergyResult data_energy(const ScalarField& residual,
                             const LikelihoodState& state, bool want_grad) {
  state.validate();
  const int L = state.mixture.components();
  const auto& beta = state.mixture.precisions;
  const auto& rho = state.mixture.proportions;
  const std::size_t n = residual.values.size();

  std::vector<double> log_coef(L);
  for (int l = 0; l < L; ++l)
    log_coef[l] = std::log(rho[l]) + 0.5 * std::log(beta[l] / kTwoPi);

  DataEnergyResult res;
  res.stats.resp_sum.assign(L, 0.0);
  res.stats.resp_r2_sum.assign(L, 0.0);
  res.stats.voxels = n;
  if (want_grad) res.grad_residual = ScalarField(residual.grid);

  std::vector<double> t(L);
  double energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = residual.values[i];
    const double r2 = r * r;
    double tmax = -1e300;
    for (int l = 0; l < L; ++l) {
      t[l] = log_coef[l] - 0.5 * beta[l] * r2;
      tmax = std::max(tmax, t[l]);
    }
    double sum = 0.0;
    for (int l = 0; l < L; ++l) {
      t[l] = std::exp(t[l] - tmax);
      sum += t[l];
    }
    energy -= tmax + std::log(sum);
    const double inv = 1.0 / sum;
    double score = 0.0;
    for (int l = 0; l < L; ++l) {
      const double gamma = t[l] * inv;  // responsibility
      res.stats.resp_sum[l] += gamma;
      res.stats.resp_r2_sum[l] += gamma * r2;
      score += gamma * beta[l];
    }
    if (want_grad) res.grad_residual.values[i] = state.alpha * score * r;
  }
  res.value = state.alpha * energy;
  if (!std::isfinite(res.value))
    throw std::runtime_error("data_energy: non-finite energy");
  return res;
}

std::vector<double> responsibilities(double residual, const MixtureParams& m) {
  const int L = m.components();
  std::vector<double> t(L);
  double tmax = -1e300;
  const double r2 = residual * residual;
  for (int l = 0; l < L; ++l) {
    t[l] = std::log(m.proportions[l]) + 0.5 * std::log(m.precisions[l] / kTwoPi) -
           0.5 * m.precisions[l] * r2;
    tmax = std::max(tmax, t[l]);
  }
  double sum = 0.0;
  for (int l = 0; l < L; ++l) {
    t[l] = std::exp(t[l] - tmax);
    sum += t[l];
  }
  for (int l = 0; l < L; ++l) t[l] /= sum;
  return t;
}

double virtual_decimation(const ScalarField& residual) {
  const GridSpec& g = residual.grid;
  auto strides = g.strides();
  double alpha = 1.0;
  for (int a = 0; a < g.ndim; ++a) {
    // lag-1 Pearson autocorrelation along axis a
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    std::size_t m = 0;
    const std::size_t total = g.voxels();
    int x[3] = {0, 0, 0};
    for (std::size_t idx = 0; idx < total; ++idx) {
      if (x[a] < g.dims[a] - 1) {
        const double u = residual.values[idx];
        const double v = residual.values[idx + strides[a]];
        sx += u;
        sy += v;
        sxx += u * u;
        syy += v * v;
        sxy += u * v;
        ++m;
      }
      for (int b = g.ndim - 1; b >= 0; --b) {
        if (++x[b] < g.dims[b]) break;
        x[b] = 0;
      }
    }
    const double dm = static_cast<double>(m);
    const double vx = sxx - sx * sx / dm;
    const double vy = syy - sy * sy / dm;
    const double cov = sxy - sx * sy / dm;
    double rho;
    if (vx <= 0.0 || vy <= 0.0) {
      rho = 1.0;  // degenerate (constant along this axis)
    } else {
      rho = cov / std::sqrt(vx * vy);
      rho = std::clamp(rho, -1.0, 1.0);
    }
    const double f = (1.0 - rho) / std::max(1.0 + rho, 1e-12);
    alpha *= std::max(kAlphaFloor, f);
  }
  return std::clamp(alpha, kAlphaFloor * kAlphaFloor * kAlphaFloor, 1.0);
}

double gmm_log_hyperprior(const MixtureParams& mixture,
                          const LikelihoodHyperpriors& hp) {
  mixture.validate();
  hp.validate();
  const int L = mixture.components();
  double logp = 0.0;
  for (int l = 0; l < L; ++l) {
    const double lb = std::log(mixture.precisions[l]);
    const double z = (lb - hp.mu_beta) / hp.sigma_beta;
    logp += -lb - std::log(hp.sigma_beta) - 0.5 * std::log(kTwoPi) - 0.5 * z * z;
  }
  // symmetric Dirichlet(kappa), constants retained
  for (int l = 0; l < L; ++l)
    logp += (hp.kappa - 1.0) * std::log(mixture.proportions[l]);
  logp -= L * std::lgamma(hp.kappa) - std::lgamma(L * hp.kappa);
  return logp;
}

}  // namespace svreg
