#include "svreg/regulariser.hpp"

#include <cmath>

#include "svreg/interp.hpp"

namespace svreg {

namespace {
constexpr double kChi2Floor = 1e-12;
constexpr double kTwoPi = 6.283185307179586476925287;
}  // namespace

double chi_squared(const VectorField& w) {
  return sum_squared_forward_differences(w);
}

RegEnergyValue reg_energy_chi2(double chi2, const RegulariserState& state) {
  state.validate();
  RegEnergyValue out;
  switch (state.mode) {
    case RegMode::FixedL2:
      out.value = 0.5 * state.lambda_reg * chi2;
      out.d_chi2 = 0.5 * state.lambda_reg;
      return out;
    case RegMode::GammaPrior:
      // Differs from FixedL2 by the gamma normalising constant only.
      out.value = 0.5 * state.lambda_reg * chi2 + std::lgamma(0.5 * state.nu) -
                  0.5 * state.nu * std::log(0.5 * state.lambda_reg);
      out.d_chi2 = 0.5 * state.lambda_reg;
      return out;
    case RegMode::LognormalLearnable: {
      double c = chi2;
      if (c <= kChi2Floor) {
        c = kChi2Floor;
        out.floored = true;
      }
      const double lc = std::log(c);
      const double z = lc - state.mu_chi2;
      const double s2 = state.sigma_chi2 * state.sigma_chi2;
      out.value = 0.5 * state.nu * lc + std::log(state.sigma_chi2) +
                  0.5 * z * z / s2;
      out.d_chi2 = out.floored ? 0.0 : (0.5 * state.nu + z / s2) / c;
      return out;
    }
  }
  fail("reg_energy_chi2: unknown mode");
}

double reg_energy(const VectorField& w, const RegulariserState& state,
                  VectorField* grad) {
  const double chi2 = chi_squared(w);
  const RegEnergyValue e = reg_energy_chi2(chi2, state);
  if (grad) {
    *grad = sum_squared_forward_differences_grad(w);
    for (double& v : grad->values) v *= e.d_chi2;
  }
  return e.value;
}

double digamma(double x) {
  check(x > 0.0, "digamma: argument must be positive");
  double acc = 0.0;
  while (x < 8.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  // asymptotic series with Bernoulli coefficients
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = std::log(x) - 0.5 * inv;
  series -= inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 -
            inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 -
            inv2 * (691.0 / 32760.0 - inv2 * (1.0 / 12.0)))))));
  return acc + series;
}

double init_mu_chi2(double nu, double lambda_init) {
  check(nu >= 2.0, "init_mu_chi2: nu must be >= 2");
  check(lambda_init > 0.0, "init_mu_chi2: lambda_init must be positive");
  return digamma(0.5 * nu) - std::log(0.5 * lambda_init);
}

double reg_hyper_logprior(const RegulariserState& state,
                          const RegulariserHyperpriors& hp) {
  state.validate();
  hp.validate();
  // exp(mu) ~ Gamma(s, r); density in mu-space carries the Jacobian exp(mu):
  // log p(mu) = s log r - lgamma(s) + s mu - r exp(mu)
  const double s = 0.5 * state.nu;
  const double r = 0.5 * hp.lambda_init;
  double logp = s * std::log(r) - std::lgamma(s) + s * state.mu_chi2 -
                r * std::exp(state.mu_chi2);
  // sigma_chi2^2 ~ Lognormal(eta, varsigma^2), density taken in sigma^2
  const double v = 2.0 * std::log(state.sigma_chi2);  // log sigma^2
  const double z = (v - hp.eta) / hp.varsigma;
  logp += -v - std::log(hp.varsigma) - 0.5 * std::log(kTwoPi) - 0.5 * z * z;
  return logp;
}

}  // namespace svreg
