#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svreg/energy.hpp"
#include "svreg/field.hpp"
#include "svreg/regulariser.hpp"

namespace svreg {

/// Every pipeline hyperparameter with its default. Parsed from line-oriented
/// `key = value` text; unknown keys are errors, missing keys keep defaults.
struct RunConfig {
  // geometry (used by synth; registration takes grids from its inputs)
  std::vector<int> dims{64, 64};
  std::vector<double> spacing{1.0, 1.0};
  std::uint64_t seed = 0;

  // transformation
  int svf_steps = 12;
  std::string parametrisation = "dense";  // dense | bspline
  int bspline_spacing = 2;

  // likelihood
  int window = 5;
  int gmm_components = 4;
  double kappa = 0.5;
  double mu_beta = 0.0;
  double sigma_beta = 2.3;

  // regularisation
  std::string reg_mode = "lognormal";  // lognormal | fixed_l2 | gamma_prior
  double lambda_init = 1.2;
  double lambda_reg = 1.2;
  double eta = 2.8;
  double varsigma = 5.0;

  // variational inference
  int vi_iters = 1024;
  int rank = 1;
  double lr_posterior = 1e-2;
  double lr_gmm = 2e-1;
  double lr_reg = 1e-2;
  double lr_decay = 1e-3;
  double sigma_init = 0.5;
  double u_init = 0.1;

  // Sobolev filtering
  int sobolev_width = 7;
  double sobolev_lambda = 0.5;
  bool smooth_samples = true;
  bool smooth_gradients = false;

  // SGLD
  double tau = 0.4;  // resolves to 5e-2 when parametrisation = bspline
  bool tau_explicit = false;
  // keep halving tau until a pilot chain stays diffeomorphic (the paper's
  // step-size rule); an explicit tau turns the calibration off
  bool tau_calibrate = true;
  long burn_in = 100000;
  int chains = 2;
  int samples = 500;  // retained in total, split across chains
  long thin = 200;
  bool sgld_noise = true;
  long trace_every = 100;

  // synthetic data
  int labels = 6;
  double noise = 0.01;
  double warp_amplitude = 6.5;  // approximate peak ground-truth displacement, voxels

  void validate() const;
  Parametrisation parametrisation_enum() const;
  RegMode reg_mode_enum() const;
  double resolved_tau() const;
};

/// Parse `key = value` lines ('#' starts a comment). Throws on unknown keys,
/// type mismatches, or constraint violations.
RunConfig config_parse(const std::string& text);

/// Apply a single `key=value` override (CLI flags win over the file).
void config_set(RunConfig& cfg, const std::string& key, const std::string& value);

/// Serialise every key; config_parse(config_echo(c)) reproduces c exactly.
std::string config_echo(const RunConfig& cfg);

}  // namespace svreg
