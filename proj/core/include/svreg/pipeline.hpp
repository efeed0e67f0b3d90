#pragma once

#include <optional>
#include <string>

#include "svreg/config.hpp"
#include "svreg/lowrank.hpp"
#include "svreg/metrics.hpp"
#include "svreg/model.hpp"
#include "svreg/synth.hpp"
#include "svreg/vi.hpp"

namespace svreg {

// Run-directory drivers shared by the CLI and the acceptance suite. Every
// driver echoes the resolved configuration into its output directory so any
// result can be regenerated from disk alone.

void ensure_dir(const std::string& dir);

/// Build the registration model (likelihood + regulariser states initialised
/// from the config) for an image pair.
RegistrationModel make_model(const RunConfig& cfg, const ScalarField& fixed,
                             const ScalarField& moving);

/// `synth`: write the pair, labels, and ground truth into outdir.
SynthData run_synth_driver(const RunConfig& cfg, const std::string& outdir);

struct ViRunOutputs {
  LowRankGaussian q;
  int iters_run = 0;
  double final_elbo = 0.0;
};

/// `vi`: fit the posterior, write q, the ELBO/hyperparameter traces, and the
/// fitted hyperparameters.
ViRunOutputs run_vi_driver(const RunConfig& cfg, const ScalarField& fixed,
                           const ScalarField& moving, const std::string& outdir);

/// Posterior plus fitted hyperparameters as written by run_vi_driver.
struct PosteriorBundle {
  LowRankGaussian q;
  MixtureParams mixture;
  double mu_chi2 = 0.0;
  double sigma_chi2 = 1.0;
};

PosteriorBundle load_posterior(const std::string& vi_dir);

enum class SgldInit { Vi, Zero, Randn };
SgldInit sgld_init_from_string(const std::string& s);

struct SgldRunOutputs {
  std::vector<VectorField> samples;  // velocities on the parameter grid
};

/// `sgld`: run `cfg.chains` chains in parallel threads (each with a private
/// rng stream and hyperparameter state), write the thinned sample files and
/// per-chain traces.
SgldRunOutputs run_sgld_driver(const RunConfig& cfg, const ScalarField& fixed,
                               const ScalarField& moving,
                               const PosteriorBundle* posterior, SgldInit init,
                               const std::string& outdir);

std::vector<VectorField> load_samples(const std::string& run_dir);

struct MetricsSummary {
  std::vector<StructureRow> rows;
  JacobianReport jacobian;
  double r_udul = 0.0;
  double mean_dice = 0.0;      // over structures, mean over samples
  double identity_dice = 0.0;  // fixed vs unwarped moving labels
  ScalarField uncertainty;     // displacement-std magnitude map, mm
};

/// `metrics`: velocity samples -> inverse displacements -> overlap, surface
/// distance, Jacobian and uncertainty reports; writes the CSVs + map.
MetricsSummary run_metrics_driver(const RunConfig& cfg,
                                  const LabelField& fixed_labels,
                                  const LabelField& moving_labels,
                                  const std::vector<VectorField>& velocity_samples,
                                  const std::string& outdir);

/// Convert a velocity sample on the parameter grid to the inverse
/// displacement on the image grid.
VectorField velocity_to_inverse_displacement(const RunConfig& cfg,
                                             const GridSpec& image_grid,
                                             const VectorField& velocity);

}  // namespace svreg
