#pragma once

#include <memory>
#include <span>
#include <vector>

#include "svreg/field.hpp"
#include "svreg/likelihood.hpp"
#include "svreg/regulariser.hpp"
#include "svreg/svf.hpp"

namespace svreg {

enum class Parametrisation { Dense, Bspline };

/// Result of one energy evaluation: energies, the gradient w.r.t. the
/// transformation parameters, and the per-evaluation diagnostics consumed by
/// the hyperparameter updates.
struct EnergyGradient {
  VectorField d_w;  // on the parameter grid (dense or control lattice)
  double energy_data = 0.0;
  double energy_reg = 0.0;
  double alpha_used = 1.0;
  double chi2 = 0.0;
  GmmStats gmm_stats;
  ScalarField residual;  // retained for virtual-decimation refreshes

  double total() const { return energy_data + energy_reg; }
};

/// Registration energy for one image pair: forward pass exponentiates the
/// negated velocity, warps the moving image, standardises, and evaluates the
/// mixture data term plus the gradient-energy prior; the reverse pass runs
/// hand-derived adjoints through every stage.
class RegistrationEnergy {
 public:
  RegistrationEnergy(ScalarField fixed, ScalarField moving,
                     LikelihoodState likelihood, RegulariserState regulariser,
                     SvfConfig svf, Parametrisation param = Parametrisation::Dense,
                     int bspline_spacing = 2);

  EnergyGradient evaluate(const VectorField& w_param, bool want_grad = true) const;

  /// Data term alone (warp, standardise, mixture energy).
  struct DataTerm {
    double energy = 0.0;
    VectorField d_param;
    GmmStats stats;
    ScalarField residual;
  };
  DataTerm data_term(const VectorField& w_param, bool want_grad) const;

  /// Prior term alone (gradient-energy regulariser).
  struct RegTerm {
    double energy = 0.0;
    VectorField d_param;
    double chi2 = 0.0;
  };
  RegTerm reg_term(const VectorField& w_param, bool want_grad) const;

  const GridSpec& image_grid() const { return fixed_.grid; }
  const GridSpec& parameter_grid() const { return param_grid_; }
  Parametrisation parametrisation() const { return param_; }
  int bspline_spacing() const { return bspline_spacing_; }

  LikelihoodState& likelihood() { return likelihood_; }
  const LikelihoodState& likelihood() const { return likelihood_; }
  RegulariserState& regulariser() { return regulariser_; }
  const RegulariserState& regulariser() const { return regulariser_; }
  const SvfConfig& svf() const { return svf_; }
  const ScalarField& fixed() const { return fixed_; }
  const ScalarField& moving() const { return moving_; }

 private:
  ScalarField fixed_;
  ScalarField moving_;
  ScalarField fixed_std_;  // standardised fixed image, computed once
  LikelihoodState likelihood_;
  RegulariserState regulariser_;
  SvfConfig svf_;
  Parametrisation param_;
  int bspline_spacing_;
  GridSpec param_grid_;
};

/// Degrees of freedom of the dense velocity field on a grid.
inline double degrees_of_freedom(const GridSpec& g) {
  return static_cast<double>(g.ndim) * static_cast<double>(g.voxels());
}

// ---------------------------------------------------------------------------
// Generic energy interface driven by the VI / SGLD loops. The registration
// model implements it; test harnesses substitute analytic targets.
// ---------------------------------------------------------------------------

class EnergyModel {
 public:
  virtual ~EnergyModel() = default;

  virtual std::size_t size() const = 0;

  /// Total energy at w; fills grad (same length) when non-empty.
  virtual double eval(std::span<const double> w, std::span<double> grad) = 0;

  /// Split of the last eval: (data, reg). Defaults to (total, 0).
  virtual double last_data_energy() const { return last_data_; }
  virtual double last_reg_energy() const { return last_reg_; }

  /// Smoothing hooks (no-ops by default).
  virtual void filter_sample(std::span<double>) {}
  virtual void filter_sample_adjoint(std::span<double>) {}
  virtual void filter_gradient(std::span<double>) {}

  /// Called once at the top of each outer iteration (e.g. refresh the
  /// virtual decimation factor from the latest residual map).
  virtual void begin_iteration(int) {}

  /// One SAEM ascent step on the model hyperparameters using whatever the
  /// model cached since the last call. `lr_scale` is the decayed multiplier.
  virtual void saem_update(double) {}

 protected:
  double last_data_ = 0.0;
  double last_reg_ = 0.0;
};

}  // namespace svreg
