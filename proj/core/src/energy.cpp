#include "svreg/energy.hpp"

#include <cmath>
#include <stdexcept>

#include "svreg/interp.hpp"

namespace svreg {

RegistrationEnergy::RegistrationEnergy(ScalarField fixed, ScalarField moving,
                                       LikelihoodState likelihood,
                                       RegulariserState regulariser,
                                       SvfConfig svf, Parametrisation param,
                                       int bspline_spacing)
    : fixed_(std::move(fixed)),
      moving_(std::move(moving)),
      likelihood_(std::move(likelihood)),
      regulariser_(regulariser),
      svf_(svf),
      param_(param),
      bspline_spacing_(bspline_spacing) {
  check(fixed_.grid == moving_.grid, "RegistrationEnergy: grid mismatch");
  check_finite(fixed_, "RegistrationEnergy: fixed");
  check_finite(moving_, "RegistrationEnergy: moving");
  svf_.validate();
  likelihood_.validate();
  regulariser_.validate();
  fixed_std_ = local_standardise(fixed_, likelihood_.window);
  param_grid_ = (param_ == Parametrisation::Dense)
                    ? fixed_.grid
                    : bspline_control_grid(fixed_.grid, bspline_spacing_);
}

RegistrationEnergy::DataTerm RegistrationEnergy::data_term(
    const VectorField& w_param, bool want_grad) const {
  check(w_param.grid.ndim == param_grid_.ndim &&
            w_param.grid.dims == param_grid_.dims,
        "RegistrationEnergy: parameter grid mismatch");

  const VectorField* w_dense_ptr = &w_param;
  VectorField w_dense_storage;
  if (param_ == Parametrisation::Bspline) {
    w_dense_storage = bspline_to_dense(w_param, bspline_spacing_, fixed_.grid);
    w_dense_ptr = &w_dense_storage;
  }
  const VectorField& w_dense = *w_dense_ptr;

  // inverse displacement from the negated velocity
  VectorField neg_w(w_dense.grid);
  for (std::size_t i = 0; i < neg_w.values.size(); ++i)
    neg_w.values[i] = -w_dense.values[i];

  ExpCheckpoints checkpoints;
  VectorField inv_disp = want_grad ? exponentiate(neg_w, svf_, checkpoints)
                                   : exponentiate(neg_w, svf_);

  ScalarField warped = warp(moving_, inv_disp);
  StandardiseCache std_cache;
  ScalarField warped_std = local_standardise(warped, likelihood_.window,
                                             want_grad ? &std_cache : nullptr);

  ScalarField residual(fixed_.grid);
  for (std::size_t i = 0; i < residual.values.size(); ++i)
    residual.values[i] = fixed_std_.values[i] - warped_std.values[i];

  DataEnergyResult data = data_energy(residual, likelihood_, want_grad);

  DataTerm out;
  out.energy = data.value;
  out.stats = std::move(data.stats);
  out.residual = std::move(residual);
  if (!std::isfinite(out.energy))
    throw std::runtime_error("RegistrationEnergy: non-finite data energy");
  if (!want_grad) return out;

  // reverse pass: dE/dr -> standardisation -> warp -> exponentiation
  ScalarField warped_std_bar(fixed_.grid);
  for (std::size_t i = 0; i < warped_std_bar.values.size(); ++i)
    warped_std_bar.values[i] = -data.grad_residual.values[i];

  ScalarField warped_bar = local_standardise_adjoint(std_cache, warped_std_bar);
  VectorField inv_disp_bar =
      warp_adjoint_displacement(moving_, inv_disp, warped_bar);
  VectorField neg_w_bar = exponentiate_adjoint(checkpoints, svf_, inv_disp_bar);

  VectorField d_dense(w_dense.grid);
  for (std::size_t i = 0; i < d_dense.values.size(); ++i)
    d_dense.values[i] = -neg_w_bar.values[i];

  if (param_ == Parametrisation::Bspline) {
    out.d_param = bspline_transpose(d_dense, bspline_spacing_, param_grid_);
  } else {
    out.d_param = std::move(d_dense);
  }
  for (double v : out.d_param.values)
    if (!std::isfinite(v))
      throw std::runtime_error("RegistrationEnergy: non-finite data gradient");
  return out;
}

RegistrationEnergy::RegTerm RegistrationEnergy::reg_term(
    const VectorField& w_param, bool want_grad) const {
  check(w_param.grid.ndim == param_grid_.ndim &&
            w_param.grid.dims == param_grid_.dims,
        "RegistrationEnergy: parameter grid mismatch");

  const VectorField* w_dense_ptr = &w_param;
  VectorField w_dense_storage;
  if (param_ == Parametrisation::Bspline) {
    w_dense_storage = bspline_to_dense(w_param, bspline_spacing_, fixed_.grid);
    w_dense_ptr = &w_dense_storage;
  }
  const VectorField& w_dense = *w_dense_ptr;

  RegTerm out;
  out.chi2 = chi_squared(w_dense);
  const RegEnergyValue reg = reg_energy_chi2(out.chi2, regulariser_);
  out.energy = reg.value;
  if (!std::isfinite(out.energy))
    throw std::runtime_error("RegistrationEnergy: non-finite prior energy");
  if (!want_grad) return out;

  VectorField d_dense = sum_squared_forward_differences_grad(w_dense);
  for (double& v : d_dense.values) v *= reg.d_chi2;
  if (param_ == Parametrisation::Bspline) {
    out.d_param = bspline_transpose(d_dense, bspline_spacing_, param_grid_);
  } else {
    out.d_param = std::move(d_dense);
  }
  return out;
}

EnergyGradient RegistrationEnergy::evaluate(const VectorField& w_param,
                                            bool want_grad) const {
  DataTerm data = data_term(w_param, want_grad);
  RegTerm reg = reg_term(w_param, want_grad);

  EnergyGradient out;
  out.energy_data = data.energy;
  out.energy_reg = reg.energy;
  out.alpha_used = likelihood_.alpha;
  out.chi2 = reg.chi2;
  out.gmm_stats = std::move(data.stats);
  out.residual = std::move(data.residual);
  if (want_grad) {
    out.d_w = std::move(data.d_param);
    for (std::size_t i = 0; i < out.d_w.values.size(); ++i)
      out.d_w.values[i] += reg.d_param.values[i];
  }
  return out;
}

}  // namespace svreg
