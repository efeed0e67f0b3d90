#pragma once

#include <vector>

#include "svreg/field.hpp"

namespace svreg {

/// Scaling-and-squaring configuration: 2^num_squarings integration steps.
struct SvfConfig {
  int num_squarings = 12;

  void validate() const {
    check(num_squarings >= 0 && num_squarings <= 16,
          "SvfConfig: num_squarings must be in [0, 16]");
  }
};

/// Integrate a stationary velocity field into the displacement of the
/// time-1 flow. Pass the negated velocity for the inverse transformation.
VectorField exponentiate(const VectorField& velocity, const SvfConfig& cfg);

/// Intermediate displacement fields u_0 .. u_{T-1} kept for the adjoint.
struct ExpCheckpoints {
  std::vector<VectorField> steps;
};

VectorField exponentiate(const VectorField& velocity, const SvfConfig& cfg,
                         ExpCheckpoints& checkpoints);

/// Reverse-mode derivative of exponentiate: maps the cotangent of the output
/// displacement back to the cotangent of the input velocity.
VectorField exponentiate_adjoint(const ExpCheckpoints& checkpoints,
                                 const SvfConfig& cfg,
                                 const VectorField& displacement_bar);

// --- cubic B-spline velocity parametrisation -------------------------------

/// Control lattice for a cubic B-spline velocity field. Control points sit
/// every `spacing` voxels, with a one-point halo before the first voxel and
/// enough points past the last voxel to cover the cubic support.
GridSpec bspline_control_grid(const GridSpec& image, int spacing);

/// Dense velocity from control coefficients (tensor-product cubic B-spline
/// weights; linear in the control values).
VectorField bspline_to_dense(const VectorField& control, int spacing,
                             const GridSpec& image);

/// Transpose of bspline_to_dense: scatters a dense cotangent back onto the
/// control lattice.
VectorField bspline_transpose(const VectorField& dense_bar, int spacing,
                              const GridSpec& control_grid);

// --- Sobolev (H1) smoothing -------------------------------------------------

/// Separable 1D kernel k(i) ~ exp(-|i|/sqrt(lambda)), truncated to `width`
/// taps and normalised to sum 1.
struct SobolevConfig {
  int width = 7;
  double lambda = 0.5;

  void validate() const {
    check(width >= 3 && width % 2 == 1, "SobolevConfig: width must be odd, >= 3");
    check(lambda > 0.0, "SobolevConfig: lambda must be positive");
  }
};

std::vector<double> sobolev_kernel(const SobolevConfig& cfg);

/// Per-axis separable convolution with clamp-to-edge padding, applied
/// independently to every vector component.
VectorField sobolev_smooth(const VectorField& field, const SobolevConfig& cfg);
void sobolev_smooth_inplace(VectorField& field, const SobolevConfig& cfg);

/// Exact transpose of sobolev_smooth (differs from the forward pass only in
/// how the clamped edge taps accumulate).
void sobolev_smooth_adjoint_inplace(VectorField& field, const SobolevConfig& cfg);

}  // namespace svreg
