#pragma once

#include <span>

#include "svreg/field.hpp"

namespace svreg {

// Multilinear interpolation with clamp-to-edge boundary handling. Positions
// are continuous voxel coordinates; positions outside the domain are clamped
// to the boundary face before interpolation.

double interpolate(const ScalarField& field, std::span<const double> position);

// Writes ndim components to `out`.
void interpolate(const VectorField& field, std::span<const double> position,
                 std::span<double> out);

// Value plus derivative w.r.t. the position (voxel units). The derivative is
// zero along axes where the position was clamped outside the domain.
double interpolate_with_grad(const ScalarField& field,
                             std::span<const double> position,
                             std::span<double> d_position);

/// output(x) = interpolate(moving, x + displacement(x))
ScalarField warp(const ScalarField& moving, const VectorField& displacement);

/// Adjoint of warp w.r.t. the displacement: given the cotangent of the output
/// image, returns per-voxel cotangents of the displacement components.
VectorField warp_adjoint_displacement(const ScalarField& moving,
                                      const VectorField& displacement,
                                      const ScalarField& output_bar);

/// Nearest-neighbour label warp (labels are categorical).
LabelField warp_labels(const LabelField& moving, const VectorField& displacement);

/// Per-voxel det(I + du/dx), derivatives in voxel units: central differences
/// in the interior, one-sided on the boundary.
ScalarField jacobian_determinant(const VectorField& displacement);

/// Forward differences of every component along every axis, zero on the
/// trailing boundary slab. Result: one VectorField per axis.
std::vector<VectorField> gradient_operator(const VectorField& field);

/// Sum of squares of gradient_operator output (computed without
/// materialising the stack).
double sum_squared_forward_differences(const VectorField& field);

/// d/dw of sum_squared_forward_differences, i.e. 2 L^T L w.
VectorField sum_squared_forward_differences_grad(const VectorField& field);

}  // namespace svreg
