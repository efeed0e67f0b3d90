#pragma once

#include "svreg/config.hpp"
#include "svreg/field.hpp"

namespace svreg {

/// Synthetic registration pair: a textured fixed image, a moving image made
/// by warping it with a random smooth ground-truth SVF, blob labels on the
/// fixed grid, and the same labels carried through the ground-truth warp.
struct SynthData {
  ScalarField fixed;
  ScalarField moving;
  LabelField fixed_labels;
  LabelField moving_labels;
  VectorField gt_velocity;
  VectorField gt_displacement;
};

SynthData synthesize_pair(const RunConfig& cfg);

}  // namespace svreg
