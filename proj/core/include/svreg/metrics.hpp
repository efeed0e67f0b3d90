#pragma once

#include <span>
#include <vector>

#include "svreg/field.hpp"

namespace svreg {

/// 2|A n B| / (|A| + |B|); 1 when both masks are empty.
double dice(const LabelField& a, const LabelField& b, std::int32_t label);

/// Symmetric mean over face-connected boundary voxels of the nearest-boundary
/// Euclidean distance (exact distance transform), in mm. Throws on empty masks.
double average_surface_distance(const LabelField& a, const LabelField& b,
                                std::int32_t label);

/// Sorted non-background label ids present in a field.
std::vector<std::int32_t> label_ids(const LabelField& f);

/// Per-voxel unbiased standard deviation over samples of the displacement
/// magnitude in mm (each component scaled by its axis spacing).
ScalarField displacement_uncertainty(const std::vector<VectorField>& samples);

struct JacobianReport {
  double mean_count = 0.0;
  double std_count = 0.0;
  double percent = 0.0;  // of total voxels
};

/// Per-sample count of voxels with det J <= 0, aggregated over samples.
JacobianReport jacobian_report(const std::vector<VectorField>& samples);

/// Pearson correlation; throws if either series has zero variance or fewer
/// than 3 points.
double pearson(std::span<const double> x, std::span<const double> y);

struct StructureRow {
  std::int32_t label = 0;
  std::size_t voxels = 0;   // fixed-mask size
  double dice_mean = 0.0;
  double dice_std = 0.0;
  double asd_mean = 0.0;  // mm
  double asd_std = 0.0;
  double u_d = 0.0;  // mean displacement-std magnitude inside the structure, mm
  double u_l = 0.0;  // std of the Dice score over samples
};

/// Per-structure Dice/ASD statistics over displacement samples (the moving
/// labels are warped with each sampled displacement, nearest-neighbour), plus
/// the displacement and label uncertainties used for the Pearson correlation.
std::vector<StructureRow> structure_report(
    const LabelField& fixed_labels, const LabelField& moving_labels,
    const std::vector<VectorField>& displacement_samples);

/// Pearson r between u_d and u_l over structures.
double pearson_udul(std::span<const StructureRow> rows);

}  // namespace svreg
