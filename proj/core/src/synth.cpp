#include "svreg/synth.hpp"

#include <algorithm>
#include <cmath>

#include "svreg/interp.hpp"
#include "svreg/rng.hpp"
#include "svreg/svf.hpp"

namespace svreg {

namespace {

// separable exponential-kernel smoothing for scalar fields
void smooth_scalar(ScalarField& f, int width, double lambda) {
  SobolevConfig cfg{width, lambda};
  const auto kernel = sobolev_kernel(cfg);
  const GridSpec& g = f.grid;
  const int h = width / 2;
  auto strides = g.strides();
  std::vector<double> line;
  for (int axis = 0; axis < g.ndim; ++axis) {
    const int n = g.dims[axis];
    line.resize(static_cast<std::size_t>(n));
    const std::size_t stride = strides[axis];
    int x[3] = {0, 0, 0};
    for (std::size_t idx = 0; idx < f.values.size(); ++idx) {
      if (x[axis] == 0) {
        for (int i = 0; i < n; ++i) line[i] = f.values[idx + i * stride];
        for (int i = 0; i < n; ++i) {
          double acc = 0.0;
          for (int j = -h; j <= h; ++j) {
            int m = std::clamp(i + j, 0, n - 1);
            acc += kernel[j + h] * line[m];
          }
          f.values[idx + i * stride] = acc;
        }
      }
      for (int a = g.ndim - 1; a >= 0; --a) {
        if (++x[a] < g.dims[a]) break;
        x[a] = 0;
      }
    }
  }
}

GridSpec grid_from_config(const RunConfig& cfg) {
  std::vector<double> spacing = cfg.spacing;
  if (spacing.size() == 1) spacing.assign(cfg.dims.size(), spacing[0]);
  return GridSpec(cfg.dims, spacing);
}

}  // namespace

SynthData synthesize_pair(const RunConfig& cfg) {
  cfg.validate();
  const GridSpec grid = grid_from_config(cfg);
  const int D = grid.ndim;
  Rng rng(Rng::derive(cfg.seed, 17));

  SynthData out;

  // ---- blob labels ----------------------------------------------------------
  out.fixed_labels = LabelField(grid);
  int min_dim = grid.dims[0];
  for (int a = 1; a < D; ++a) min_dim = std::min(min_dim, grid.dims[a]);
  std::vector<std::array<double, 3>> centres(cfg.labels);
  std::vector<std::array<double, 3>> radii(cfg.labels);
  for (int k = 0; k < cfg.labels; ++k) {
    for (int a = 0; a < D; ++a) {
      const double margin = 0.2 * grid.dims[a];
      centres[k][a] = margin + rng.uniform() * (grid.dims[a] - 2.0 * margin);
      radii[k][a] = (0.04 + 0.07 * rng.uniform()) * min_dim;
    }
  }
  {
    int x[3] = {0, 0, 0};
    for (std::size_t idx = 0; idx < grid.voxels(); ++idx) {
      for (int k = 0; k < cfg.labels; ++k) {
        double d2 = 0.0;
        for (int a = 0; a < D; ++a) {
          const double t = (x[a] - centres[k][a]) / radii[k][a];
          d2 += t * t;
        }
        if (d2 <= 1.0) out.fixed_labels.labels[idx] = k + 1;
      }
      for (int a = D - 1; a >= 0; --a) {
        if (++x[a] < grid.dims[a]) break;
        x[a] = 0;
      }
    }
  }

  // ---- fixed image: two noise scales plus visible blob offsets --------------
  out.fixed = ScalarField(grid);
  for (double& v : out.fixed.values) v = rng.normal();
  smooth_scalar(out.fixed, 9, 4.0);
  ScalarField detail(grid);
  for (double& v : detail.values) v = rng.normal();
  smooth_scalar(detail, 3, 0.5);
  {
    auto normalise = [](ScalarField& f) {
      double lo = f.values[0], hi = f.values[0];
      for (double v : f.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      const double scale = hi > lo ? 1.0 / (hi - lo) : 1.0;
      for (double& v : f.values) v = (v - lo) * scale;
    };
    normalise(out.fixed);
    normalise(detail);
    for (std::size_t i = 0; i < out.fixed.values.size(); ++i) {
      out.fixed.values[i] += 0.6 * (detail.values[i] - 0.5);
      const std::int32_t lab = out.fixed_labels.labels[i];
      if (lab > 0) out.fixed.values[i] += 0.25 + 0.08 * (lab % 3);
    }
    smooth_scalar(out.fixed, 3, 1.0);  // soften blob edges slightly
  }

  // ---- ground-truth velocity: smoothed noise scaled to the target amplitude -
  out.gt_velocity = VectorField(grid);
  for (double& v : out.gt_velocity.values) v = rng.normal();
  sobolev_smooth_inplace(out.gt_velocity, SobolevConfig{15, 4.0});
  sobolev_smooth_inplace(out.gt_velocity, SobolevConfig{11, 2.0});
  // warp_amplitude sets the peak speed; the mean lands near half of it
  double peak = 0.0, mean_mag = 0.0;
  for (std::size_t i = 0; i < grid.voxels(); ++i) {
    double m2 = 0.0;
    for (int a = 0; a < D; ++a) {
      const double v = out.gt_velocity.values[i * D + a];
      m2 += v * v;
    }
    peak = std::max(peak, m2);
    mean_mag += std::sqrt(m2);
  }
  peak = std::sqrt(peak);
  mean_mag /= static_cast<double>(grid.voxels());
  if (mean_mag > 0.0) {
    const double scale = std::min(0.45 * cfg.warp_amplitude / mean_mag,
                                  1.6 * cfg.warp_amplitude / peak);
    for (double& v : out.gt_velocity.values) v *= scale;
  }

  SvfConfig svf{cfg.svf_steps};
  out.gt_displacement = exponentiate(out.gt_velocity, svf);
  // keep the ground truth diffeomorphic: shrink until det J stays positive
  for (int attempt = 0; attempt < 8; ++attempt) {
    const ScalarField det = jacobian_determinant(out.gt_displacement);
    double dmin = det.values[0];
    for (double v : det.values) dmin = std::min(dmin, v);
    if (dmin > 0.05) break;
    for (double& v : out.gt_velocity.values) v *= 0.8;
    out.gt_displacement = exponentiate(out.gt_velocity, svf);
  }

  // ---- moving image and labels ----------------------------------------------
  out.moving = warp(out.fixed, out.gt_displacement);
  if (cfg.noise > 0.0)
    for (double& v : out.moving.values) v += cfg.noise * rng.normal();
  out.moving_labels = warp_labels(out.fixed_labels, out.gt_displacement);
  return out;
}

}  // namespace svreg
