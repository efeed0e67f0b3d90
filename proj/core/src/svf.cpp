#include "svreg/svf.hpp"

#include <cmath>
#include <stdexcept>

#include "svreg/detail/sample.hpp"

namespace svreg {

namespace {

// next(x) = u(x) + u(x + u(x))
template <int D>
void compose_step(const VectorField& u, VectorField& next) {
  const int* dims = u.grid.dims.data();
  const double* src = u.values.data();
  double p[D], s[D];
  int x[D] = {};
  const std::size_t n = u.grid.voxels();
  for (std::size_t idx = 0; idx < n; ++idx) {
    for (int a = 0; a < D; ++a) p[a] = x[a] + src[idx * D + a];
    auto cell = detail::make_cell<D>(p, dims);
    detail::sample<D>(src, D, cell, s);
    for (int a = 0; a < D; ++a) next.values[idx * D + a] = src[idx * D + a] + s[a];
    for (int a = D - 1; a >= 0; --a) {
      if (++x[a] < dims[a]) break;
      x[a] = 0;
    }
  }
}

// Adjoint of compose_step: given ubar_next, accumulate ubar for u.
// next depends on u through (1) the identity term, (2) the sampled values,
// (3) the sampling position.
template <int D>
void compose_step_adjoint(const VectorField& u, const VectorField& ubar_next,
                          VectorField& ubar) {
  const int* dims = u.grid.dims.data();
  const double* src = u.values.data();
  const double* gin = ubar_next.values.data();
  double* gout = ubar.values.data();

  // identity path
  for (std::size_t i = 0; i < ubar.values.size(); ++i) gout[i] = gin[i];

  double p[D], val[D], dval[D * D], g[D];
  int x[D] = {};
  const std::size_t n = u.grid.voxels();
  for (std::size_t idx = 0; idx < n; ++idx) {
    for (int a = 0; a < D; ++a) {
      p[a] = x[a] + src[idx * D + a];
      g[a] = gin[idx * D + a];
    }
    auto cell = detail::make_cell<D>(p, dims);
    detail::sample_with_grad<D>(src, D, cell, val, dval);
    // value path: scatter g into the sampled corners
    detail::scatter<D>(gout, D, cell, g);
    // position path: d p_a = sum_c g_c * dI_c/dp_a, and p_a = x_a + u_a(x)
    for (int a = 0; a < D; ++a) {
      double acc = 0.0;
      for (int c = 0; c < D; ++c) acc += g[c] * dval[c * D + a];
      gout[idx * D + a] += acc;
    }
    for (int a = D - 1; a >= 0; --a) {
      if (++x[a] < dims[a]) break;
      x[a] = 0;
    }
  }
}

void check_squaring_finite(const VectorField& f, int iteration) {
  for (double v : f.values)
    if (!std::isfinite(v))
      throw std::runtime_error("exponentiate: non-finite field at squaring step " +
                               std::to_string(iteration));
}

VectorField exponentiate_impl(const VectorField& velocity, const SvfConfig& cfg,
                              ExpCheckpoints* checkpoints) {
  cfg.validate();
  check_finite(velocity, "exponentiate");
  const int T = cfg.num_squarings;
  const double scale = std::ldexp(1.0, -T);  // 2^-T

  VectorField u(velocity.grid);
  for (std::size_t i = 0; i < u.values.size(); ++i)
    u.values[i] = velocity.values[i] * scale;

  VectorField next(velocity.grid);
  for (int k = 0; k < T; ++k) {
    if (checkpoints) checkpoints->steps.push_back(u);
    if (velocity.grid.ndim == 2)
      compose_step<2>(u, next);
    else
      compose_step<3>(u, next);
    check_squaring_finite(next, k);
    std::swap(u, next);
  }
  return u;
}

}  // namespace

VectorField exponentiate(const VectorField& velocity, const SvfConfig& cfg) {
  return exponentiate_impl(velocity, cfg, nullptr);
}

VectorField exponentiate(const VectorField& velocity, const SvfConfig& cfg,
                         ExpCheckpoints& checkpoints) {
  checkpoints.steps.clear();
  return exponentiate_impl(velocity, cfg, &checkpoints);
}

VectorField exponentiate_adjoint(const ExpCheckpoints& checkpoints,
                                 const SvfConfig& cfg,
                                 const VectorField& displacement_bar) {
  cfg.validate();
  const int T = cfg.num_squarings;
  check(static_cast<int>(checkpoints.steps.size()) == T,
        "exponentiate_adjoint: checkpoint count mismatch");

  VectorField gbar = displacement_bar;
  VectorField gprev(displacement_bar.grid);
  for (int k = T - 1; k >= 0; --k) {
    if (displacement_bar.grid.ndim == 2)
      compose_step_adjoint<2>(checkpoints.steps[k], gbar, gprev);
    else
      compose_step_adjoint<3>(checkpoints.steps[k], gbar, gprev);
    std::swap(gbar, gprev);
  }
  const double scale = std::ldexp(1.0, -T);
  for (double& v : gbar.values) v *= scale;
  return gbar;
}

// --- B-spline ----------------------------------------------------------------

namespace {

// Uniform cubic B-spline basis at fractional position t in [0,1).
inline void bspline_weights(double t, double* b) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  b[0] = (1.0 - 3.0 * t + 3.0 * t2 - t3) / 6.0;
  b[1] = (4.0 - 6.0 * t2 + 3.0 * t3) / 6.0;
  b[2] = (1.0 + 3.0 * t + 3.0 * t2 - 3.0 * t3) / 6.0;
  b[3] = t3 / 6.0;
}

// Per-axis control count covering voxels [0, n-1] with support indices
// floor(x/delta)-1 .. floor(x/delta)+2, stored with a +1 offset.
int control_count(int n, int delta) {
  return (n - 1) / delta + 4;
}

template <int D>
void bspline_dense_impl(const VectorField& control, int delta,
                        VectorField& dense) {
  const int* dims = dense.grid.dims.data();
  auto cstrides = control.grid.strides();
  const double* c = control.values.data();
  double w[D][4];
  int base[D];
  int x[D] = {};
  const std::size_t n = dense.grid.voxels();
  for (std::size_t idx = 0; idx < n; ++idx) {
    for (int a = 0; a < D; ++a) {
      const int i = x[a] / delta;
      const double t = static_cast<double>(x[a]) / delta - i;
      bspline_weights(t, w[a]);
      base[a] = i;  // array index of lattice point i-1 (offset +1 layout)
    }
    double acc[D] = {};
    if constexpr (D == 2) {
      for (int m0 = 0; m0 < 4; ++m0)
        for (int m1 = 0; m1 < 4; ++m1) {
          const double wt = w[0][m0] * w[1][m1];
          const std::size_t off =
              (static_cast<std::size_t>(base[0] + m0) * cstrides[0] +
               static_cast<std::size_t>(base[1] + m1)) * D;
          for (int ch = 0; ch < D; ++ch) acc[ch] += wt * c[off + ch];
        }
    } else {
      for (int m0 = 0; m0 < 4; ++m0)
        for (int m1 = 0; m1 < 4; ++m1)
          for (int m2 = 0; m2 < 4; ++m2) {
            const double wt = w[0][m0] * w[1][m1] * w[2][m2];
            const std::size_t off =
                (static_cast<std::size_t>(base[0] + m0) * cstrides[0] +
                 static_cast<std::size_t>(base[1] + m1) * cstrides[1] +
                 static_cast<std::size_t>(base[2] + m2)) * D;
            for (int ch = 0; ch < D; ++ch) acc[ch] += wt * c[off + ch];
          }
    }
    for (int ch = 0; ch < D; ++ch) dense.values[idx * D + ch] = acc[ch];
    for (int a = D - 1; a >= 0; --a) {
      if (++x[a] < dims[a]) break;
      x[a] = 0;
    }
  }
}

template <int D>
void bspline_transpose_impl(const VectorField& dense_bar, int delta,
                            VectorField& control_bar) {
  const int* dims = dense_bar.grid.dims.data();
  auto cstrides = control_bar.grid.strides();
  double* c = control_bar.values.data();
  double w[D][4];
  int base[D];
  int x[D] = {};
  const std::size_t n = dense_bar.grid.voxels();
  for (std::size_t idx = 0; idx < n; ++idx) {
    for (int a = 0; a < D; ++a) {
      const int i = x[a] / delta;
      const double t = static_cast<double>(x[a]) / delta - i;
      bspline_weights(t, w[a]);
      base[a] = i;
    }
    const double* g = &dense_bar.values[idx * D];
    if constexpr (D == 2) {
      for (int m0 = 0; m0 < 4; ++m0)
        for (int m1 = 0; m1 < 4; ++m1) {
          const double wt = w[0][m0] * w[1][m1];
          const std::size_t off =
              (static_cast<std::size_t>(base[0] + m0) * cstrides[0] +
               static_cast<std::size_t>(base[1] + m1)) * D;
          for (int ch = 0; ch < D; ++ch) c[off + ch] += wt * g[ch];
        }
    } else {
      for (int m0 = 0; m0 < 4; ++m0)
        for (int m1 = 0; m1 < 4; ++m1)
          for (int m2 = 0; m2 < 4; ++m2) {
            const double wt = w[0][m0] * w[1][m1] * w[2][m2];
            const std::size_t off =
                (static_cast<std::size_t>(base[0] + m0) * cstrides[0] +
                 static_cast<std::size_t>(base[1] + m1) * cstrides[1] +
                 static_cast<std::size_t>(base[2] + m2)) * D;
            for (int ch = 0; ch < D; ++ch) c[off + ch] += wt * g[ch];
          }
    }
    for (int a = D - 1; a >= 0; --a) {
      if (++x[a] < dims[a]) break;
      x[a] = 0;
    }
  }
}

}  // namespace

GridSpec bspline_control_grid(const GridSpec& image, int spacing) {
  check(spacing >= 1, "bspline_control_grid: spacing must be >= 1");
  std::vector<int> d(image.ndim);
  std::vector<double> s(image.ndim);
  for (int a = 0; a < image.ndim; ++a) {
    d[a] = control_count(image.dims[a], spacing);
    s[a] = image.spacing[a] * spacing;
  }
  return GridSpec(d, s);
}

VectorField bspline_to_dense(const VectorField& control, int spacing,
                             const GridSpec& image) {
  check(spacing >= 1, "bspline_to_dense: spacing must be >= 1");
  check(control.grid.ndim == image.ndim, "bspline_to_dense: ndim mismatch");
  for (int a = 0; a < image.ndim; ++a)
    check(control.grid.dims[a] == control_count(image.dims[a], spacing),
          "bspline_to_dense: control grid does not cover the image domain");
  VectorField dense(image);
  if (image.ndim == 2)
    bspline_dense_impl<2>(control, spacing, dense);
  else
    bspline_dense_impl<3>(control, spacing, dense);
  return dense;
}

VectorField bspline_transpose(const VectorField& dense_bar, int spacing,
                              const GridSpec& control_grid) {
  check(spacing >= 1, "bspline_transpose: spacing must be >= 1");
  for (int a = 0; a < dense_bar.grid.ndim; ++a)
    check(control_grid.dims[a] ==
              control_count(dense_bar.grid.dims[a], spacing),
          "bspline_transpose: control grid mismatch");
  VectorField out(control_grid);
  if (dense_bar.grid.ndim == 2)
    bspline_transpose_impl<2>(dense_bar, spacing, out);
  else
    bspline_transpose_impl<3>(dense_bar, spacing, out);
  return out;
}

// --- Sobolev ------------------------------------------------------------------

std::vector<double> sobolev_kernel(const SobolevConfig& cfg) {
  cfg.validate();
  const int h = cfg.width / 2;
  std::vector<double> k(cfg.width);
  const double rate = 1.0 / std::sqrt(cfg.lambda);
  double sum = 0.0;
  for (int i = -h; i <= h; ++i) {
    k[i + h] = std::exp(-std::abs(i) * rate);
    sum += k[i + h];
  }
  for (double& v : k) v /= sum;
  return k;
}

namespace {

enum class ConvMode { Forward, Adjoint };

void convolve_axis(VectorField& f, const std::vector<double>& kernel, int axis,
                   ConvMode mode) {
  const GridSpec& g = f.grid;
  const int D = g.ndim;
  const int n = g.dims[axis];
  const int h = static_cast<int>(kernel.size()) / 2;
  auto strides = g.strides();
  const std::size_t stride = strides[axis] * D;

  // iterate over all lines along `axis`
  std::vector<double> line(static_cast<std::size_t>(n));
  std::vector<double> out(static_cast<std::size_t>(n));
  const std::size_t total = g.voxels();
  int x[3] = {0, 0, 0};
  for (std::size_t idx = 0; idx < total; ++idx) {
    if (x[axis] == 0) {
      for (int c = 0; c < D; ++c) {
        const std::size_t base = idx * D + c;
        for (int i = 0; i < n; ++i) line[i] = f.values[base + i * stride];
        if (mode == ConvMode::Forward) {
          for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = -h; j <= h; ++j) {
              int m = i + j;
              if (m < 0) m = 0;
              if (m > n - 1) m = n - 1;
              acc += kernel[j + h] * line[m];
            }
            out[i] = acc;
          }
        } else {
          for (int i = 0; i < n; ++i) out[i] = 0.0;
          for (int i = 0; i < n; ++i) {
            for (int j = -h; j <= h; ++j) {
              int m = i + j;
              if (m < 0) m = 0;
              if (m > n - 1) m = n - 1;
              out[m] += kernel[j + h] * line[i];
            }
          }
        }
        for (int i = 0; i < n; ++i) f.values[base + i * stride] = out[i];
      }
    }
    for (int a = D - 1; a >= 0; --a) {
      if (++x[a] < g.dims[a]) break;
      x[a] = 0;
    }
  }
}

}  // namespace

void sobolev_smooth_inplace(VectorField& field, const SobolevConfig& cfg) {
  const auto kernel = sobolev_kernel(cfg);
  for (int a = 0; a < field.grid.ndim; ++a)
    convolve_axis(field, kernel, a, ConvMode::Forward);
}

VectorField sobolev_smooth(const VectorField& field, const SobolevConfig& cfg) {
  VectorField out = field;
  sobolev_smooth_inplace(out, cfg);
  return out;
}

void sobolev_smooth_adjoint_inplace(VectorField& field, const SobolevConfig& cfg) {
  const auto kernel = sobolev_kernel(cfg);
  // transpose applies per-axis transposes in reverse order
  for (int a = field.grid.ndim - 1; a >= 0; --a)
    convolve_axis(field, kernel, a, ConvMode::Adjoint);
}

}  // namespace svreg
