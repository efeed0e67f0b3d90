#include "svreg/interp.hpp"

#include <cmath>

#include "svreg/detail/sample.hpp"

namespace svreg {

namespace {

void check_position(std::span<const double> p, int ndim) {
  check(static_cast<int>(p.size()) == ndim, "position: wrong dimensionality");
  for (double x : p)
    check(std::isfinite(x), "position: non-finite coordinate");
}

template <int D>
double interp_scalar(const ScalarField& f, const double* p) {
  auto cell = detail::make_cell<D>(p, f.grid.dims.data());
  double out;
  detail::sample<D>(f.values.data(), 1, cell, &out);
  return out;
}

template <int D>
void interp_vector(const VectorField& f, const double* p, double* out) {
  auto cell = detail::make_cell<D>(p, f.grid.dims.data());
  detail::sample<D>(f.values.data(), D, cell, out);
}

template <int D>
double interp_scalar_grad(const ScalarField& f, const double* p, double* dp) {
  auto cell = detail::make_cell<D>(p, f.grid.dims.data());
  double out;
  detail::sample_with_grad<D>(f.values.data(), 1, cell, &out, dp);
  return out;
}

template <int D>
void warp_impl(const ScalarField& moving, const VectorField& disp,
               ScalarField& out) {
  const int* dims = moving.grid.dims.data();
  const double* u = disp.values.data();
  double p[D];
  int x[D] = {};
  const std::size_t n = moving.grid.voxels();
  for (std::size_t idx = 0; idx < n; ++idx) {
    for (int a = 0; a < D; ++a) p[a] = x[a] + u[idx * D + a];
    auto cell = detail::make_cell<D>(p, dims);
    detail::sample<D>(moving.values.data(), 1, cell, &out.values[idx]);
    for (int a = D - 1; a >= 0; --a) {
      if (++x[a] < dims[a]) break;
      x[a] = 0;
    }
  }
}

template <int D>
void warp_adjoint_impl(const ScalarField& moving, const VectorField& disp,
                       const ScalarField& gbar, VectorField& out) {
  const int* dims = moving.grid.dims.data();
  const double* u = disp.values.data();
  double p[D], val, dval[D];
  int x[D] = {};
  const std::size_t n = moving.grid.voxels();
  for (std::size_t idx = 0; idx < n; ++idx) {
    for (int a = 0; a < D; ++a) p[a] = x[a] + u[idx * D + a];
    auto cell = detail::make_cell<D>(p, dims);
    detail::sample_with_grad<D>(moving.values.data(), 1, cell, &val, dval);
    const double g = gbar.values[idx];
    for (int a = 0; a < D; ++a) out.values[idx * D + a] = g * dval[a];
    for (int a = D - 1; a >= 0; --a) {
      if (++x[a] < dims[a]) break;
      x[a] = 0;
    }
  }
}

template <int D>
void warp_labels_impl(const LabelField& moving, const VectorField& disp,
                      LabelField& out) {
  const int* dims = moving.grid.dims.data();
  const double* u = disp.values.data();
  auto strides = moving.grid.strides();
  int x[D] = {};
  const std::size_t n = moving.grid.voxels();
  for (std::size_t idx = 0; idx < n; ++idx) {
    std::size_t src = 0;
    for (int a = 0; a < D; ++a) {
      double p = x[a] + u[idx * D + a];
      long i = std::lround(p);
      if (i < 0) i = 0;
      if (i > dims[a] - 1) i = dims[a] - 1;
      src += static_cast<std::size_t>(i) * strides[a];
    }
    out.labels[idx] = moving.labels[src];
    for (int a = D - 1; a >= 0; --a) {
      if (++x[a] < dims[a]) break;
      x[a] = 0;
    }
  }
}

// du_c/dx_a in voxel units: central in the interior, one-sided at faces.
template <int D>
inline double partial(const double* u, const int* x, const int* dims,
                      const std::size_t* strides, std::size_t idx, int c,
                      int a) {
  const std::size_t s = strides[a] * D;
  const std::size_t i = idx * D + c;
  if (x[a] == 0) return u[i + s] - u[i];
  if (x[a] == dims[a] - 1) return u[i] - u[i - s];
  return 0.5 * (u[i + s] - u[i - s]);
}

template <int D>
void jacdet_impl(const VectorField& disp, ScalarField& out) {
  const int* dims = disp.grid.dims.data();
  auto strides = disp.grid.strides();
  const double* u = disp.values.data();
  int x[D] = {};
  const std::size_t n = disp.grid.voxels();
  for (std::size_t idx = 0; idx < n; ++idx) {
    double J[D][D];
    for (int c = 0; c < D; ++c)
      for (int a = 0; a < D; ++a) {
        J[c][a] = partial<D>(u, x, dims, strides.data(), idx, c, a);
        if (c == a) J[c][a] += 1.0;
      }
    double det;
    if constexpr (D == 2) {
      det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    } else {
      det = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
            J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
            J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
    }
    out.values[idx] = det;
    for (int a = D - 1; a >= 0; --a) {
      if (++x[a] < dims[a]) break;
      x[a] = 0;
    }
  }
}

}  // namespace

double interpolate(const ScalarField& field, std::span<const double> position) {
  check_position(position, field.grid.ndim);
  return field.grid.ndim == 2 ? interp_scalar<2>(field, position.data())
                              : interp_scalar<3>(field, position.data());
}

void interpolate(const VectorField& field, std::span<const double> position,
                 std::span<double> out) {
  check_position(position, field.grid.ndim);
  check(static_cast<int>(out.size()) == field.grid.ndim,
        "interpolate: output size mismatch");
  if (field.grid.ndim == 2)
    interp_vector<2>(field, position.data(), out.data());
  else
    interp_vector<3>(field, position.data(), out.data());
}

double interpolate_with_grad(const ScalarField& field,
                             std::span<const double> position,
                             std::span<double> d_position) {
  check_position(position, field.grid.ndim);
  check(static_cast<int>(d_position.size()) == field.grid.ndim,
        "interpolate_with_grad: gradient size mismatch");
  return field.grid.ndim == 2
             ? interp_scalar_grad<2>(field, position.data(), d_position.data())
             : interp_scalar_grad<3>(field, position.data(), d_position.data());
}

ScalarField warp(const ScalarField& moving, const VectorField& displacement) {
  check(moving.grid == displacement.grid, "warp: grid mismatch");
  ScalarField out(moving.grid);
  if (moving.grid.ndim == 2)
    warp_impl<2>(moving, displacement, out);
  else
    warp_impl<3>(moving, displacement, out);
  return out;
}

VectorField warp_adjoint_displacement(const ScalarField& moving,
                                      const VectorField& displacement,
                                      const ScalarField& output_bar) {
  check(moving.grid == displacement.grid && moving.grid == output_bar.grid,
        "warp_adjoint_displacement: grid mismatch");
  VectorField out(moving.grid);
  if (moving.grid.ndim == 2)
    warp_adjoint_impl<2>(moving, displacement, output_bar, out);
  else
    warp_adjoint_impl<3>(moving, displacement, output_bar, out);
  return out;
}

LabelField warp_labels(const LabelField& moving, const VectorField& displacement) {
  check(moving.grid == displacement.grid, "warp_labels: grid mismatch");
  LabelField out(moving.grid);
  if (moving.grid.ndim == 2)
    warp_labels_impl<2>(moving, displacement, out);
  else
    warp_labels_impl<3>(moving, displacement, out);
  return out;
}

ScalarField jacobian_determinant(const VectorField& displacement) {
  check_finite(displacement, "jacobian_determinant");
  ScalarField out(displacement.grid);
  if (displacement.grid.ndim == 2)
    jacdet_impl<2>(displacement, out);
  else
    jacdet_impl<3>(displacement, out);
  return out;
}

std::vector<VectorField> gradient_operator(const VectorField& field) {
  const GridSpec& g = field.grid;
  const int D = g.ndim;
  auto strides = g.strides();
  std::vector<VectorField> out;
  out.reserve(D);
  for (int a = 0; a < D; ++a) out.emplace_back(g);

  const std::size_t n = g.voxels();
  int x[3] = {0, 0, 0};
  for (std::size_t idx = 0; idx < n; ++idx) {
    for (int a = 0; a < D; ++a) {
      if (x[a] < g.dims[a] - 1) {
        const std::size_t nb = (idx + strides[a]) * D;
        for (int c = 0; c < D; ++c)
          out[a].values[idx * D + c] =
              field.values[nb + c] - field.values[idx * D + c];
      }
      // trailing slab stays zero
    }
    for (int a = D - 1; a >= 0; --a) {
      if (++x[a] < g.dims[a]) break;
      x[a] = 0;
    }
  }
  return out;
}

double sum_squared_forward_differences(const VectorField& field) {
  const GridSpec& g = field.grid;
  const int D = g.ndim;
  auto strides = g.strides();
  const double* v = field.values.data();
  double acc = 0.0;
  const std::size_t n = g.voxels();
  int x[3] = {0, 0, 0};
  for (std::size_t idx = 0; idx < n; ++idx) {
    for (int a = 0; a < D; ++a) {
      if (x[a] >= g.dims[a] - 1) continue;
      const std::size_t nb = (idx + strides[a]) * D;
      for (int c = 0; c < D; ++c) {
        const double d = v[nb + c] - v[idx * D + c];
        acc += d * d;
      }
    }
    for (int a = D - 1; a >= 0; --a) {
      if (++x[a] < g.dims[a]) break;
      x[a] = 0;
    }
  }
  return acc;
}

VectorField sum_squared_forward_differences_grad(const VectorField& field) {
  const GridSpec& g = field.grid;
  const int D = g.ndim;
  auto strides = g.strides();
  const double* v = field.values.data();
  VectorField out(g);
  const std::size_t n = g.voxels();
  int x[3] = {0, 0, 0};
  for (std::size_t idx = 0; idx < n; ++idx) {
    for (int a = 0; a < D; ++a) {
      if (x[a] < g.dims[a] - 1) {
        const std::size_t nb = (idx + strides[a]) * D;
        for (int c = 0; c < D; ++c) {
          const double d = v[nb + c] - v[idx * D + c];
          out.values[idx * D + c] -= 2.0 * d;
          out.values[nb + c] += 2.0 * d;
        }
      }
    }
    for (int a = D - 1; a >= 0; --a) {
      if (++x[a] < g.dims[a]) break;
      x[a] = 0;
    }
  }
  return out;
}

}  // namespace svreg
