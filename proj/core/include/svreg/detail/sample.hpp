#pragma once

#include <cstddef>

namespace svreg::detail {

// Shared multilinear sampling kernels (clamp-to-edge). Hot paths: no input
// validation here; callers check preconditions.

struct AxisCell {
  int i0;       // lower lattice index of the cell, in [0, n-2]
  double t;     // fractional coordinate in [0, 1]
  double gate;  // 1 inside the domain, 0 if the position was clamped
};

inline AxisCell axis_cell(double p, int n) {
  AxisCell c;
  const double hi = static_cast<double>(n - 1);
  c.gate = (p >= 0.0 && p <= hi) ? 1.0 : 0.0;
  double pc = p < 0.0 ? 0.0 : (p > hi ? hi : p);
  int i = static_cast<int>(pc);
  if (i > n - 2) i = n - 2;
  c.i0 = i;
  c.t = pc - static_cast<double>(i);
  return c;
}

template <int D>
struct Cell {
  AxisCell ax[D];
  std::size_t base;       // flat voxel index of the lower corner
  std::size_t stride[D];  // voxel strides (last axis fastest)
};

template <int D>
inline Cell<D> make_cell(const double* p, const int* dims) {
  Cell<D> c;
  std::size_t s = 1;
  for (int a = D - 1; a >= 0; --a) {
    c.stride[a] = s;
    s *= static_cast<std::size_t>(dims[a]);
  }
  std::size_t base = 0;
  for (int a = 0; a < D; ++a) {
    c.ax[a] = axis_cell(p[a], dims[a]);
    base += static_cast<std::size_t>(c.ax[a].i0) * c.stride[a];
  }
  c.base = base;
  return c;
}

// Gather `channels` interleaved values at the cell position.
template <int D>
inline void sample(const double* data, int channels, const Cell<D>& c,
                   double* out) {
  for (int ch = 0; ch < channels; ++ch) out[ch] = 0.0;
  constexpr int corners = 1 << D;
  for (int m = 0; m < corners; ++m) {
    double w = 1.0;
    std::size_t off = c.base;
    for (int a = 0; a < D; ++a) {
      if (m & (1 << a)) {
        w *= c.ax[a].t;
        off += c.stride[a];
      } else {
        w *= 1.0 - c.ax[a].t;
      }
    }
    const double* src = data + off * channels;
    for (int ch = 0; ch < channels; ++ch) out[ch] += w * src[ch];
  }
}

// Gather plus derivative w.r.t. position: d_out[ch * D + axis].
// Derivatives are gated to zero along clamped axes.
template <int D>
inline void sample_with_grad(const double* data, int channels,
                             const Cell<D>& c, double* out, double* d_out) {
  for (int ch = 0; ch < channels; ++ch) {
    out[ch] = 0.0;
    for (int a = 0; a < D; ++a) d_out[ch * D + a] = 0.0;
  }
  constexpr int corners = 1 << D;
  for (int m = 0; m < corners; ++m) {
    double w = 1.0;
    std::size_t off = c.base;
    for (int a = 0; a < D; ++a) {
      if (m & (1 << a)) {
        w *= c.ax[a].t;
        off += c.stride[a];
      } else {
        w *= 1.0 - c.ax[a].t;
      }
    }
    const double* src = data + off * channels;
    for (int ch = 0; ch < channels; ++ch) out[ch] += w * src[ch];
    for (int a = 0; a < D; ++a) {
      if (c.ax[a].gate == 0.0) continue;
      // weight derivative along axis a: replace that factor by +-1
      double dw = (m & (1 << a)) ? 1.0 : -1.0;
      for (int b = 0; b < D; ++b) {
        if (b == a) continue;
        dw *= (m & (1 << b)) ? c.ax[b].t : (1.0 - c.ax[b].t);
      }
      for (int ch = 0; ch < channels; ++ch)
        d_out[ch * D + a] += dw * src[ch];
    }
  }
}

// Adjoint of sample(): scatter-add cotangent g (per channel) into acc.
template <int D>
inline void scatter(double* acc, int channels, const Cell<D>& c,
                    const double* g) {
  constexpr int corners = 1 << D;
  for (int m = 0; m < corners; ++m) {
    double w = 1.0;
    std::size_t off = c.base;
    for (int a = 0; a < D; ++a) {
      if (m & (1 << a)) {
        w *= c.ax[a].t;
        off += c.stride[a];
      } else {
        w *= 1.0 - c.ax[a].t;
      }
    }
    double* dst = acc + off * channels;
    for (int ch = 0; ch < channels; ++ch) dst[ch] += w * g[ch];
  }
}

}  // namespace svreg::detail
