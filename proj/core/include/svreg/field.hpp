#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace svreg {

[[noreturn]] inline void fail(const std::string& msg) {
  throw std::invalid_argument(msg);
}

inline void check(bool ok, const char* msg) {
  if (!ok) fail(msg);
}

inline void check(bool ok, const std::string& msg) {
  if (!ok) fail(msg);
}

/// Regular voxel grid: per-axis counts and physical spacing in mm.
/// Axes are row-major with the last axis fastest.
struct GridSpec {
  int ndim = 0;
  std::array<int, 3> dims{0, 0, 0};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};

  GridSpec() = default;

  GridSpec(std::initializer_list<int> d, double iso_spacing = 1.0) {
    ndim = static_cast<int>(d.size());
    check(ndim == 2 || ndim == 3, "GridSpec: ndim must be 2 or 3");
    int i = 0;
    for (int n : d) dims[i++] = n;
    for (int a = 0; a < ndim; ++a) spacing[a] = iso_spacing;
    validate();
  }

  GridSpec(const std::vector<int>& d, const std::vector<double>& s) {
    ndim = static_cast<int>(d.size());
    check(ndim == 2 || ndim == 3, "GridSpec: ndim must be 2 or 3");
    check(s.size() == d.size(), "GridSpec: spacing size mismatch");
    for (int a = 0; a < ndim; ++a) {
      dims[a] = d[a];
      spacing[a] = s[a];
    }
    validate();
  }

  void validate() const {
    check(ndim == 2 || ndim == 3, "GridSpec: ndim must be 2 or 3");
    for (int a = 0; a < ndim; ++a) {
      check(dims[a] >= 4, "GridSpec: every dim must be >= 4");
      check(spacing[a] > 0.0 && std::isfinite(spacing[a]),
            "GridSpec: spacing must be positive and finite");
    }
  }

  std::size_t voxels() const {
    std::size_t n = 1;
    for (int a = 0; a < ndim; ++a) n *= static_cast<std::size_t>(dims[a]);
    return n;
  }

  // strides for row-major, last axis fastest
  std::array<std::size_t, 3> strides() const {
    std::array<std::size_t, 3> s{0, 0, 0};
    s[ndim - 1] = 1;
    for (int a = ndim - 2; a >= 0; --a)
      s[a] = s[a + 1] * static_cast<std::size_t>(dims[a + 1]);
    return s;
  }

  bool operator==(const GridSpec& o) const {
    if (ndim != o.ndim) return false;
    for (int a = 0; a < ndim; ++a)
      if (dims[a] != o.dims[a] || spacing[a] != o.spacing[a]) return false;
    return true;
  }
};

/// One real value per voxel.
struct ScalarField {
  GridSpec grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const GridSpec& g, double fill = 0.0)
      : grid(g), values(g.voxels(), fill) {}

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }
};

/// ndim real values per voxel, interleaved: values[voxel * ndim + component].
/// Components are displacement/velocity coordinates in voxel units.
struct VectorField {
  GridSpec grid;
  std::vector<double> values;

  VectorField() = default;
  explicit VectorField(const GridSpec& g, double fill = 0.0)
      : grid(g), values(g.voxels() * static_cast<std::size_t>(g.ndim), fill) {}

  int channels() const { return grid.ndim; }
  std::size_t size() const { return values.size(); }
  double& at(std::size_t voxel, int c) { return values[voxel * grid.ndim + c]; }
  double at(std::size_t voxel, int c) const { return values[voxel * grid.ndim + c]; }
};

/// Non-negative integer label per voxel; 0 is background.
struct LabelField {
  GridSpec grid;
  std::vector<std::int32_t> labels;

  LabelField() = default;
  explicit LabelField(const GridSpec& g, std::int32_t fill = 0)
      : grid(g), labels(g.voxels(), fill) {}

  std::size_t size() const { return labels.size(); }
};

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline void check_finite(const ScalarField& f, const char* what) {
  if (!all_finite(f.values)) fail(std::string(what) + ": non-finite values");
}

inline void check_finite(const VectorField& f, const char* what) {
  if (!all_finite(f.values)) fail(std::string(what) + ": non-finite values");
}

}  // namespace svreg
