#include "svreg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "svreg/interp.hpp"

namespace svreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// large finite stand-in for "no site yet": keeps the parabola-intersection
// numerators finite (inf - inf would poison the stack sentinels)
constexpr double kFar = 1e20;

std::vector<std::uint8_t> mask_of(const LabelField& f, std::int32_t label) {
  std::vector<std::uint8_t> m(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) m[i] = f.labels[i] == label;
  return m;
}

// Face-connected boundary: mask voxel with a face neighbour outside the mask
// (the volume edge counts as outside).
std::vector<std::uint8_t> boundary_of(const std::vector<std::uint8_t>& mask,
                                      const GridSpec& g) {
  std::vector<std::uint8_t> b(mask.size(), 0);
  auto strides = g.strides();
  int x[3] = {0, 0, 0};
  for (std::size_t idx = 0; idx < mask.size(); ++idx) {
    if (mask[idx]) {
      bool edge = false;
      for (int a = 0; a < g.ndim && !edge; ++a) {
        if (x[a] == 0 || !mask[idx - strides[a]]) edge = true;
        else if (x[a] == g.dims[a] - 1 || !mask[idx + strides[a]]) edge = true;
      }
      b[idx] = edge;
    }
    for (int a = g.ndim - 1; a >= 0; --a) {
      if (++x[a] < g.dims[a]) break;
      x[a] = 0;
    }
  }
  return b;
}

// 1D squared-distance transform (Felzenszwalb & Huttenlocher) with an
// anisotropic step size.
void edt_1d(std::vector<double>& f, double step) {
  const int n = static_cast<int>(f.size());
  std::vector<int> v(n);
  std::vector<double> z(n + 1), d(n);
  const double s2 = step * step;
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    double s;
    while (true) {
      const int p = v[k];
      s = ((f[q] + s2 * q * q) - (f[p] + s2 * p * p)) / (2.0 * s2 * (q - p));
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = (q - v[k]) * step;
    d[q] = dq * dq + f[v[k]];
  }
  f = std::move(d);
}

// Exact Euclidean distance (mm) from every voxel to the nearest set voxel.
std::vector<double> distance_transform(const std::vector<std::uint8_t>& set,
                                       const GridSpec& g) {
  std::vector<double> d(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) d[i] = set[i] ? 0.0 : kFar;
  auto strides = g.strides();
  std::vector<double> line;
  for (int axis = 0; axis < g.ndim; ++axis) {
    const int n = g.dims[axis];
    line.resize(static_cast<std::size_t>(n));
    const std::size_t stride = strides[axis];
    int x[3] = {0, 0, 0};
    for (std::size_t idx = 0; idx < d.size(); ++idx) {
      if (x[axis] == 0) {
        for (int i = 0; i < n; ++i) line[i] = d[idx + i * stride];
        edt_1d(line, g.spacing[axis]);
        for (int i = 0; i < n; ++i)
          d[idx + i * stride] = std::min(line[i], kFar);
      }
      for (int a = g.ndim - 1; a >= 0; --a) {
        if (++x[a] < g.dims[a]) break;
        x[a] = 0;
      }
    }
  }
  for (double& v : d) v = std::sqrt(v);
  return d;
}

double sample_std(std::span<const double> xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

}  // namespace

double dice(const LabelField& a, const LabelField& b, std::int32_t label) {
  check(a.grid == b.grid, "dice: grid mismatch");
  std::size_t na = 0, nb = 0, ni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool ia = a.labels[i] == label;
    const bool ib = b.labels[i] == label;
    na += ia;
    nb += ib;
    ni += ia && ib;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(ni) / static_cast<double>(na + nb);
}

double average_surface_distance(const LabelField& a, const LabelField& b,
                                std::int32_t label) {
  check(a.grid == b.grid, "average_surface_distance: grid mismatch");
  auto ma = mask_of(a, label);
  auto mb = mask_of(b, label);
  check(std::find(ma.begin(), ma.end(), 1) != ma.end(),
        "average_surface_distance: first mask is empty");
  check(std::find(mb.begin(), mb.end(), 1) != mb.end(),
        "average_surface_distance: second mask is empty");
  auto ba = boundary_of(ma, a.grid);
  auto bb = boundary_of(mb, a.grid);
  auto da = distance_transform(ba, a.grid);  // distance to boundary of a
  auto db = distance_transform(bb, a.grid);
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < ba.size(); ++i) {
    if (ba[i]) {
      acc += db[i];
      ++count;
    }
    if (bb[i]) {
      acc += da[i];
      ++count;
    }
  }
  return acc / static_cast<double>(count);
}

std::vector<std::int32_t> label_ids(const LabelField& f) {
  std::set<std::int32_t> ids;
  for (std::int32_t v : f.labels)
    if (v > 0) ids.insert(v);
  return {ids.begin(), ids.end()};
}

ScalarField displacement_uncertainty(const std::vector<VectorField>& samples) {
  check(samples.size() >= 2, "displacement_uncertainty: need >= 2 samples");
  const GridSpec& g = samples.front().grid;
  for (const auto& s : samples)
    check(s.grid == g, "displacement_uncertainty: grid mismatch");
  const std::size_t n = g.voxels();
  const int D = g.ndim;
  const double m = static_cast<double>(samples.size());

  ScalarField out(g);
  std::vector<double> sum(n, 0.0), sum2(n, 0.0);
  for (const auto& s : samples) {
    for (std::size_t i = 0; i < n; ++i) {
      double mag2 = 0.0;
      for (int c = 0; c < D; ++c) {
        const double v = s.values[i * D + c] * g.spacing[c];
        mag2 += v * v;
      }
      const double mag = std::sqrt(mag2);
      sum[i] += mag;
      sum2[i] += mag * mag;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double mean = sum[i] / m;
    double var = (sum2[i] - m * mean * mean) / (m - 1.0);
    out.values[i] = std::sqrt(std::max(var, 0.0));
  }
  return out;
}

JacobianReport jacobian_report(const std::vector<VectorField>& samples) {
  check(!samples.empty(), "jacobian_report: need at least one sample");
  const std::size_t n_vox = samples.front().grid.voxels();
  std::vector<double> counts;
  counts.reserve(samples.size());
  for (const auto& s : samples) {
    const ScalarField det = jacobian_determinant(s);
    std::size_t c = 0;
    for (double v : det.values) c += v <= 0.0;
    counts.push_back(static_cast<double>(c));
  }
  JacobianReport rep;
  double sum = 0.0;
  for (double c : counts) sum += c;
  rep.mean_count = sum / static_cast<double>(counts.size());
  rep.std_count = sample_std(counts, rep.mean_count);
  rep.percent = 100.0 * rep.mean_count / static_cast<double>(n_vox);
  return rep;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  check(x.size() == y.size(), "pearson: size mismatch");
  check(x.size() >= 3, "pearson: need at least 3 points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  const double vx = sxx - sx * sx / n;
  const double vy = syy - sy * sy / n;
  check(vx > 0.0 && vy > 0.0, "pearson: zero variance");
  return (sxy - sx * sy / n) / std::sqrt(vx * vy);
}

std::vector<StructureRow> structure_report(
    const LabelField& fixed_labels, const LabelField& moving_labels,
    const std::vector<VectorField>& displacement_samples) {
  check(fixed_labels.grid == moving_labels.grid, "structure_report: grid mismatch");
  check(displacement_samples.size() >= 2,
        "structure_report: need >= 2 displacement samples");
  const auto ids = label_ids(fixed_labels);
  const ScalarField unc = displacement_uncertainty(displacement_samples);

  // one warped label map per sample
  std::vector<LabelField> warped;
  warped.reserve(displacement_samples.size());
  for (const auto& disp : displacement_samples)
    warped.push_back(warp_labels(moving_labels, disp));

  std::vector<StructureRow> rows;
  rows.reserve(ids.size());
  for (std::int32_t id : ids) {
    StructureRow row;
    row.label = id;
    std::vector<double> dices, asds;
    dices.reserve(warped.size());
    asds.reserve(warped.size());
    for (const auto& w : warped) {
      dices.push_back(dice(fixed_labels, w, id));
      asds.push_back(average_surface_distance(fixed_labels, w, id));
    }
    double dsum = 0, asum = 0;
    for (double d : dices) dsum += d;
    for (double a : asds) asum += a;
    row.dice_mean = dsum / static_cast<double>(dices.size());
    row.asd_mean = asum / static_cast<double>(asds.size());
    row.dice_std = sample_std(dices, row.dice_mean);
    row.asd_std = sample_std(asds, row.asd_mean);
    row.u_l = row.dice_std;

    double usum = 0.0;
    std::size_t uc = 0;
    for (std::size_t i = 0; i < fixed_labels.size(); ++i)
      if (fixed_labels.labels[i] == id) {
        usum += unc.values[i];
        ++uc;
      }
    row.voxels = uc;
    row.u_d = uc ? usum / static_cast<double>(uc) : 0.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

double pearson_udul(std::span<const StructureRow> rows) {
  std::vector<double> ud, ul;
  ud.reserve(rows.size());
  ul.reserve(rows.size());
  for (const auto& r : rows) {
    ud.push_back(r.u_d);
    ul.push_back(r.u_l);
  }
  return pearson(ud, ul);
}

}  // namespace svreg
