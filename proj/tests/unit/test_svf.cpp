#include <cmath>

#include "doctest.h"
#include "oracle/oracle.hpp"
#include "svreg/interp.hpp"
#include "svreg/regulariser.hpp"
#include "svreg/rng.hpp"
#include "svreg/svf.hpp"

using namespace svreg;

namespace {

// Smoothness matches the velocities the engine integrates in practice (the
// synthetic generator and Sobolev-filtered posterior samples): bilinear
// composition cannot bound the inverse-consistency residual for arbitrarily
// rough fields at a fixed resolution.
VectorField random_smooth_field(const GridSpec& g, double peak, std::uint64_t seed) {
  Rng rng(seed);
  VectorField w(g);
  for (auto& v : w.values) v = rng.normal();
  sobolev_smooth_inplace(w, SobolevConfig{15, 4.0});
  sobolev_smooth_inplace(w, SobolevConfig{15, 4.0});
  double max_mag = 0.0;
  const int D = g.ndim;
  for (std::size_t i = 0; i < g.voxels(); ++i) {
    double m2 = 0.0;
    for (int c = 0; c < D; ++c) m2 += w.values[i * D + c] * w.values[i * D + c];
    max_mag = std::max(max_mag, std::sqrt(m2));
  }
  for (auto& v : w.values) v *= peak / max_mag;
  return w;
}

}  // namespace

TEST_SUITE_BEGIN("svf");

TEST_CASE("zero velocity integrates to the identity") {
  GridSpec g({8, 8});
  VectorField w(g);
  const VectorField disp = exponentiate(w, SvfConfig{12});
  for (double v : disp.values) CHECK(v == 0.0);
}

TEST_CASE("constant velocity integrates to the same translation") {
  GridSpec g({16, 16});
  VectorField w(g);
  for (std::size_t i = 0; i < g.voxels(); ++i) {
    w.values[i * 2 + 0] = 1.3;
    w.values[i * 2 + 1] = -0.8;
  }
  const VectorField disp = exponentiate(w, SvfConfig{12});
  for (int i = 3; i < 13; ++i)
    for (int j = 3; j < 13; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * 16 + j;
      CHECK(std::abs(disp.values[idx * 2 + 0] - 1.3) <= 1e-6);
      CHECK(std::abs(disp.values[idx * 2 + 1] + 0.8) <= 1e-6);
    }
}

TEST_CASE("linear velocity matches the matrix-exponential oracle") {
  GridSpec g({24, 24});
  const std::array<double, 9> a{0.08, 0.03, 0, -0.05, 0.06, 0, 0, 0, 0};
  const auto ea = oracle::matrix_exponential(a, 2);
  const double c0 = 11.5, c1 = 11.5;
  VectorField w(g);
  for (int i = 0; i < 24; ++i)
    for (int j = 0; j < 24; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * 24 + j;
      w.values[idx * 2 + 0] = a[0] * (i - c0) + a[1] * (j - c1);
      w.values[idx * 2 + 1] = a[3] * (i - c0) + a[4] * (j - c1);
    }
  const VectorField disp = exponentiate(w, SvfConfig{12});
  for (int i = 6; i < 18; ++i)
    for (int j = 6; j < 18; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * 24 + j;
      const double want0 = (ea[0] - 1.0) * (i - c0) + ea[1] * (j - c1);
      const double want1 = ea[3] * (i - c0) + (ea[4] - 1.0) * (j - c1);
      CHECK(std::abs(disp.values[idx * 2 + 0] - want0) <= 1e-3);
      CHECK(std::abs(disp.values[idx * 2 + 1] - want1) <= 1e-3);
    }
}

TEST_CASE("exponentiate(w) and exponentiate(-w) are approximate inverses") {
  for (std::uint64_t seed : {11, 12, 13}) {
    GridSpec g({24, 24});
    VectorField w = random_smooth_field(g, 2.0, seed);
    const VectorField fwd = exponentiate(w, SvfConfig{12});
    VectorField neg(g);
    for (std::size_t i = 0; i < w.values.size(); ++i)
      neg.values[i] = -w.values[i];
    const VectorField inv = exponentiate(neg, SvfConfig{12});
    // phi(phi^-1(x)) = x: residual(x) = inv(x) + fwd(x + inv(x))
    double worst = 0.0;
    for (int i = 5; i < 19; ++i)
      for (int j = 5; j < 19; ++j) {
        const std::size_t idx = static_cast<std::size_t>(i) * 24 + j;
        const std::vector<double> p{i + inv.values[idx * 2 + 0],
                                    j + inv.values[idx * 2 + 1]};
        std::vector<double> s(2);
        interpolate(fwd, p, s);
        const double r0 = inv.values[idx * 2 + 0] + s[0];
        const double r1 = inv.values[idx * 2 + 1] + s[1];
        worst = std::max(worst, std::sqrt(r0 * r0 + r1 * r1));
      }
    CHECK(worst <= 0.1);
  }
}

TEST_CASE("exponentiate is equivariant under axis permutation") {
  GridSpec g({12, 12});
  VectorField w = random_smooth_field(g, 1.5, 13);
  VectorField wt(g);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) {
      const std::size_t src = static_cast<std::size_t>(i) * 12 + j;
      const std::size_t dst = static_cast<std::size_t>(j) * 12 + i;
      wt.values[dst * 2 + 0] = w.values[src * 2 + 1];
      wt.values[dst * 2 + 1] = w.values[src * 2 + 0];
    }
  const VectorField d = exponentiate(w, SvfConfig{8});
  const VectorField dt = exponentiate(wt, SvfConfig{8});
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) {
      const std::size_t src = static_cast<std::size_t>(i) * 12 + j;
      const std::size_t dst = static_cast<std::size_t>(j) * 12 + i;
      CHECK(dt.values[dst * 2 + 0] ==
            doctest::Approx(d.values[src * 2 + 1]).epsilon(1e-12));
      CHECK(dt.values[dst * 2 + 1] ==
            doctest::Approx(d.values[src * 2 + 0]).epsilon(1e-12));
    }
}

TEST_CASE("smooth moderate velocities stay diffeomorphic") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GridSpec g({32, 32});
    VectorField w = random_smooth_field(g, 2.5, seed);
    const VectorField disp = exponentiate(w, SvfConfig{12});
    const ScalarField det = jacobian_determinant(disp);
    std::size_t folded = 0;
    for (double v : det.values) folded += v <= 0.0;
    CHECK(folded == 0);
  }
}

TEST_CASE("exponentiate validates its inputs") {
  GridSpec g({6, 6});
  VectorField w(g);
  CHECK_THROWS(exponentiate(w, SvfConfig{-1}));
  CHECK_THROWS(exponentiate(w, SvfConfig{17}));
  w.values[3] = std::nan("");
  CHECK_THROWS(exponentiate(w, SvfConfig{4}));
}

TEST_CASE("b-spline: zero and constant control fields") {
  GridSpec img({16, 16});
  for (int delta : {2, 4}) {
    const GridSpec ctrl = bspline_control_grid(img, delta);
    VectorField zero(ctrl);
    const VectorField dz = bspline_to_dense(zero, delta, img);
    for (double v : dz.values) CHECK(v == 0.0);

    VectorField constant(ctrl);
    for (std::size_t i = 0; i < ctrl.voxels(); ++i) {
      constant.values[i * 2 + 0] = 2.5;
      constant.values[i * 2 + 1] = -1.0;
    }
    const VectorField dc = bspline_to_dense(constant, delta, img);
    for (std::size_t i = 0; i < img.voxels(); ++i) {
      CHECK(dc.values[i * 2 + 0] == doctest::Approx(2.5).epsilon(1e-10));
      CHECK(dc.values[i * 2 + 1] == doctest::Approx(-1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("b-spline weights sum to one at every voxel") {
  GridSpec img({17, 13});
  const int delta = 3;
  const GridSpec ctrl = bspline_control_grid(img, delta);
  VectorField ones(ctrl, 1.0);
  const VectorField dense = bspline_to_dense(ones, delta, img);
  for (double v : dense.values) CHECK(std::abs(v - 1.0) <= 1e-10);
}

TEST_CASE("b-spline evaluation is linear in the control values") {
  Rng rng(17);
  GridSpec img({12, 12});
  const int delta = 2;
  const GridSpec ctrl = bspline_control_grid(img, delta);
  VectorField c(ctrl), c2(ctrl);
  for (std::size_t i = 0; i < c.values.size(); ++i) {
    c.values[i] = rng.normal();
    c2.values[i] = 2.0 * c.values[i];
  }
  const VectorField d = bspline_to_dense(c, delta, img);
  const VectorField d2 = bspline_to_dense(c2, delta, img);
  for (std::size_t i = 0; i < d.values.size(); ++i)
    CHECK(d2.values[i] == doctest::Approx(2.0 * d.values[i]).epsilon(1e-12));
}

TEST_CASE("b-spline coverage violations are rejected") {
  GridSpec img({16, 16});
  VectorField wrong(GridSpec({5, 5}));
  CHECK_THROWS(bspline_to_dense(wrong, 2, img));
}

TEST_CASE("b-spline transpose is the exact adjoint") {
  Rng rng(19);
  GridSpec img({12, 12});
  const int delta = 2;
  const GridSpec ctrl = bspline_control_grid(img, delta);
  VectorField c(ctrl);
  for (auto& v : c.values) v = rng.normal();
  VectorField y(img);
  for (auto& v : y.values) v = rng.normal();
  const VectorField bc = bspline_to_dense(c, delta, img);
  const VectorField bty = bspline_transpose(y, delta, ctrl);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < y.values.size(); ++i) lhs += bc.values[i] * y.values[i];
  for (std::size_t i = 0; i < c.values.size(); ++i) rhs += c.values[i] * bty.values[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("sobolev kernel: impulse response and DC preservation") {
  const SobolevConfig cfg{7, 0.5};
  const auto kernel = sobolev_kernel(cfg);
  CHECK(kernel.size() == 7);
  double sum = 0.0;
  for (double k : kernel) sum += k;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 0; i < 3; ++i) CHECK(kernel[i] == doctest::Approx(kernel[6 - i]));

  // impulse along one axis: centre tap k(0), neighbours k(+-i)
  GridSpec g({15, 15});
  VectorField f(g);
  const std::size_t centre = 7 * 15 + 7;
  f.values[centre * 2 + 0] = 1.0;
  VectorField s = f;
  sobolev_smooth_inplace(s, cfg);
  for (int di = -3; di <= 3; ++di)
    for (int dj = -3; dj <= 3; ++dj) {
      const std::size_t idx = static_cast<std::size_t>(7 + di) * 15 + (7 + dj);
      CHECK(s.values[idx * 2 + 0] ==
            doctest::Approx(kernel[di + 3] * kernel[dj + 3]).epsilon(1e-12));
    }

  VectorField constant(g, 4.5);
  sobolev_smooth_inplace(constant, cfg);
  for (double v : constant.values) CHECK(std::abs(v - 4.5) <= 1e-12);
}

TEST_CASE("smoothing strictly reduces the gradient energy of white noise") {
  Rng rng(21);
  GridSpec g({24, 24});
  VectorField f(g);
  for (auto& v : f.values) v = rng.normal();
  const double before = chi_squared(f);
  sobolev_smooth_inplace(f, SobolevConfig{7, 0.5});
  CHECK(chi_squared(f) < before);
}

TEST_CASE("sobolev adjoint satisfies the inner-product identity") {
  Rng rng(22);
  GridSpec g({10, 9});
  const SobolevConfig cfg{5, 0.8};
  VectorField x(g), y(g);
  for (auto& v : x.values) v = rng.normal();
  for (auto& v : y.values) v = rng.normal();
  VectorField sx = x;
  sobolev_smooth_inplace(sx, cfg);
  VectorField sty = y;
  sobolev_smooth_adjoint_inplace(sty, cfg);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    lhs += sx.values[i] * y.values[i];
    rhs += x.values[i] * sty.values[i];
  }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-11));
}

TEST_SUITE_END();
