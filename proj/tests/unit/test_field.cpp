#include <cmath>

#include "doctest.h"
#include "svreg/interp.hpp"
#include "svreg/regulariser.hpp"
#include "svreg/rng.hpp"

using namespace svreg;

TEST_SUITE_BEGIN("field");

TEST_CASE("grid invariants are enforced") {
  CHECK_THROWS(GridSpec({3, 8}));
  CHECK_THROWS(GridSpec({8}));
  CHECK_THROWS(GridSpec({8, 8, 8, 8}));
  CHECK_THROWS(GridSpec(std::vector<int>{8, 8}, std::vector<double>{1.0, 0.0}));
  GridSpec g({4, 5, 6});
  CHECK(g.voxels() == 120);
  CHECK(g.strides()[0] == 30);
  CHECK(g.strides()[2] == 1);
}

TEST_CASE("interpolation is exact on lattice points") {
  Rng rng(3);
  for (int ndim : {2, 3}) {
    GridSpec g = ndim == 2 ? GridSpec({7, 5}) : GridSpec({5, 4, 6});
    ScalarField f(g);
    for (auto& v : f.values) v = rng.normal();
    auto strides = g.strides();
    int x[3] = {0, 0, 0};
    for (std::size_t idx = 0; idx < g.voxels(); ++idx) {
      std::vector<double> pos(ndim);
      for (int a = 0; a < ndim; ++a) pos[a] = x[a];
      CHECK(interpolate(f, pos) == doctest::Approx(f.values[idx]).epsilon(1e-14));
      for (int a = ndim - 1; a >= 0; --a) {
        if (++x[a] < g.dims[a]) break;
        x[a] = 0;
      }
    }
    (void)strides;
  }
}

TEST_CASE("bilinear cell centre of corners {0,1,1,2} is 1") {
  GridSpec g({4, 4});
  ScalarField f(g);
  f.values[0 * 4 + 0] = 0.0;
  f.values[0 * 4 + 1] = 1.0;
  f.values[1 * 4 + 0] = 1.0;
  f.values[1 * 4 + 1] = 2.0;
  const std::vector<double> p{0.5, 0.5};
  CHECK(interpolate(f, p) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("positions outside the domain clamp to the boundary face") {
  Rng rng(4);
  GridSpec g({6, 6});
  ScalarField f(g);
  for (auto& v : f.values) v = rng.normal();
  const std::vector<double> outside{-3.7, 0.0};
  const std::vector<double> face{0.0, 0.0};
  CHECK(interpolate(f, outside) == doctest::Approx(interpolate(f, face)));
  const std::vector<double> far{100.0, 2.5};
  const std::vector<double> clamped{5.0, 2.5};
  CHECK(interpolate(f, far) == doctest::Approx(interpolate(f, clamped)));
}

TEST_CASE("non-finite positions are rejected") {
  GridSpec g({4, 4});
  ScalarField f(g);
  const std::vector<double> bad{std::nan(""), 0.0};
  CHECK_THROWS(interpolate(f, bad));
}

TEST_CASE("warp with zero displacement is the identity, bit-exact") {
  Rng rng(5);
  GridSpec g({9, 7});
  ScalarField m(g);
  for (auto& v : m.values) v = rng.normal();
  VectorField zero(g);
  const ScalarField out = warp(m, zero);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(out.values[i] == m.values[i]);
}

TEST_CASE("integer-constant displacement shifts a ramp by one voxel") {
  GridSpec g({8, 8});
  ScalarField ramp(g);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) ramp.values[i * 8 + j] = i + 0.25 * j;
  VectorField disp(g);
  for (std::size_t v = 0; v < g.voxels(); ++v) disp.values[v * 2 + 0] = 1.0;
  const ScalarField out = warp(ramp, disp);
  for (int i = 0; i < 7; ++i)  // interior rows sample the next row exactly
    for (int j = 0; j < 8; ++j)
      CHECK(out.values[i * 8 + j] ==
            doctest::Approx(ramp.values[(i + 1) * 8 + j]).epsilon(1e-14));
}

TEST_CASE("warping a constant image gives the same constant image") {
  GridSpec g({6, 5});
  ScalarField m(g, 3.25);
  Rng rng(6);
  VectorField disp(g);
  for (auto& v : disp.values) v = 4.0 * rng.normal();
  const ScalarField out = warp(m, disp);
  for (double v : out.values) CHECK(v == doctest::Approx(3.25).epsilon(1e-14));
}

TEST_CASE("warp rejects mismatched grids") {
  ScalarField m(GridSpec({6, 6}));
  VectorField disp(GridSpec({5, 5}));
  CHECK_THROWS(warp(m, disp));
}

TEST_CASE("jacobian determinant of the identity map is exactly 1") {
  for (int ndim : {2, 3}) {
    GridSpec g = ndim == 2 ? GridSpec({6, 6}) : GridSpec({4, 5, 4});
    VectorField zero(g);
    const ScalarField det = jacobian_determinant(zero);
    for (double v : det.values) CHECK(v == 1.0);
  }
}

TEST_CASE("linear displacement 0.1 x per axis gives (1.1)^D in the interior") {
  GridSpec g({8, 8, 8});
  VectorField disp(g);
  int x[3] = {0, 0, 0};
  for (std::size_t idx = 0; idx < g.voxels(); ++idx) {
    for (int a = 0; a < 3; ++a) disp.values[idx * 3 + a] = 0.1 * x[a];
    for (int a = 2; a >= 0; --a) {
      if (++x[a] < g.dims[a]) break;
      x[a] = 0;
    }
  }
  const ScalarField det = jacobian_determinant(disp);
  for (int i = 1; i < 7; ++i)
    for (int j = 1; j < 7; ++j)
      for (int k = 1; k < 7; ++k)
        CHECK(det.values[(i * 8 + j) * 8 + k] ==
              doctest::Approx(1.1 * 1.1 * 1.1).epsilon(1e-12));
}

TEST_CASE("folding displacement u = -2 x0 has negative determinant") {
  GridSpec g({8, 8, 8});
  VectorField disp(g);
  int x[3] = {0, 0, 0};
  for (std::size_t idx = 0; idx < g.voxels(); ++idx) {
    disp.values[idx * 3 + 0] = -2.0 * x[0];
    for (int a = 2; a >= 0; --a) {
      if (++x[a] < g.dims[a]) break;
      x[a] = 0;
    }
  }
  const ScalarField det = jacobian_determinant(disp);
  for (int i = 1; i < 7; ++i)
    CHECK(det.values[(i * 8 + 4) * 8 + 4] == doctest::Approx(-1.0));
}

TEST_CASE("gradient operator of a constant field is zero") {
  GridSpec g({5, 6});
  VectorField f(g, 2.5);
  for (const auto& axis : gradient_operator(f))
    for (double v : axis.values) CHECK(v == 0.0);
}

TEST_CASE("gradient operator of a ramp component is 1 in that slot") {
  GridSpec g({6, 6});
  VectorField f(g);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) f.values[(i * 6 + j) * 2 + 0] = i;
  const auto stack = gradient_operator(f);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 6; ++j) {
      CHECK(stack[0].values[(i * 6 + j) * 2 + 0] == doctest::Approx(1.0));
      CHECK(stack[0].values[(i * 6 + j) * 2 + 1] == doctest::Approx(0.0));
      CHECK(stack[1].values[(i * 6 + j) * 2 + 0] == doctest::Approx(0.0));
    }
  // trailing slab is zero
  for (int j = 0; j < 6; ++j)
    CHECK(stack[0].values[(5 * 6 + j) * 2 + 0] == 0.0);
}

TEST_CASE("stacked gradient squared-sum equals chi_squared") {
  Rng rng(7);
  GridSpec g({6, 7});
  VectorField f(g);
  for (auto& v : f.values) v = rng.normal();
  double acc = 0.0;
  for (const auto& axis : gradient_operator(f))
    for (double v : axis.values) acc += v * v;
  CHECK(acc == doctest::Approx(chi_squared(f)).epsilon(1e-12));
}

TEST_CASE("gradient operator is linear") {
  Rng rng(8);
  GridSpec g({6, 5});
  VectorField f1(g), f2(g), combo(g);
  for (auto& v : f1.values) v = rng.normal();
  for (auto& v : f2.values) v = rng.normal();
  const double a = 1.7, b = -0.4;
  for (std::size_t i = 0; i < combo.values.size(); ++i)
    combo.values[i] = a * f1.values[i] + b * f2.values[i];
  const auto s1 = gradient_operator(f1);
  const auto s2 = gradient_operator(f2);
  const auto sc = gradient_operator(combo);
  for (int axis = 0; axis < 2; ++axis)
    for (std::size_t i = 0; i < sc[axis].values.size(); ++i)
      CHECK(sc[axis].values[i] ==
            doctest::Approx(a * s1[axis].values[i] + b * s2[axis].values[i])
                .epsilon(1e-12));
}

TEST_SUITE_END();
