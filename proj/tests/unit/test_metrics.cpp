#include <cmath>

#include "doctest.h"
#include "oracle/oracle.hpp"
#include "svreg/metrics.hpp"
#include "svreg/rng.hpp"

using namespace svreg;

namespace {

LabelField box_mask(const GridSpec& g, int i0, int i1, int j0, int j1,
                    std::int32_t label = 1) {
  LabelField f(g);
  for (int i = i0; i < i1; ++i)
    for (int j = j0; j < j1; ++j)
      f.labels[static_cast<std::size_t>(i) * g.dims[1] + j] = label;
  return f;
}

}  // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("dice: identical, disjoint, partial, both-empty") {
  GridSpec g({10, 10});
  const LabelField a = box_mask(g, 2, 4, 2, 4);  // 4 voxels
  CHECK(dice(a, a, 1) == doctest::Approx(1.0));
  const LabelField b = box_mask(g, 6, 8, 6, 8);
  CHECK(dice(a, b, 1) == doctest::Approx(0.0));
  const LabelField c = box_mask(g, 3, 5, 2, 4);  // overlaps a on 2 voxels
  CHECK(dice(a, c, 1) == doctest::Approx(0.5));
  CHECK(dice(a, b, 99) == doctest::Approx(1.0));  // both empty
  CHECK(dice(a, c, 1) == doctest::Approx(dice(c, a, 1)));
}

TEST_CASE("surface distance: identical and two points three voxels apart") {
  GridSpec g({12, 12});
  const LabelField a = box_mask(g, 3, 7, 3, 7);
  CHECK(average_surface_distance(a, a, 1) == doctest::Approx(0.0));

  LabelField p(g), q(g);
  p.labels[5 * 12 + 2] = 1;
  q.labels[5 * 12 + 5] = 1;
  CHECK(average_surface_distance(p, q, 1) == doctest::Approx(3.0));
  CHECK_THROWS(average_surface_distance(p, LabelField(g), 1));
}

TEST_CASE("surface distance of a translated square matches brute force") {
  GridSpec g({14, 14});
  const LabelField a = box_mask(g, 4, 9, 4, 9);
  const LabelField b = box_mask(g, 5, 10, 4, 9);  // shift by one voxel
  const double asd = average_surface_distance(a, b, 1);
  CHECK(asd > 0.0);
  CHECK(asd <= 1.0);
  CHECK(asd == doctest::Approx(oracle::brute_force_asd(a, b, 1)).epsilon(1e-12));
  CHECK(average_surface_distance(b, a, 1) == doctest::Approx(asd));
}

TEST_CASE("surface distance respects anisotropic spacing") {
  GridSpec g(std::vector<int>{12, 12}, std::vector<double>{2.0, 1.0});
  LabelField p(g), q(g);
  p.labels[5 * 12 + 2] = 1;
  q.labels[5 * 12 + 5] = 1;  // 3 voxels along axis 1 at 1 mm
  CHECK(average_surface_distance(p, q, 1) == doctest::Approx(3.0));
  LabelField r(g);
  r.labels[8 * 12 + 2] = 1;  // 3 voxels along axis 0 at 2 mm
  CHECK(average_surface_distance(p, r, 1) == doctest::Approx(6.0));
}

TEST_CASE("displacement uncertainty: degenerate, two-point, symmetries") {
  GridSpec g({8, 8});
  VectorField zero(g);
  std::vector<VectorField> same{zero, zero, zero};
  const ScalarField u0 = displacement_uncertainty(same);
  for (double v : u0.values) CHECK(v == doctest::Approx(0.0));

  VectorField two(g);
  two.values[0] = 2.0;  // magnitude 2 at voxel 0
  std::vector<VectorField> pair{zero, two};
  const ScalarField u1 = displacement_uncertainty(pair);
  CHECK(u1.values[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(u1.values[1] == doctest::Approx(0.0));

  std::vector<VectorField> swapped{two, zero};
  const ScalarField u2 = displacement_uncertainty(swapped);
  for (std::size_t i = 0; i < u1.size(); ++i)
    CHECK(u1.values[i] == doctest::Approx(u2.values[i]));

  CHECK_THROWS(displacement_uncertainty({zero}));
}

TEST_CASE("displacement uncertainty scales linearly with spacing") {
  Rng rng(7);
  GridSpec g1({8, 8}, 1.0);
  GridSpec g2({8, 8}, 2.5);
  VectorField a1(g1), b1(g1), a2(g2), b2(g2);
  for (std::size_t i = 0; i < a1.values.size(); ++i) {
    a1.values[i] = a2.values[i] = rng.normal();
    b1.values[i] = b2.values[i] = rng.normal();
  }
  const ScalarField u1 = displacement_uncertainty({a1, b1});
  const ScalarField u2 = displacement_uncertainty({a2, b2});
  for (std::size_t i = 0; i < u1.size(); ++i)
    CHECK(u2.values[i] == doctest::Approx(2.5 * u1.values[i]).epsilon(1e-12));
}

TEST_CASE("jacobian report: identity samples and a folding sample") {
  GridSpec g({8, 8});
  std::vector<VectorField> ident{VectorField(g), VectorField(g)};
  const JacobianReport r0 = jacobian_report(ident);
  CHECK(r0.mean_count == 0.0);
  CHECK(r0.std_count == 0.0);
  CHECK(r0.percent == 0.0);

  VectorField fold(g);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      fold.values[(static_cast<std::size_t>(i) * 8 + j) * 2 + 0] = -2.0 * i;
  const JacobianReport r1 = jacobian_report({fold});
  CHECK(r1.mean_count == doctest::Approx(64.0));  // every voxel folds
  CHECK(r1.percent == doctest::Approx(100.0));
  CHECK(r1.percent >= 0.0);
  CHECK(r1.percent <= 100.0);
}

TEST_CASE("pearson: exact affine relations and the textbook formula") {
  const std::vector<double> ud{0.2, 0.4, 0.9, 1.3, 2.0};
  std::vector<double> ul(5);
  for (int i = 0; i < 5; ++i) ul[i] = 2.0 * ud[i] + 1.0;
  CHECK(pearson(ud, ul) == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 0; i < 5; ++i) ul[i] = -ud[i];
  CHECK(pearson(ud, ul) == doctest::Approx(-1.0).epsilon(1e-12));

  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{2, 1, 4, 3, 5};
  // textbook formula as the oracle
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (int i = 0; i < 5; ++i) {
    sx += x[i]; sy += y[i];
    sxx += x[i] * x[i]; syy += y[i] * y[i]; sxy += x[i] * y[i];
  }
  const double want = (5 * sxy - sx * sy) /
                      std::sqrt((5 * sxx - sx * sx) * (5 * syy - sy * sy));
  CHECK(pearson(x, y) == doctest::Approx(want).epsilon(1e-12));

  const std::vector<double> flat{1, 1, 1, 1, 1};
  CHECK_THROWS(pearson(flat, y));
  CHECK_THROWS(pearson(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 2.0}));
}

TEST_CASE("structure report wires dice, asd and the uncertainty map together") {
  GridSpec g({16, 16});
  LabelField fixed(g), moving(g);
  for (int i = 3; i < 7; ++i)
    for (int j = 3; j < 7; ++j) fixed.labels[i * 16 + j] = 1;
  for (int i = 9; i < 14; ++i)
    for (int j = 9; j < 14; ++j) fixed.labels[i * 16 + j] = 2;
  for (int i = 4; i < 8; ++i)
    for (int j = 3; j < 7; ++j) moving.labels[i * 16 + j] = 1;
  for (int i = 9; i < 14; ++i)
    for (int j = 10; j < 15; ++j) moving.labels[i * 16 + j] = 2;

  Rng rng(9);
  std::vector<VectorField> disps;
  for (int s = 0; s < 4; ++s) {
    VectorField d(g);
    for (auto& v : d.values) v = 0.3 * rng.normal();
    disps.push_back(std::move(d));
  }
  const auto rows = structure_report(fixed, moving, disps);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.dice_mean >= 0.0);
    CHECK(r.dice_mean <= 1.0);
    CHECK(r.asd_mean >= 0.0);
    CHECK(r.u_d >= 0.0);
    CHECK(r.u_l >= 0.0);
  }
}

TEST_SUITE_END();
