#include <doctest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "thinslice/errors.hpp"
#include "thinslice/tensor.hpp"

using namespace thinslice;

TEST_CASE("heatmap geometry and row-major layout") {
  Heatmap m(3, 4, 2.5);
  CHECK(m.height() == 3);
  CHECK(m.width() == 4);
  CHECK(m.size() == 12);
  m.at(3, 1) = 7.0;
  CHECK(m[1 * 4 + 3] == 7.0);
  CHECK(m.contains(3, 2));
  CHECK_FALSE(m.contains(4, 0));
  CHECK_THROWS_AS(Heatmap(0, 3), ArgumentError);
  CHECK_THROWS_AS(Heatmap(2, 2, std::vector<double>(3)), ArgumentError);
  CHECK_THROWS_AS(Heatmap(1, 1, std::vector<double>{std::nan("")}), ArgumentError);
}

TEST_CASE("bilinear_sample") {
  SUBCASE("constant map") {
    const Heatmap m(5, 6, 5.0);
    CHECK(bilinear_sample(m, 2.3, 1.7) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(bilinear_sample(m, 0.0, 0.0) == 5.0);
  }
  SUBCASE("integer centers reproduce the stored pixel") {
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 20; ++rep) {
      const Heatmap m = testing::random_map(7, 9, rng);
      for (int y = 0; y < 7; ++y) {
        for (int x = 0; x < 9; ++x) CHECK(bilinear_sample(m, x, y) == m.at(x, y));
      }
    }
  }
  SUBCASE("hand-evaluated 2x2 interpolation") {
    // 0.25 * (0 + 1 + 2 + 3)
    const Heatmap m(2, 2, std::vector<double>{0, 1, 2, 3});
    CHECK(bilinear_sample(m, 0.5, 0.5) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(bilinear_sample(m, 1.0, 0.25) == doctest::Approx(1.5).epsilon(1e-15));
  }
  SUBCASE("zero padding off the grid") {
    const Heatmap m(3, 3, 4.0);
    CHECK(bilinear_sample(m, -1.0, 1.0) == 0.0);
    CHECK(bilinear_sample(m, 1.0, 3.0) == 0.0);
    CHECK(bilinear_sample(m, 100.0, -50.0) == 0.0);
    // halfway between a padded zero and a stored 4
    CHECK(bilinear_sample(m, -0.5, 1.0) == doctest::Approx(2.0));
    CHECK(bilinear_sample(m, 2.5, 2.5) == doctest::Approx(1.0));
  }
  SUBCASE("non-finite coordinates are rejected") {
    const Heatmap m(2, 2);
    CHECK_THROWS_AS(bilinear_sample(m, std::nan(""), 0.0), ArgumentError);
    CHECK_THROWS_AS(bilinear_sample(m, 0.0, std::numeric_limits<double>::infinity()),
                    ArgumentError);
  }
}

TEST_CASE("argmax_2d") {
  Heatmap m(5, 6);
  m.at(3, 2) = 1.0;
  const Peak p = argmax_2d(m);
  CHECK(p.x == 3);
  CHECK(p.y == 2);
  CHECK(p.value == 1.0);

  const Peak u = argmax_2d(Heatmap(4, 4, 0.7));
  CHECK(u.x == 0);
  CHECK(u.y == 0);
  CHECK(u.value == 0.7);

  // ties go to the smallest row-major index
  Heatmap t(3, 3);
  t.at(2, 0) = 1.0;
  t.at(0, 1) = 1.0;
  CHECK(argmax_2d(t).x == 2);
  CHECK(argmax_2d(t).y == 0);

  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> coarse(0, 5);
  for (int rep = 0; rep < 1000; ++rep) {
    Heatmap r(8, 8);
    // coarse values make ties common
    for (double& v : r.values()) v = coarse(rng);
    std::size_t best = 0;
    for (std::size_t i = 1; i < r.size(); ++i) {
      if (r[i] > r[best]) best = i;
    }
    const Peak q = argmax_2d(r);
    REQUIRE(static_cast<std::size_t>(q.y * 8 + q.x) == best);
    REQUIRE(q.value == r[best]);
  }
}

TEST_CASE("shift_normalize") {
  Heatmap m(2, 3, std::vector<double>{1.0, 7.2, -3.0, 0.5, 2.0, 7.0});
  const Heatmap n = shift_normalize(m);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(n[i] == doctest::Approx(m[i] - 7.2));
  CHECK(argmax_2d(n).value == 0.0);

  const Heatmap z(2, 2, std::vector<double>{0.0, -1.0, -2.0, -0.5});
  CHECK(shift_normalize(z) == z);

  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    const Heatmap r = testing::random_map(6, 5, rng, -10, 10);
    const Heatmap once = shift_normalize(r);
    CHECK(shift_normalize(once) == once);
    CHECK(argmax_2d(once).x == argmax_2d(r).x);
    CHECK(argmax_2d(once).y == argmax_2d(r).y);
    CHECK(argmax_2d(once).value == 0.0);
  }
}

TEST_CASE("heatmap sequence layout") {
  HeatmapSequence s(2, 3, 4, 5, 1.0);
  CHECK(s.maps().size() == 6);
  s.at(1, 2).at(4, 3) = 9.0;
  CHECK(s.maps()[5].at(4, 3) == 9.0);
  CHECK_THROWS_AS(HeatmapSequence(0, 1, 1, 1), ArgumentError);
}

TEST_CASE("flow set slots and lookups") {
  CHECK(FlowSet::slot(1, 0) == 0);
  CHECK(FlowSet::slot(0, 1) == 1);
  CHECK(FlowSet::slot(3, 2) == 4);
  CHECK(FlowSet::slot(2, 3) == 5);
  CHECK_THROWS_AS(FlowSet::slot(0, 2), ArgumentError);

  std::vector<FlowField> fields{FlowField(2, 2, 1.0, 0.0), FlowField(2, 2, -1.0, 0.0)};
  const FlowSet set(3, fields);
  CHECK(set.get(1, 0).dx(0, 0) == 1.0);
  CHECK(set.get(0, 1).dx(1, 1) == -1.0);
  CHECK(set.find(2, 1) == nullptr);
  try {
    (void)set.get(2, 1);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("target 2 <- source 1") != std::string::npos);
  }
  CHECK_THROWS_AS(FlowSet(2, std::vector<FlowField>(3, FlowField(1, 1))), ArgumentError);
}
