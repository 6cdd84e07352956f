#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "thinslice/distance_transform.hpp"
#include "thinslice/errors.hpp"
#include "thinslice/oracles.hpp"

using namespace thinslice;

namespace {

constexpr double kTol = 1e-9;

// Independent O(n^2) reference written out here rather than taken from the
// library.
std::vector<double> reference_1d(const std::vector<double>& s, double wq, double wl) {
  std::vector<double> out(s.size(), -INFINITY);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double d = static_cast<double>(j) - static_cast<double>(i);
      out[i] = std::max(out[i], s[j] - wq * d * d - wl * d);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("gdt_1d worked example") {
  const std::vector<double> s{0, 0, 10, 0};
  const Dt1dResult r = gdt_1d(s, 1.0, 0.0);
  CHECK(r.values == std::vector<double>{6, 9, 10, 9});
  CHECK(r.argmax == std::vector<int>{2, 2, 2, 2});
}

TEST_CASE("gdt_1d edge cases") {
  SUBCASE("single element") {
    const std::vector<double> s{-3.5};
    const Dt1dResult r = gdt_1d(s, 0.2, 5.0);
    CHECK(r.values == std::vector<double>{-3.5});
    CHECK(r.argmax == std::vector<int>{0});
  }
  SUBCASE("stiff spring pins every source to its target") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> s(40);
    for (double& v : s) v = u(rng);
    const Dt1dResult r = gdt_1d(s, 1e6, 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(r.argmax[i] == static_cast<int>(i));
      CHECK(r.values[i] == s[i]);
    }
  }
  SUBCASE("constant score ties go to the smallest index") {
    const std::vector<double> s(6, 2.0);
    const Dt1dResult r = gdt_1d(s, kMinQuadratic, 0.0);
    for (int i = 0; i < 6; ++i) {
      CHECK(r.argmax[static_cast<std::size_t>(i)] == i);
      CHECK(r.values[static_cast<std::size_t>(i)] == 2.0);
    }
    // equal parabolas at i +- 1 around a flat plateau
    const std::vector<double> t{1.0, 0.0, 1.0};
    CHECK(gdt_1d(t, 0.5, 0.0).argmax[1] == 0);
  }
  SUBCASE("invalid weights") {
    const std::vector<double> s{1, 2};
    CHECK_THROWS_AS(gdt_1d(s, 5e-5, 0.0), ArgumentError);
    CHECK_THROWS_AS(gdt_1d(s, std::nan(""), 0.0), ArgumentError);
    CHECK_THROWS_AS(gdt_1d(std::vector<double>{}, 1.0, 0.0), ArgumentError);
  }
}

TEST_CASE("gdt_1d matches brute force on random instances") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> len(1, 64);
  std::uniform_real_distribution<double> val(-5, 5);
  std::uniform_real_distribution<double> wq(kMinQuadratic, 2.0);
  std::uniform_real_distribution<double> wl(-1.0, 1.0);
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> s(static_cast<std::size_t>(len(rng)));
    for (double& v : s) v = val(rng);
    const double q = wq(rng);
    const double l = wl(rng);
    const Dt1dResult fast = gdt_1d(s, q, l);
    const Dt1dResult slow = oracle::exhaustive_dt_1d(s, q, l);
    const std::vector<double> ref = reference_1d(s, q, l);
    for (std::size_t i = 0; i < s.size(); ++i) {
      REQUIRE(std::abs(fast.values[i] - ref[i]) < kTol);
      REQUIRE(fast.argmax[i] == slow.argmax[i]);
      // the stored source actually attains the value
      const double d = fast.argmax[i] - static_cast<double>(i);
      REQUIRE(std::abs(s[static_cast<std::size_t>(fast.argmax[i])] - q * d * d - l * d -
                       fast.values[i]) < kTol);
    }
    const Dt1dResult lib_brute = brute_force_1d(s, q, l);
    REQUIRE(lib_brute.argmax == slow.argmax);
  }
}

TEST_CASE("gdt_2d matches exhaustive maximization") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> wq(kMinQuadratic, 1.0);
  std::uniform_real_distribution<double> wl(-0.5, 0.5);
  for (int rep = 0; rep < 25; ++rep) {
    const Heatmap s = testing::random_map(9 + rep % 4, 13 - rep % 5, rng, -3, 3);
    const Spring w{wl(rng), wq(rng), wl(rng), wq(rng)};
    const DtResult fast = gdt_2d(s, w);
    const DtResult slow = oracle::exhaustive_dt_2d(s, w);
    for (int y = 0; y < s.height(); ++y) {
      for (int x = 0; x < s.width(); ++x) {
        REQUIRE(std::abs(fast.values.at(x, y) - slow.values.at(x, y)) < kTol);
        REQUIRE(fast.source(x, y) == slow.source(x, y));
        const Pixel q = fast.source(x, y);
        REQUIRE(std::abs(s.at(q.x, q.y) + w.psi(q.x - x, q.y - y) - fast.values.at(x, y)) <
                kTol);
      }
    }
  }
}

TEST_CASE("gdt_2d properties") {
  std::mt19937_64 rng(13);
  const Spring w{0.1, 0.3, -0.2, 0.05};
  const Heatmap s = testing::random_map(10, 10, rng);
  const DtResult base = gdt_2d(s, w);

  SUBCASE("dominates the input") {
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(base.values[i] >= s[i] - kTol);
  }
  SUBCASE("shift equivariance") {
    Heatmap shifted = s;
    for (double& v : shifted.values()) v += 4.25;
    const DtResult r = gdt_2d(shifted, w);
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(r.values[i] == doctest::Approx(base.values[i] + 4.25).epsilon(1e-12));
    }
    CHECK(r.argmax == base.argmax);
  }
  SUBCASE("monotone in the score") {
    Heatmap bigger = s;
    std::uniform_real_distribution<double> u(0, 1);
    for (double& v : bigger.values()) v += u(rng);
    const DtResult r = gdt_2d(bigger, w);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(r.values[i] >= base.values[i] - kTol);
  }
  SUBCASE("mirrored spring on a mirrored map") {
    Heatmap flipped(10, 10);
    for (int y = 0; y < 10; ++y) {
      for (int x = 0; x < 10; ++x) flipped.at(9 - x, 9 - y) = s.at(x, y);
    }
    const DtResult r = gdt_2d(flipped, w.mirrored());
    for (int y = 0; y < 10; ++y) {
      for (int x = 0; x < 10; ++x) {
        CHECK(r.values.at(9 - x, 9 - y) == doctest::Approx(base.values.at(x, y)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("dt_backward routes gradients to the stored sources") {
  std::mt19937_64 rng(14);
  const Spring w{0.2, 0.15, -0.1, 0.25};
  const Heatmap s = testing::random_map(8, 11, rng, -2, 2);
  const Heatmap up = testing::random_map(8, 11, rng);
  const DtResult r = gdt_2d(s, w);
  const DtGradient g = dt_backward(r, up);

  // mass conservation: every target sends all of its gradient somewhere
  double in = 0.0;
  double out = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    in += up[i];
    out += g.score[i];
  }
  CHECK(out == doctest::Approx(in).epsilon(1e-12));

  std::array<double, 4> expect{};
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 11; ++x) {
      const Pixel q = r.source(x, y);
      const auto d = psi_gradient(q.x - x, q.y - y);
      for (int c = 0; c < 4; ++c) expect[static_cast<std::size_t>(c)] += up.at(x, y) * d[static_cast<std::size_t>(c)];
    }
  }
  for (int c = 0; c < 4; ++c) {
    CHECK(g.spring[static_cast<std::size_t>(c)] ==
          doctest::Approx(expect[static_cast<std::size_t>(c)]).epsilon(1e-12));
  }

  // central differences of <up, values> away from argmax switches
  auto objective = [&](const Heatmap& score, const Spring& spring) {
    const DtResult rr = gdt_2d(score, spring);
    double acc = 0.0;
    for (std::size_t i = 0; i < score.size(); ++i) acc += up[i] * rr.values[i];
    return acc;
  };
  const double h = 1e-5;
  for (int c = 0; c < 4; ++c) {
    auto wp = w.as_array();
    auto wm = w.as_array();
    wp[static_cast<std::size_t>(c)] += h;
    wm[static_cast<std::size_t>(c)] -= h;
    if (gdt_2d(s, Spring::from_array(wp)).argmax != r.argmax ||
        gdt_2d(s, Spring::from_array(wm)).argmax != r.argmax) {
      continue;
    }
    const double fd = (objective(s, Spring::from_array(wp)) - objective(s, Spring::from_array(wm))) / (2 * h);
    CHECK(std::abs(fd - g.spring[static_cast<std::size_t>(c)]) <=
          1e-4 * std::max(std::abs(fd), 1.0));
  }
  for (std::size_t i = 0; i < s.size(); i += 7) {
    Heatmap sp = s;
    Heatmap sm = s;
    sp[i] += h;
    sm[i] -= h;
    if (gdt_2d(sp, w).argmax != r.argmax || gdt_2d(sm, w).argmax != r.argmax) continue;
    const double fd = (objective(sp, w) - objective(sm, w)) / (2 * h);
    CHECK(std::abs(fd - g.score[i]) <= 1e-4 * std::max(std::abs(fd), 1.0));
  }

  CHECK_THROWS_AS(dt_backward(r, Heatmap(8, 10)), ArgumentError);
}
