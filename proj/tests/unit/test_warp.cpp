#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "thinslice/errors.hpp"
#include "thinslice/warp.hpp"

using namespace thinslice;

TEST_CASE("zero flow is the identity") {
  std::mt19937_64 rng(21);
  const Heatmap m = testing::random_map(6, 7, rng);
  CHECK(warp_heatmap(m, FlowField(6, 7)) == m);
  CHECK(WarpPlan(FlowField(6, 7)).apply(m, 3.0) == m);
}

TEST_CASE("uniform integer flow shifts columns and zero-fills") {
  Heatmap m(4, 4);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) m.at(x, y) = 10 * y + x + 1;
  }
  const Heatmap out = warp_heatmap(m, FlowField(4, 4, 2.0, 0.0));
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      CHECK(out.at(x, y) == (x + 2 < 4 ? m.at(x + 2, y) : 0.0));
    }
  }
  // with a fill value, off-grid taps take it instead of zero
  const Heatmap filled = WarpPlan(FlowField(4, 4, 2.0, 0.0)).apply(m, -7.0);
  CHECK(filled.at(3, 1) == -7.0);
  CHECK(filled.at(1, 1) == m.at(3, 1));
}

TEST_CASE("half-pixel flow averages neighbours; partial off-grid taps use the fill") {
  Heatmap m(1, 3, std::vector<double>{2.0, 4.0, 8.0});
  const WarpPlan plan(FlowField(1, 3, 0.5, 0.0));
  const Heatmap out = plan.apply(m, 1.0);
  CHECK(out.at(0, 0) == doctest::Approx(3.0));
  CHECK(out.at(1, 0) == doctest::Approx(6.0));
  CHECK(out.at(2, 0) == doctest::Approx(0.5 * 8.0 + 0.5 * 1.0));
}

TEST_CASE("warping transports a peak along the flow") {
  Heatmap m(12, 12);
  m.at(4, 5) = 1.0;
  // target pixel p reads the source at p + (-3, 2)
  const Heatmap out = warp_heatmap(m, FlowField(12, 12, -3.0, 2.0));
  const Peak p = argmax_2d(out);
  CHECK(p.x == 7);
  CHECK(p.y == 3);
  CHECK(p.value == 1.0);
}

TEST_CASE("plan matches pointwise bilinear sampling and its transpose is the adjoint") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> f(-3.0, 3.0);
  for (int rep = 0; rep < 10; ++rep) {
    FlowField flow(9, 8);
    for (int y = 0; y < 9; ++y) {
      for (int x = 0; x < 8; ++x) flow.set(x, y, f(rng), f(rng));
    }
    const Heatmap a = testing::random_map(9, 8, rng);
    const Heatmap b = testing::random_map(9, 8, rng);
    const WarpPlan plan(flow);
    const Heatmap wa = plan.apply(a);
    for (int y = 0; y < 9; ++y) {
      for (int x = 0; x < 8; ++x) {
        CHECK(wa.at(x, y) ==
              doctest::Approx(bilinear_sample(a, x + flow.dx(x, y), y + flow.dy(x, y))).epsilon(1e-12));
      }
    }
    CHECK(warp_heatmap(a, flow) == wa);

    // <W a, b> == <a, W^T b>
    Heatmap wtb(9, 8);
    const double fill_grad = plan.transpose_accumulate(b, wtb);
    double lhs = 0.0;
    double rhs = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      lhs += wa[i] * b[i];
      rhs += a[i] * wtb[i];
    }
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

    // the fill enters linearly with coefficient fill_grad
    const Heatmap wf = plan.apply(a, 1.0);
    double dfill = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dfill += (wf[i] - wa[i]) * b[i];
    CHECK(dfill == doctest::Approx(fill_grad).epsilon(1e-12));
  }
}

TEST_CASE("warp rejects bad input") {
  CHECK_THROWS_AS(warp_heatmap(Heatmap(3, 3), FlowField(3, 4)), ArgumentError);
  FlowField flow(2, 2);
  flow.set(1, 1, std::nan(""), 0.0);
  CHECK_THROWS_AS(WarpPlan{flow}, ArgumentError);
}
