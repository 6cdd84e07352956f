#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "thinslice/errors.hpp"
#include "thinslice/inference.hpp"
#include "thinslice/oracles.hpp"

using namespace thinslice;

namespace {

InferenceConfig config(int iterations, InferenceMode mode, bool normalize) {
  InferenceConfig c;
  c.iterations = iterations;
  c.mode = mode;
  c.normalize = normalize;
  return c;
}

FlowSet zero_flows(int frames, int h, int w) {
  std::vector<FlowField> f(2 * static_cast<std::size_t>(frames - 1), FlowField(h, w));
  return FlowSet(frames, f);
}

}  // namespace

TEST_CASE("a graph without edges returns the unaries") {
  std::mt19937_64 rng(31);
  const PartGraph g = build_graph({{"a", "b", "c"}, {}, {}, {}});
  const HeatmapSequence u = oracle::random_unaries(2, 3, 5, 6, rng);
  const InferenceResult raw =
      infer_slice(u, FlowSet(2, {}), g, init_spring_params(g), config(3, InferenceMode::kPaper, false));
  for (int t = 0; t < 2; ++t) {
    for (int k = 0; k < 3; ++k) {
      CHECK(raw.state.scores[static_cast<std::size_t>(t * 3 + k)] == u.at(t, k));
      const Peak p = argmax_2d(u.at(t, k));
      CHECK(raw.track.at(t, k) == Joint{double(p.x), double(p.y), true});
    }
  }
  const InferenceResult norm =
      infer_slice(u, FlowSet(2, {}), g, init_spring_params(g), config(2, InferenceMode::kBp, true));
  CHECK(norm.state.scores[4] == shift_normalize(u.at(1, 1)));
}

TEST_CASE("a stiff spatial spring passes the sender's score through") {
  std::mt19937_64 rng(32);
  const PartGraph g = build_graph({{"root", "tip"}, {{0, 1}}, {}, {}});
  const HeatmapSequence u = oracle::random_unaries(1, 2, 6, 6, rng);
  SpringParams p = init_spring_params(g);
  for (Spring& s : p.springs) s = {0.0, 1e6, 0.0, 1e6};
  const InferenceResult r = infer_slice(u, FlowSet(1, {}), g, p, config(1, InferenceMode::kPaper, false));
  for (std::size_t i = 0; i < 36; ++i) {
    CHECK(r.state.message(0)[i] == u.at(0, 0)[i]);
    CHECK(r.state.scores[1][i] == doctest::Approx(u.at(0, 1)[i] + u.at(0, 0)[i]).epsilon(1e-14));
  }
}

TEST_CASE("a stiff temporal spring under zero flow carries the neighbour frame") {
  std::mt19937_64 rng(33);
  const PartGraph g = build_graph({{"a"}, {}, {}, {1}});
  const HeatmapSequence u = oracle::random_unaries(2, 1, 5, 5, rng);
  SpringParams p = init_spring_params(g);
  for (Spring& s : p.springs) s = {0.0, 1e6, 0.0, 1e6};
  const InferenceResult r =
      infer_slice(u, zero_flows(2, 5, 5), g, p, config(1, InferenceMode::kPaper, false));
  for (std::size_t i = 0; i < 25; ++i) {
    CHECK(r.state.scores[0][i] == doctest::Approx(u.at(0, 0)[i] + u.at(1, 0)[i]).epsilon(1e-14));
    CHECK(r.state.scores[1][i] == doctest::Approx(u.at(0, 0)[i] + u.at(1, 0)[i]).epsilon(1e-14));
  }
}

TEST_CASE("modes agree on the first iteration") {
  std::mt19937_64 rng(34);
  const PartGraph g = build_graph(builtin_graph_spec("toy4"));
  const HeatmapSequence u = oracle::random_unaries(3, 4, 8, 8, rng);
  const FlowSet f = oracle::random_flows(3, 8, 8, 1.5, rng);
  const SpringParams p = oracle::random_consistent_params(g, rng);
  for (bool normalize : {false, true}) {
    const InferenceResult a = infer_slice(u, f, g, p, config(1, InferenceMode::kPaper, normalize));
    const InferenceResult b = infer_slice(u, f, g, p, config(1, InferenceMode::kBp, normalize));
    CHECK(a.state.scores == b.state.scores);
    CHECK(a.track == b.track);
  }
  // and differ afterwards on a loopy graph
  const InferenceResult a = infer_slice(u, f, g, p, config(3, InferenceMode::kPaper, false));
  const InferenceResult b = infer_slice(u, f, g, p, config(3, InferenceMode::kBp, false));
  CHECK(a.state.scores != b.state.scores);
}

TEST_CASE("normalization does not change decoded joints") {
  std::mt19937_64 rng(35);
  const PartGraph g = build_graph(builtin_graph_spec("toy4"));
  for (int rep = 0; rep < 10; ++rep) {
    const HeatmapSequence u = oracle::random_unaries(3, 4, 7, 9, rng);
    const FlowSet f = oracle::random_flows(3, 7, 9, 1.5, rng);
    const SpringParams p = oracle::random_consistent_params(g, rng);
    for (InferenceMode mode : {InferenceMode::kPaper, InferenceMode::kBp}) {
      const InferenceResult on = infer_slice(u, f, g, p, config(1, mode, true));
      const InferenceResult off = infer_slice(u, f, g, p, config(1, mode, false));
      CHECK(on.track == off.track);
      for (std::size_t n = 0; n < on.state.scores.size(); ++n) {
        const Heatmap& a = on.state.scores[n];
        const Heatmap& b = off.state.scores[n];
        const double shift = b[0] - a[0];
        for (std::size_t i = 0; i < a.size(); ++i) {
          REQUIRE(b[i] - a[i] == doctest::Approx(shift).epsilon(1e-9));
        }
      }
      const InferenceResult on3 = infer_slice(u, f, g, p, config(3, mode, true));
      const InferenceResult off3 = infer_slice(u, f, g, p, config(3, mode, false));
      CHECK(on3.track == off3.track);
    }
  }
}

TEST_CASE("bp-mode scores are exact max-marginals on trees") {
  std::mt19937_64 rng(36);
  for (int rep = 0; rep < 8; ++rep) {
    const GraphSpec spec = oracle::random_tree_spec(2 + rep % 4, rng);
    const PartGraph g = build_graph(spec);
    const HeatmapSequence u = oracle::random_unaries(1, g.part_count(), 4, 5, rng);
    const SpringParams p = oracle::random_consistent_params(g, rng);
    const int iters = std::max(1, oracle::spatial_diameter(g));
    const InferenceResult r = infer_slice(u, FlowSet(1, {}), g, p, config(iters, InferenceMode::kBp, false));
    const oracle::FactorGraph fg = oracle::slice_factor_graph(u, FlowSet(1, {}), g, p);
    const auto mm = oracle::tree_max_marginals(fg);
    for (int k = 0; k < g.part_count(); ++k) {
      for (std::size_t i = 0; i < 20; ++i) {
        REQUIRE(std::abs(r.state.scores[static_cast<std::size_t>(k)][i] - mm[static_cast<std::size_t>(k)][i]) < 1e-9);
      }
    }
    // decoding exact max-marginals yields the MAP labelling
    const oracle::MapResult map = oracle::exhaustive_map(fg);
    CHECK(score_slice(r.track, u, FlowSet(1, {}), g, p) == doctest::Approx(map.score).epsilon(1e-12));
  }
}

TEST_CASE("missing flows are reported by frame pair") {
  const PartGraph g = build_graph(builtin_graph_spec("toy2"));
  std::vector<FlowField> f{FlowField(4, 4)};
  try {
    SliceModel(g, 2, 4, 4, FlowSet(2, f));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("target 0 <- source 1") != std::string::npos);
  }
  CHECK_THROWS_AS(SliceModel(g, 2, 4, 4, FlowSet(2, {})), ConfigError);
  CHECK_THROWS_AS(SliceModel(g, 2, 4, 5, zero_flows(2, 4, 4)), ConfigError);
  // one frame needs no flow at all
  CHECK_NOTHROW(SliceModel(g, 1, 4, 4, FlowSet(1, {})));
}

TEST_CASE("longer temporal offsets chain one warp per frame step") {
  GraphSpec spec{{"a"}, {}, {}, {1, 2}};
  const PartGraph g = build_graph(spec);
  const SliceModel m(g, 4, 3, 3, zero_flows(4, 3, 3));
  for (std::size_t e = 0; e < m.edges().size(); ++e) {
    const EdgeInstance& ei = m.edges()[e];
    CHECK(m.warp_chain(static_cast<int>(e)).size() ==
          static_cast<std::size_t>(std::abs(ei.to_frame - ei.from_frame)));
  }
}

TEST_CASE("score_slice") {
  const PartGraph g = build_graph(builtin_graph_spec("toy2"));
  HeatmapSequence u(2, 2, 6, 6);
  u.at(0, 0).at(1, 2) = 0.5;
  u.at(0, 1).at(3, 2) = 0.25;
  u.at(1, 0).at(2, 3) = 1.0;
  u.at(1, 1).at(4, 3) = 2.0;
  JointTrack track(2, 2);
  track.at(0, 0) = {1, 2, true};
  track.at(0, 1) = {3, 2, true};
  track.at(1, 0) = {2, 3, true};
  track.at(1, 1) = {4, 3, true};

  SUBCASE("unary only") {
    SpringParams zero = init_spring_params(g);
    for (Spring& s : zero.springs) s = {0, 0, 0, 0};
    CHECK(score_slice(track, u, zero_flows(2, 6, 6), g, zero) == 3.75);
  }
  SUBCASE("stiff temporal spring charges w_quad per unit of displacement per axis") {
    SpringParams p = init_spring_params(g);
    for (Spring& s : p.springs) s = {0, 0, 0, 0};
    const double wq = 1e6;
    p.springs[static_cast<std::size_t>(g.temporal_slot(0, 1))] = {0, wq, 0, wq};
    // the root moves (1, 1) between frames under zero flow
    CHECK(score_slice(track, u, zero_flows(2, 6, 6), g, p) == 3.75 - 2 * wq);
    // a flow matching the motion removes the penalty
    std::vector<FlowField> f{FlowField(6, 6, -1, -1), FlowField(6, 6, 1, 1)};
    CHECK(score_slice(track, u, FlowSet(2, f), g, p) == 3.75);
  }
  SUBCASE("spatial springs use the forward direction") {
    SpringParams p = init_spring_params(g);
    for (Spring& s : p.springs) s = {0, 0, 0, 0};
    p.springs[static_cast<std::size_t>(g.spatial_slot(0, 1))] = {0.5, 0.1, 0, 0};
    p.springs[static_cast<std::size_t>(g.spatial_slot(1, 0))] = {9, 9, 9, 9};
    // root - tip = (-2, 0) in both frames
    const double psi = -(0.5 * -2 + 0.1 * 4);
    CHECK(score_slice(track, u, zero_flows(2, 6, 6), g, p) == doctest::Approx(3.75 + 2 * psi));
  }
  SUBCASE("off-grid joints are rejected") {
    track.at(1, 1) = {6, 0, true};
    CHECK_THROWS_AS(score_slice(track, u, zero_flows(2, 6, 6), g, init_spring_params(g)),
                    ArgumentError);
  }
}

TEST_CASE("inference is deterministic and keeps one record per iteration") {
  std::mt19937_64 rng(37);
  const PartGraph g = build_graph(builtin_graph_spec("penn13"));
  const HeatmapSequence u = oracle::random_unaries(3, 13, 10, 10, rng);
  const FlowSet f = oracle::random_flows(3, 10, 10, 2.0, rng);
  const SpringParams p = oracle::random_consistent_params(g, rng);
  const InferenceResult a = infer_slice(u, f, g, p, config(3, InferenceMode::kPaper, true));
  const InferenceResult b = infer_slice(u, f, g, p, config(3, InferenceMode::kPaper, true));
  CHECK(a.state.scores == b.state.scores);
  CHECK(a.state.signature() == b.state.signature());
  CHECK(a.state.history.size() == 3);
  CHECK(a.state.iteration == 3);

  // stepwise iteration reproduces infer_slice
  const SliceModel m(g, 3, 10, 10, f);
  MessageState s = initial_state(u, config(3, InferenceMode::kPaper, true));
  for (int i = 0; i < 3; ++i) s = run_iteration(s, m, p, u);
  CHECK(s.scores == a.state.scores);

  CHECK_THROWS_AS(initial_state(u, config(0, InferenceMode::kPaper, true)), ArgumentError);
  SpringParams short_params = p;
  short_params.springs.pop_back();
  CHECK_THROWS_AS(infer_slice(u, f, g, short_params, config(1, InferenceMode::kPaper, true)),
                  ArgumentError);
}
