#include <doctest.h>

#include <limits>
#include <set>

#include "thinslice/errors.hpp"
#include "thinslice/graph.hpp"

using namespace thinslice;

TEST_CASE("minimal graph has one undirected, two directed spatial edges") {
  const PartGraph g = build_graph({{"a", "b"}, {{0, 1}}, {}, {}});
  CHECK(g.part_count() == 2);
  CHECK(g.spatial_edges().size() == 1);
  CHECK(g.slot_count() == 2);
  const auto edges = g.unroll(1);
  REQUIRE(edges.size() == 2);
  CHECK(edges[0].from_part == 0);
  CHECK(edges[0].to_part == 1);
  CHECK(edges[1].from_part == 1);
  CHECK(edges[1].to_part == 0);
  CHECK(edges[0].reverse == 1);
  CHECK(edges[1].reverse == 0);
  CHECK(g.spatial_slot(0, 1) == 0);
  CHECK(g.spatial_slot(1, 0) == 1);
}

TEST_CASE("built-in penn13 topology") {
  const PartGraph g = build_graph(builtin_graph_spec("penn13"));
  CHECK(g.part_count() == 13);
  CHECK(g.spatial_edges().size() == 12 + 6);
  CHECK(g.temporal_offsets() == std::vector<int>{1});
  CHECK(g.symmetric_twin(g.part_index("l_wrist")) == g.part_index("r_wrist"));
  CHECK(g.symmetric_twin(g.part_index("r_ankle")) == g.part_index("l_ankle"));
  CHECK(g.symmetric_twin(g.part_index("head")) == -1);
  // 36 spatial slots, then one forward/backward pair per part
  CHECK(g.slot_count() == 36 + 26);
  CHECK(build_graph(builtin_graph_spec("toy4")).part_count() == 4);
  CHECK(build_graph(builtin_graph_spec("toy2")).part_count() == 2);
  CHECK_THROWS_AS(builtin_graph_spec("penn14"), SpecError);
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS_AS(build_graph({{"a", "b", "c"}, {{0, 5}}, {}, {}}), SpecError);
  CHECK_THROWS_AS(build_graph({{"a", "b"}, {{0, -1}}, {}, {}}), SpecError);
  CHECK_THROWS_AS(build_graph({{"a", "b"}, {{1, 1}}, {}, {}}), SpecError);
  CHECK_THROWS_AS(build_graph({{"a", "b"}, {{0, 1}, {1, 0}}, {}, {}}), SpecError);
  CHECK_THROWS_AS(build_graph({{"a", "b"}, {{0, 1}}, {{0, 1}}, {}}), SpecError);
  CHECK_THROWS_AS(build_graph({{"a", "b"}, {}, {}, {0}}), SpecError);
  CHECK_THROWS_AS(build_graph({{"a", "b"}, {}, {}, {1, 1}}), SpecError);
  CHECK_THROWS_AS(build_graph({{}, {}, {}, {}}), SpecError);
}

TEST_CASE("unrolled edges pair up and temporal instances cover valid frame pairs") {
  GraphSpec spec = builtin_graph_spec("toy4");
  spec.temporal_offsets = {1, 2};
  const PartGraph g = build_graph(spec);
  const int frames = 4;
  const auto edges = g.unroll(frames);
  std::set<std::tuple<int, int, int>> temporal;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const EdgeInstance& a = edges[e];
    const EdgeInstance& b = edges[static_cast<std::size_t>(a.reverse)];
    CHECK(b.reverse == static_cast<int>(e));
    CHECK(a.from_frame == b.to_frame);
    CHECK(a.from_part == b.to_part);
    CHECK(a.kind == b.kind);
    if (a.kind == EdgeKind::kSpatial) {
      CHECK(a.from_frame == a.to_frame);
      CHECK(a.slot == g.spatial_slot(a.from_part, a.to_part));
    } else {
      CHECK(a.from_part == a.to_part);
      const int o = a.to_frame - a.from_frame;
      CHECK(a.slot == g.temporal_slot(a.from_part, o));
      if (o > 0) temporal.insert({a.from_part, a.from_frame, o});
    }
  }
  // every (part, t, o) with t + o < T appears once
  CHECK(temporal.size() == static_cast<std::size_t>(4 * ((frames - 1) + (frames - 2))));
  CHECK(edges.size() == static_cast<std::size_t>(frames * 4 * 2 + 2 * temporal.size()));
}

TEST_CASE("init_spring_params follows the initialization rule") {
  const PartGraph g = build_graph(builtin_graph_spec("toy4"));
  const SpringParams p = init_spring_params(g);
  REQUIRE(p.springs.size() == static_cast<std::size_t>(g.slot_count()));
  for (const Spring& s : p.springs) {
    CHECK(s.x_quad == 0.01);
    CHECK(s.y_quad == 0.01);
    CHECK(s.x_lin == 0.0);
    CHECK(s.y_lin == 0.0);
    CHECK(s.x_quad >= kMinQuadratic);
  }
}

TEST_CASE("clamp_spring_params floors only the quadratic terms") {
  SpringParams p{{Spring{-2.0, -0.3, 0.7, 0.5}}};
  const SpringParams c = clamp_spring_params(p);
  CHECK(c.springs[0].x_quad == kMinQuadratic);
  CHECK(c.springs[0].y_quad == 0.5);
  CHECK(c.springs[0].x_lin == -2.0);
  CHECK(c.springs[0].y_lin == 0.7);
  p.springs[0].y_lin = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(clamp_spring_params(p), NumericError);
  p.springs[0].y_lin = std::nan("");
  CHECK_THROWS_AS(clamp_spring_params(p), NumericError);
}

TEST_CASE("spring sign convention") {
  const Spring s{0.5, 2.0, -1.0, 3.0};
  // psi = -(0.5*2 + 2*4 - 1*(-1) + 3*1)
  CHECK(s.psi(2.0, -1.0) == doctest::Approx(-(1.0 + 8.0 + 1.0 + 3.0)));
  CHECK(s.mirrored().psi(-2.0, 1.0) == doctest::Approx(s.psi(2.0, -1.0)));
  const auto g = psi_gradient(2.0, -1.0);
  CHECK(g == std::array<double, 4>{-2.0, -4.0, 1.0, -1.0});
}

TEST_CASE("params and graph specs survive JSON round trips") {
  GraphSpec spec = builtin_graph_spec("penn13");
  spec.temporal_offsets = {1, 2};
  const PartGraph g = build_graph(spec);
  SpringParams p = init_spring_params(g);
  for (std::size_t i = 0; i < p.springs.size(); ++i) {
    p.springs[i] = {0.1 * i - 1.3, 0.02 + 1.0 / (i + 3), -0.7 / (i + 1), 1e-4 + i * 1e-3};
  }
  const auto doc = params_to_json(g, p);
  CHECK(doc["edges"].size() == p.springs.size());
  CHECK(params_from_json(g, nlohmann::json::parse(doc.dump())) == p);

  const GraphSpec back = graph_spec_from_json(nlohmann::json::parse(graph_spec_to_json(spec).dump()));
  CHECK(back.parts == spec.parts);
  CHECK(back.limb_edges == spec.limb_edges);
  CHECK(back.symmetric_pairs == spec.symmetric_pairs);
  CHECK(back.temporal_offsets == spec.temporal_offsets);

  auto missing = doc;
  missing["edges"].erase(missing["edges"].begin());
  CHECK_THROWS_AS(params_from_json(g, missing), SpecError);
  auto dup = doc;
  dup["edges"].push_back(doc["edges"][0]);
  CHECK_THROWS_AS(params_from_json(g, dup), SpecError);
  CHECK_THROWS_AS(graph_spec_from_json(nlohmann::json::parse(R"({"parts": ["a"], "edges": []})")),
                  SpecError);
}
