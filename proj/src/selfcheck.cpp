#include "thinslice/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "thinslice/distance_transform.hpp"
#include "thinslice/oracles.hpp"
#include "thinslice/warp.hpp"

namespace thinslice {

namespace {

int scaled(int base, double effort) {
  return std::max(1, static_cast<int>(std::lround(base * effort)));
}

SuiteResult dt_1d_suite(const SelfCheckOptions& opt, std::mt19937_64& rng) {
  SuiteResult r{"dt_1d"};
  const double sign = opt.mutate_psi_sign ? -1.0 : 1.0;
  std::uniform_int_distribution<int> len(1, 64);
  std::uniform_real_distribution<double> val(-5.0, 5.0);
  std::uniform_real_distribution<double> quad(kMinQuadratic, 2.0);
  std::uniform_real_distribution<double> lin(-2.0, 2.0);
  for (int c = 0; c < scaled(1000, opt.effort); ++c) {
    std::vector<double> score(static_cast<std::size_t>(len(rng)));
    for (double& v : score) v = val(rng);
    const double q = quad(rng);
    const double l = lin(rng);
    const Dt1dResult fast = gdt_1d(score, q, l);
    const Dt1dResult ref = oracle::exhaustive_dt_1d(score, q, l, sign);
    double err = 0.0;
    for (std::size_t i = 0; i < score.size(); ++i) {
      err = std::max(err, std::abs(fast.values[i] - ref.values[i]));
    }
    ++r.cases;
    r.max_error = std::max(r.max_error, err);
    if (err >= 1e-9 || fast.argmax != ref.argmax) ++r.failures;
  }
  return r;
}

SuiteResult dt_2d_suite(const SelfCheckOptions& opt, std::mt19937_64& rng) {
  SuiteResult r{"dt_2d"};
  const double sign = opt.mutate_psi_sign ? -1.0 : 1.0;
  std::uniform_real_distribution<double> val(-5.0, 5.0);
  std::uniform_real_distribution<double> quad(kMinQuadratic, 1.0);
  std::uniform_real_distribution<double> lin(-1.0, 1.0);
  for (int c = 0; c < scaled(20, opt.effort); ++c) {
    Heatmap score(16, 16);
    for (double& v : score.values()) v = val(rng);
    const Spring s{lin(rng), quad(rng), lin(rng), quad(rng)};
    const DtResult fast = gdt_2d(score, s);
    const DtResult ref = oracle::exhaustive_dt_2d(score, s, sign);
    double err = 0.0;
    for (std::size_t i = 0; i < score.size(); ++i) {
      err = std::max(err, std::abs(fast.values[i] - ref.values[i]));
    }
    ++r.cases;
    r.max_error = std::max(r.max_error, err);
    if (err >= 1e-9 || fast.argmax != ref.argmax) ++r.failures;
  }
  return r;
}

SuiteResult warp_suite(const SelfCheckOptions& opt, std::mt19937_64& rng) {
  SuiteResult r{"warp"};
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::uniform_real_distribution<double> disp(-3.0, 3.0);
  std::uniform_int_distribution<int> shift(-3, 3);
  auto record = [&](double err, double tol) {
    ++r.cases;
    r.max_error = std::max(r.max_error, err);
    if (!(err <= tol)) ++r.failures;
  };
  for (int c = 0; c < scaled(20, opt.effort); ++c) {
    const int h = 10, w = 12;
    Heatmap src(h, w);
    for (double& v : src.values()) v = val(rng);

    // Zero flow is the identity.
    const Heatmap same = warp_heatmap(src, FlowField(h, w));
    double err = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) err = std::max(err, std::abs(same[i] - src[i]));
    record(err, 0.0);

    // Integer flow is a shift with zeros entering from the border.
    const int sx = shift(rng), sy = shift(rng);
    const Heatmap shifted = warp_heatmap(src, FlowField(h, w, sx, sy));
    err = 0.0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double want = src.contains(x + sx, y + sy) ? src.at(x + sx, y + sy) : 0.0;
        err = std::max(err, std::abs(shifted.at(x, y) - want));
      }
    }
    record(err, 0.0);

    // Plan agrees with direct sampling and its transpose is the adjoint.
    FlowField flow(h, w);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) flow.set(x, y, disp(rng), disp(rng));
    }
    const WarpPlan plan(flow);
    const Heatmap fill_free = plan.apply(src);
    err = 0.0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        err = std::max(err, std::abs(fill_free.at(x, y) -
                                     bilinear_sample(src, x + flow.dx(x, y), y + flow.dy(x, y))));
      }
    }
    record(err, 0.0);

    Heatmap up(h, w);
    for (double& v : up.values()) v = val(rng);
    Heatmap back(h, w);
    plan.transpose_accumulate(up, back);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) {
      lhs += fill_free[i] * up[i];
      rhs += src[i] * back[i];
    }
    record(std::abs(lhs - rhs), 1e-9);
  }
  return r;
}

SuiteResult tree_suite(const SelfCheckOptions& opt, std::mt19937_64& rng) {
  SuiteResult r{"tree_exactness"};
  for (int c = 0; c < scaled(10, opt.effort); ++c) {
    const TreeCase tc = run_tree_case(6, rng);
    ++r.cases;
    r.max_error = std::max(r.max_error, tc.max_value_error);
    if (tc.argmax_matches != tc.parts || !(tc.max_value_error < 1e-9)) ++r.failures;
  }
  return r;
}

SuiteResult fd_suite(const SelfCheckOptions& opt, std::mt19937_64& rng) {
  SuiteResult r{"fd_gradient"};
  const PartGraph graph = build_graph(builtin_graph_spec("toy4"));
  for (int c = 0; c < scaled(1, opt.effort); ++c) {
    oracle::FdProblem p;
    p.unaries = oracle::random_unaries(3, 4, 12, 12, rng);
    p.flows = oracle::random_flows(3, 12, 12, 1.5, rng);
    p.params = oracle::random_consistent_params(graph, rng, 0.2, 0.2);
    p.inference.iterations = 2;
    p.truth = JointTrack(3, 4);
    std::uniform_int_distribution<int> coord(0, 11);
    for (int t = 0; t < 3; ++t) {
      for (int k = 0; k < 4; ++k) p.truth.at(t, k) = {double(coord(rng)), double(coord(rng)), true};
    }
    const auto samples = oracle::finite_difference_check(p, graph, 50, 1e-6, rng);
    int stable = 0;
    for (const oracle::FdSample& s : samples) {
      if (!s.stable) continue;
      ++stable;
      ++r.cases;
      const double rel = std::abs(s.analytic - s.numeric) /
                         std::max({std::abs(s.analytic), std::abs(s.numeric), 1e-3});
      r.max_error = std::max(r.max_error, rel);
      if (!oracle::fd_agrees(s, 1e-3, 1e-6)) ++r.failures;
    }
    if (stable * 100 < 95 * static_cast<int>(samples.size())) ++r.failures;
  }
  return r;
}

}  // namespace

TreeCase run_tree_case(int max_parts, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick_parts(2, max_parts);
  const PartGraph graph = build_graph(oracle::random_tree_spec(pick_parts(rng), rng));
  const SpringParams params = oracle::random_consistent_params(graph, rng);
  const HeatmapSequence unaries =
      oracle::random_unaries(1, graph.part_count(), 8, 8, rng);

  TreeCase tc;
  tc.parts = graph.part_count();
  tc.iterations = std::max(1, oracle::spatial_diameter(graph));
  InferenceConfig cfg{tc.iterations, InferenceMode::kBp, true};
  const InferenceResult res = infer_slice(unaries, FlowSet(1, {}), graph, params, cfg);
  const auto mm = oracle::tree_max_marginals(
      oracle::slice_factor_graph(unaries, FlowSet(1, {}), graph, params));
  for (int k = 0; k < tc.parts; ++k) {
    const Heatmap& belief = res.state.scores[static_cast<std::size_t>(k)];
    const std::vector<double>& m = mm[static_cast<std::size_t>(k)];
    const std::size_t bi = argmax_index(belief.values());
    const std::size_t mi = argmax_index(m);
    if (bi == mi) ++tc.argmax_matches;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double err = std::abs((belief[i] - belief[bi]) - (m[i] - m[mi]));
      tc.max_value_error = std::max(tc.max_value_error, err);
    }
  }
  return tc;
}

GapCase run_gap_case(bool tree, InferenceMode mode, std::mt19937_64& rng) {
  GraphSpec spec;
  spec.parts = {"a", "b"};
  spec.limb_edges = {{0, 1}};
  if (!tree) spec.temporal_offsets = {1};
  const PartGraph graph = build_graph(spec);
  const SpringParams params = oracle::random_consistent_params(graph, rng);
  const HeatmapSequence unaries = oracle::random_unaries(2, 2, 6, 6, rng);
  const FlowSet flows = oracle::random_flows(2, 6, 6, 1.0, rng);

  InferenceConfig cfg;
  cfg.mode = mode;
  const InferenceResult res = infer_slice(unaries, flows, graph, params, cfg);
  const oracle::FactorGraph fg = oracle::slice_factor_graph(unaries, flows, graph, params);
  std::vector<int> labels;
  for (int t = 0; t < 2; ++t) {
    for (int k = 0; k < 2; ++k) {
      const Joint& j = res.track.at(t, k);
      labels.push_back(static_cast<int>(j.y) * 6 + static_cast<int>(j.x));
    }
  }
  GapCase g;
  g.tree = tree;
  g.optimum = oracle::exhaustive_map(fg).score;
  g.decoded = fg.score(labels);
  return g;
}

std::vector<SuiteResult> run_selfcheck(const SelfCheckOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::vector<SuiteResult> out;
  out.push_back(dt_1d_suite(options, rng));
  out.push_back(dt_2d_suite(options, rng));
  out.push_back(warp_suite(options, rng));
  out.push_back(tree_suite(options, rng));
  out.push_back(fd_suite(options, rng));
  return out;
}

std::string format_selfcheck(const std::vector<SuiteResult>& results) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %6s %8s %12s  %s\n", "suite", "cases",
                "failures", "max_error", "status");
  out += line;
  for (const SuiteResult& r : results) {
    std::snprintf(line, sizeof line, "%-16s %6d %8d %12.3e  %s\n", r.name.c_str(),
                  r.cases, r.failures, r.max_error, r.passed() ? "PASS" : "FAIL");
    out += line;
  }
  return out;
}

}  // namespace thinslice
