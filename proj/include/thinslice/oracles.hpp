#pragma once

// Slow reference implementations used by the tests and the `check` command:
// exhaustive distance transforms, exact max-marginals and slice maxima on small
// discrete models, random instance generators and finite-difference checks.
// None of them share code with the fast paths they verify.

#include <cstdint>
#include <random>
#include <vector>

#include "thinslice/graph.hpp"
#include "thinslice/inference.hpp"
#include "thinslice/learning.hpp"
#include "thinslice/tensor.hpp"

namespace thinslice::oracle {

/// out[i] = max_j score[j] + sign * psi(j - i); smallest j wins ties.
/// `psi_sign` = -1 gives a deliberately broken reference for mutation runs.
Dt1dResult exhaustive_dt_1d(std::span<const double> score, double w_quad,
                            double w_lin, double psi_sign = 1.0);

/// Exhaustive 2D maximization over every source pixel.
DtResult exhaustive_dt_2d(const Heatmap& score, const Spring& spring,
                          double psi_sign = 1.0);

/// Discrete pairwise model: `states` labels per variable, one unary table per
/// variable and dense pair tables indexed [x_u * states + x_v].
struct FactorGraph {
  int states = 0;
  std::vector<std::vector<double>> unary;
  struct Factor {
    int u = 0;
    int v = 0;
    std::vector<double> table;
  };
  std::vector<Factor> factors;

  int variables() const { return static_cast<int>(unary.size()); }
  double score(const std::vector<int>& labels) const;
};

/// The slice objective over pixel labels; variable t * K + k is part k in
/// frame t, label y * W + x.
FactorGraph slice_factor_graph(const HeatmapSequence& unaries,
                               const FlowSet& flows, const PartGraph& graph,
                               const SpringParams& params);

struct MapResult {
  double score = 0.0;
  std::vector<int> labels;
};

/// Enumerates every labelling. Throws ArgumentError above `max_configs`.
MapResult exhaustive_map(const FactorGraph& fg, double max_configs = 5e8);

/// Max-marginals by enumeration (small models only).
std::vector<std::vector<double>> exhaustive_max_marginals(
    const FactorGraph& fg, double max_configs = 5e8);

/// Max-marginals by two-pass dynamic programming with full O(S^2) pair
/// maximization; the factor graph must be a forest.
std::vector<std::vector<double>> tree_max_marginals(const FactorGraph& fg);

/// Single-frame tree over `parts` parts: part i > 0 hangs off a random earlier
/// part. No symmetric pairs, no temporal offsets.
GraphSpec random_tree_spec(int parts, std::mt19937_64& rng);

/// Longest shortest path, in edges, of the spatial graph.
int spatial_diameter(const PartGraph& graph);

/// Random springs where every reverse slot mirrors its forward slot, so both
/// message directions see the same potential.
SpringParams random_consistent_params(const PartGraph& graph,
                                      std::mt19937_64& rng,
                                      double max_linear = 0.3,
                                      double max_quadratic = 0.3);

HeatmapSequence random_unaries(int frames, int parts, int height, int width,
                               std::mt19937_64& rng);

/// Smooth random flows: a random translation of up to `max_shift` pixels per
/// pair plus a small per-pixel perturbation; reverse fields negate it.
FlowSet random_flows(int frames, int height, int width, double max_shift,
                     std::mt19937_64& rng);

struct FdSample {
  /// Spring slot and component, or -1 when the coordinate is a unary pixel.
  int slot = -1;
  int component = 0;
  /// Unary map (frame-major) and pixel, when slot == -1.
  int map = -1;
  int pixel = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  /// The forward argmax choices and the hinge active set are unchanged at
  /// both +h and -h.
  bool stable = false;
};

/// |a - f| <= rel * max(|a|, |f|) + abs_floor.
bool fd_agrees(const FdSample& s, double rel, double abs_floor);

struct FdProblem {
  HeatmapSequence unaries;
  FlowSet flows;
  JointTrack truth;
  SpringParams params;
  InferenceConfig inference;
  double hinge_radius = 2.0;
};

/// Central differences of the total hinge loss with respect to every spring
/// coordinate and `unary_samples` random unary pixels.
std::vector<FdSample> finite_difference_check(const FdProblem& problem,
                                              const PartGraph& graph,
                                              int unary_samples, double step,
                                              std::mt19937_64& rng);

}  // namespace thinslice::oracle
