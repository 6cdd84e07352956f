#pragma once

// Oracle suites behind `thinslice check`, and the per-case drivers shared with
// the acceptance runner.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "thinslice/inference.hpp"

namespace thinslice {

struct SuiteResult {
  std::string name;
  int cases = 0;
  int failures = 0;
  double max_error = 0.0;
  bool passed() const { return failures == 0 && cases > 0; }
};

struct SelfCheckOptions {
  std::uint64_t seed = 1;
  /// Flips the sign of psi inside the distance-transform references.
  bool mutate_psi_sign = false;
  /// Multiplies every suite's default case count.
  double effort = 1.0;
};

std::vector<SuiteResult> run_selfcheck(const SelfCheckOptions& options);

/// Fixed-width table, one line per suite.
std::string format_selfcheck(const std::vector<SuiteResult>& results);

struct TreeCase {
  int parts = 0;
  int iterations = 0;
  int argmax_matches = 0;
  /// Largest |belief - max-marginal| after both are shifted to peak at 0.
  double max_value_error = 0.0;
};

/// Random tree (2..max_parts parts) on an 8x8 grid, bp mode for
/// diameter-many iterations against exact max-marginals.
TreeCase run_tree_case(int max_parts, std::mt19937_64& rng);

struct GapCase {
  bool tree = false;
  double optimum = 0.0;
  double decoded = 0.0;
  double gap() const { return optimum - decoded; }
};

/// T=2, K=2, 6x6 slice; `tree` drops the temporal offset so the graph has no
/// cycle. Compares the decoded configuration's objective with the exhaustive
/// maximum.
GapCase run_gap_case(bool tree, InferenceMode mode, std::mt19937_64& rng);

}  // namespace thinslice
