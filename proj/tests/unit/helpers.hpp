#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "thinslice/tensor.hpp"

namespace testing {

/// Fresh per-test scratch directory under the system temp folder.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("thinslice_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline thinslice::Heatmap random_map(int h, int w, std::mt19937_64& rng,
                                     double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  thinslice::Heatmap m(h, w);
  for (double& v : m.values()) v = u(rng);
  return m;
}

}  // namespace testing
