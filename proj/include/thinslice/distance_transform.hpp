#pragma once

// Generalized distance transform in max-sum form:
//   out[p] = max_q score[q] + psi(q - p)
// with psi the negative quadratic spring penalty. Linear time per axis via the
// upper envelope of parabolas; the winning source q is kept for backprop.

#include <array>
#include <span>
#include <vector>

#include "thinslice/graph.hpp"
#include "thinslice/tensor.hpp"

namespace thinslice {

struct Dt1dResult {
  std::vector<double> values;
  std::vector<int> argmax;
};

/// values[i] = max_j score[j] - w_quad (j-i)^2 - w_lin (j-i); ties go to the
/// smallest j. Throws ArgumentError when w_quad < kMinQuadratic.
Dt1dResult gdt_1d(std::span<const double> score, double w_quad, double w_lin);

/// Same contract by exhaustive O(n^2) scan.
Dt1dResult brute_force_1d(std::span<const double> score, double w_quad,
                          double w_lin);

struct DtResult {
  Heatmap values;
  /// Row-major index of the winning source pixel for every target pixel.
  std::vector<int> argmax;

  Pixel source(int x, int y) const {
    const int i = argmax[values.index(x, y)];
    return {i % values.width(), i / values.width()};
  }
};

/// Separable 2D transform: rows with the x coefficients, then columns with the
/// y coefficients. Ties resolve to the smallest row-major source index.
DtResult gdt_2d(const Heatmap& score, const Spring& spring);

struct DtGradient {
  Heatmap score;
  std::array<double, 4> spring{};
};

/// Sub-gradient of the transform: every target pixel routes its upstream
/// gradient to its stored source and contributes upstream * dpsi/dw.
DtGradient dt_backward(const DtResult& result, const Heatmap& upstream);

/// Accumulating form of dt_backward used by the slice backward pass.
void dt_backward_accumulate(const DtResult& result, const Heatmap& upstream,
                            Heatmap& grad_score, std::array<double, 4>& grad_spring);

}  // namespace thinslice
