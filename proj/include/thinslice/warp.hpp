#pragma once

// Backward warping of confidence maps along dense flow, precomputed as a
// sparse bilinear operator so the transpose is available for backprop.

#include <array>
#include <vector>

#include "thinslice/tensor.hpp"

namespace thinslice {

class WarpPlan {
 public:
  explicit WarpPlan(const FlowField& flow);

  int height() const { return height_; }
  int width() const { return width_; }

  /// out[p] = sum of in-grid bilinear taps at p + flow(p); the weight of taps
  /// that fall off the grid is given `fill`.
  Heatmap apply(const Heatmap& source, double fill = 0.0) const;

  /// Adds W^T upstream to grad_source and returns d out / d fill summed
  /// against upstream.
  double transpose_accumulate(const Heatmap& upstream, Heatmap& grad_source) const;

 private:
  struct Taps {
    std::array<int, 4> index{-1, -1, -1, -1};
    std::array<double, 4> weight{};
    double outside = 0.0;
  };

  int height_ = 0;
  int width_ = 0;
  std::vector<Taps> taps_;
};

/// output[p] = bilinear_sample(source, p + flow(p)); zero off the grid.
Heatmap warp_heatmap(const Heatmap& source, const FlowField& flow);

}  // namespace thinslice
