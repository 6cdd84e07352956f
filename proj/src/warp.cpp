#include "thinslice/warp.hpp"

#include <cmath>

#include "thinslice/errors.hpp"

namespace thinslice {

WarpPlan::WarpPlan(const FlowField& flow)
    : height_(flow.height()), width_(flow.width()), taps_(flow.size()) {
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const std::size_t i = flow.index(x, y);
      const double sx = x + flow.dx(x, y);
      const double sy = y + flow.dy(x, y);
      if (!std::isfinite(sx) || !std::isfinite(sy)) {
        throw ArgumentError("non-finite flow vector");
      }
      Taps& t = taps_[i];
      const double fx = std::floor(sx);
      const double fy = std::floor(sy);
      if (fx < -1.0 || fy < -1.0 || fx >= width_ || fy >= height_) {
        t.outside = 1.0;
        continue;
      }
      const int x0 = static_cast<int>(fx);
      const int y0 = static_cast<int>(fy);
      const double ax = sx - fx;
      const double ay = sy - fy;
      const double wts[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay,
                             ax * ay};
      const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
      const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
      for (int c = 0; c < 4; ++c) {
        if (wts[c] == 0.0) continue;
        if (xs[c] >= 0 && ys[c] >= 0 && xs[c] < width_ && ys[c] < height_) {
          t.index[c] = ys[c] * width_ + xs[c];
          t.weight[c] = wts[c];
        } else {
          t.outside += wts[c];
        }
      }
    }
  }
}

Heatmap WarpPlan::apply(const Heatmap& source, double fill) const {
  if (source.height() != height_ || source.width() != width_) {
    throw ArgumentError("warp: map and flow dimensions differ");
  }
  Heatmap out(height_, width_);
  for (std::size_t i = 0; i < taps_.size(); ++i) {
    const Taps& t = taps_[i];
    double v = 0.0;
    for (int c = 0; c < 4; ++c) {
      if (t.index[c] >= 0) v += t.weight[c] * source[static_cast<std::size_t>(t.index[c])];
    }
    if (fill != 0.0 && t.outside != 0.0) v += fill * t.outside;
    out[i] = v;
  }
  return out;
}

double WarpPlan::transpose_accumulate(const Heatmap& upstream,
                                      Heatmap& grad_source) const {
  if (upstream.height() != height_ || upstream.width() != width_ ||
      !grad_source.same_shape(upstream)) {
    throw ArgumentError("warp backward: dimensions differ");
  }
  double grad_fill = 0.0;
  for (std::size_t i = 0; i < taps_.size(); ++i) {
    const double g = upstream[i];
    if (g == 0.0) continue;
    const Taps& t = taps_[i];
    for (int c = 0; c < 4; ++c) {
      if (t.index[c] >= 0) grad_source[static_cast<std::size_t>(t.index[c])] += t.weight[c] * g;
    }
    grad_fill += t.outside * g;
  }
  return grad_fill;
}

Heatmap warp_heatmap(const Heatmap& source, const FlowField& flow) {
  return WarpPlan(flow).apply(source, 0.0);
}

}  // namespace thinslice
