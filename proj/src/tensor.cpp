#include "thinslice/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "thinslice/errors.hpp"

namespace thinslice {

namespace {

void check_dims(int height, int width) {
  if (height < 1 || width < 1) {
    throw ArgumentError("grid dimensions must be positive, got " +
                        std::to_string(height) + "x" + std::to_string(width));
  }
}

}  // namespace

Heatmap::Heatmap(int height, int width, double fill)
    : height_(height), width_(width) {
  check_dims(height, width);
  values_.assign(static_cast<std::size_t>(height) * width, fill);
}

Heatmap::Heatmap(int height, int width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
  check_dims(height, width);
  if (values_.size() != static_cast<std::size_t>(height) * width) {
    throw ArgumentError("heatmap value count does not match " +
                        std::to_string(height) + "x" + std::to_string(width));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw ArgumentError("heatmap values must be finite");
  }
}

HeatmapSequence::HeatmapSequence(int frames, int parts, int height, int width,
                                 double fill)
    : frames_(frames), parts_(parts), height_(height), width_(width) {
  if (frames < 1 || parts < 1) {
    throw ArgumentError("sequence needs at least one frame and one part");
  }
  maps_.assign(static_cast<std::size_t>(frames) * parts,
               Heatmap(height, width, fill));
}

FlowField::FlowField(int height, int width, double dx, double dy)
    : height_(height), width_(width) {
  check_dims(height, width);
  dx_.assign(static_cast<std::size_t>(height) * width, dx);
  dy_.assign(static_cast<std::size_t>(height) * width, dy);
}

FlowSet::FlowSet(int frames, std::vector<FlowField> fields)
    : frames_(frames), fields_(std::move(fields)) {
  if (frames < 1) throw ArgumentError("flow set needs at least one frame");
  const std::size_t max_pairs = 2 * static_cast<std::size_t>(frames - 1);
  if (fields_.size() > max_pairs) {
    throw ArgumentError("flow set holds " + std::to_string(fields_.size()) +
                        " fields but a " + std::to_string(frames) +
                        "-frame slice has only " + std::to_string(max_pairs) +
                        " ordered adjacent pairs");
  }
  for (const auto& f : fields_) {
    if (f.height() != fields_.front().height() ||
        f.width() != fields_.front().width()) {
      throw ArgumentError("flow fields of one set must share dimensions");
    }
  }
}

std::size_t FlowSet::slot(int target, int source) {
  if (std::abs(target - source) != 1) {
    throw ArgumentError("flows are stored for adjacent frames only");
  }
  const int lower = std::min(target, source);
  return 2 * static_cast<std::size_t>(lower) + (target < source ? 1 : 0);
}

const FlowField* FlowSet::find(int target, int source) const {
  const std::size_t s = slot(target, source);
  return s < fields_.size() ? &fields_[s] : nullptr;
}

const FlowField& FlowSet::get(int target, int source) const {
  if (const FlowField* f = find(target, source)) return *f;
  throw ConfigError("missing flow for frame pair target " +
                    std::to_string(target) + " <- source " +
                    std::to_string(source));
}

JointTrack::JointTrack(int frames, int parts) : frames_(frames), parts_(parts) {
  if (frames < 1 || parts < 1) {
    throw ArgumentError("track needs at least one frame and one part");
  }
  joints_.assign(static_cast<std::size_t>(frames) * parts, Joint{});
}

double bilinear_sample(const Heatmap& map, double x, double y) {
  if (!std::isfinite(x) || !std::isfinite(y)) {
    throw ArgumentError("bilinear_sample: non-finite coordinate");
  }
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  // Far outside: avoid int overflow on the casts below.
  if (fx < -1.0 || fy < -1.0 || fx >= map.width() || fy >= map.height()) {
    return 0.0;
  }
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const double ax = x - fx;
  const double ay = y - fy;
  double out = 0.0;
  const double wts[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay,
                         ax * ay};
  const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
  const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
  for (int i = 0; i < 4; ++i) {
    if (wts[i] != 0.0 && map.contains(xs[i], ys[i])) {
      out += wts[i] * map.at(xs[i], ys[i]);
    }
  }
  return out;
}

std::size_t argmax_index(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

Peak argmax_2d(const Heatmap& map) {
  const std::size_t i = argmax_index(map.values());
  return {static_cast<int>(i % map.width()), static_cast<int>(i / map.width()),
          map[i]};
}

Heatmap shift_normalize(const Heatmap& map) {
  Heatmap out = map;
  const double peak = map[argmax_index(map.values())];
  for (double& v : out.values()) v -= peak;
  return out;
}

}  // namespace thinslice
