#pragma once

// Dense grids shared by every stage: per-part confidence maps, stacks of them
// over a thin slice of frames, dense flow fields and joint tracks.

#include <cstddef>
#include <span>
#include <vector>

namespace thinslice {

struct Pixel {
  int x = 0;
  int y = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Single H x W confidence map, row-major.
class Heatmap {
 public:
  Heatmap() = default;
  Heatmap(int height, int width, double fill = 0.0);
  Heatmap(int height, int width, std::vector<double> values);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double at(int x, int y) const { return values_[index(x, y)]; }
  double& at(int x, int y) { return values_[index(x, y)]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  bool same_shape(const Heatmap& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  friend bool operator==(const Heatmap&, const Heatmap&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> values_;
};

/// T x K maps of identical size; frame-major then part-major.
class HeatmapSequence {
 public:
  HeatmapSequence() = default;
  HeatmapSequence(int frames, int parts, int height, int width,
                  double fill = 0.0);

  int frames() const { return frames_; }
  int parts() const { return parts_; }
  int height() const { return height_; }
  int width() const { return width_; }

  const Heatmap& at(int frame, int part) const {
    return maps_[static_cast<std::size_t>(frame * parts_ + part)];
  }
  Heatmap& at(int frame, int part) {
    return maps_[static_cast<std::size_t>(frame * parts_ + part)];
  }
  std::span<const Heatmap> maps() const { return maps_; }
  std::span<Heatmap> maps() { return maps_; }

  bool same_shape(const HeatmapSequence& other) const {
    return frames_ == other.frames_ && parts_ == other.parts_ &&
           height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const HeatmapSequence&,
                         const HeatmapSequence&) = default;

 private:
  int frames_ = 0;
  int parts_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<Heatmap> maps_;
};

/// Dense displacement field. For a pixel p of the target frame, (dx, dy) at p
/// points at the corresponding location in the source frame.
class FlowField {
 public:
  FlowField() = default;
  FlowField(int height, int width, double dx = 0.0, double dy = 0.0);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return dx_.size(); }

  double dx(int x, int y) const { return dx_[index(x, y)]; }
  double dy(int x, int y) const { return dy_[index(x, y)]; }
  void set(int x, int y, double dx, double dy) {
    dx_[index(x, y)] = dx;
    dy_[index(x, y)] = dy;
  }
  std::span<const double> dx_values() const { return dx_; }
  std::span<const double> dy_values() const { return dy_; }
  std::span<double> dx_values() { return dx_; }
  std::span<double> dy_values() { return dy_; }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  friend bool operator==(const FlowField&, const FlowField&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> dx_;
  std::vector<double> dy_;
};

/// Flows between adjacent frames of a slice, both directions per pair.
///
/// Storage order, for t = 0 .. T-2:
///   index 2t     target t+1, source t    (aligns frame t onto frame t+1)
///   index 2t + 1 target t,   source t+1  (aligns frame t+1 onto frame t)
/// A set may hold fewer than 2(T-1) fields; lookups past the end are missing.
class FlowSet {
 public:
  FlowSet() = default;
  FlowSet(int frames, std::vector<FlowField> fields);

  int frames() const { return frames_; }
  std::span<const FlowField> fields() const { return fields_; }
  bool empty() const { return fields_.empty(); }

  static std::size_t slot(int target, int source);

  /// Null when the pair is not stored. Frames must be adjacent.
  const FlowField* find(int target, int source) const;
  /// Throws ConfigError naming the pair when absent.
  const FlowField& get(int target, int source) const;

  friend bool operator==(const FlowSet&, const FlowSet&) = default;

 private:
  int frames_ = 0;
  std::vector<FlowField> fields_;
};

struct Joint {
  double x = 0.0;
  double y = 0.0;
  bool visible = true;
  friend bool operator==(const Joint&, const Joint&) = default;
};

/// T x K joint positions in pixel coordinates.
class JointTrack {
 public:
  JointTrack() = default;
  JointTrack(int frames, int parts);

  int frames() const { return frames_; }
  int parts() const { return parts_; }
  const Joint& at(int frame, int part) const {
    return joints_[static_cast<std::size_t>(frame * parts_ + part)];
  }
  Joint& at(int frame, int part) {
    return joints_[static_cast<std::size_t>(frame * parts_ + part)];
  }

  friend bool operator==(const JointTrack&, const JointTrack&) = default;

 private:
  int frames_ = 0;
  int parts_ = 0;
  std::vector<Joint> joints_;
};

struct Peak {
  int x = 0;
  int y = 0;
  double value = 0.0;
};

/// Bilinear interpolation with zero padding outside the grid.
double bilinear_sample(const Heatmap& map, double x, double y);

/// Location of the maximum; ties go to the smallest row-major index.
Peak argmax_2d(const Heatmap& map);

/// Row-major index of the maximum with the same tie rule.
std::size_t argmax_index(std::span<const double> values);

/// Subtracts the maximum so the result peaks at exactly zero.
Heatmap shift_normalize(const Heatmap& map);

}  // namespace thinslice
