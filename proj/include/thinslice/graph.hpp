#pragma once

// Part graph with spatial (limb + symmetric) and temporal edges, and the
// spring weights attached to each directed edge.

#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace thinslice {

/// Smallest admissible quadratic spring coefficient.
inline constexpr double kMinQuadratic = 1e-4;
inline constexpr double kInitQuadratic = 0.01;
inline constexpr double kInitLinear = 0.0;

/// Declarative topology, as read from JSON.
struct GraphSpec {
  std::vector<std::string> parts;
  std::vector<std::pair<int, int>> limb_edges;
  std::vector<std::pair<int, int>> symmetric_pairs;
  std::vector<int> temporal_offsets;
};

GraphSpec graph_spec_from_json(const nlohmann::json& doc);
nlohmann::json graph_spec_to_json(const GraphSpec& spec);

/// "penn13", "toy2" or "toy4". Throws SpecError for unknown names.
GraphSpec builtin_graph_spec(std::string_view name);

enum class EdgeKind { kSpatial, kTemporal };

/// One learnable spring: a directed spatial edge, or a (part, offset,
/// direction) temporal edge shared by every frame pair of the slice.
struct ParamSlot {
  EdgeKind kind = EdgeKind::kSpatial;
  int from = 0;
  int to = 0;
  /// Temporal only: +o sends earlier -> later frame, -o the reverse.
  int offset = 0;
};

/// A directed edge of the graph unrolled over a slice of frames.
struct EdgeInstance {
  EdgeKind kind = EdgeKind::kSpatial;
  int slot = 0;
  int from_frame = 0;
  int from_part = 0;
  int to_frame = 0;
  int to_part = 0;
  /// Index of the opposite-direction instance in the same unrolled list.
  int reverse = 0;
};

struct SpatialEdge {
  int a = 0;
  int b = 0;
  bool symmetric = false;
};

class PartGraph {
 public:
  int part_count() const { return static_cast<int>(part_names_.size()); }
  const std::vector<std::string>& part_names() const { return part_names_; }
  /// Undirected; limb edges first, then symmetric pairs, in spec order.
  const std::vector<SpatialEdge>& spatial_edges() const { return spatial_; }
  const std::vector<int>& temporal_offsets() const { return offsets_; }
  const std::vector<ParamSlot>& slots() const { return slots_; }
  int slot_count() const { return static_cast<int>(slots_.size()); }

  /// Slot of the spatial edge instance a -> b; -1 if a and b are not linked.
  int spatial_slot(int from, int to) const;
  /// Slot for temporal messages of `part` across `offset` frames; positive
  /// offsets run forward in time.
  int temporal_slot(int part, int offset) const;
  /// Mirror part under a symmetric pair, or -1.
  int symmetric_twin(int part) const;
  int part_index(std::string_view name) const;

  /// Every directed edge instance of a slice of `frames` frames: spatial
  /// instances frame by frame, then temporal instances.
  std::vector<EdgeInstance> unroll(int frames) const;

  friend PartGraph build_graph(const GraphSpec& spec);

 private:
  std::vector<std::string> part_names_;
  std::vector<SpatialEdge> spatial_;
  std::vector<int> offsets_;
  std::vector<ParamSlot> slots_;
};

/// Validates `spec` and derives directed edges and parameter slots.
PartGraph build_graph(const GraphSpec& spec);

/// Deformation weights multiplying d = [dx, dx^2, dy, dy^2]. The spring enters
/// the score as psi = -(w . d); quadratic coefficients are positive penalties.
struct Spring {
  double x_lin = kInitLinear;
  double x_quad = kInitQuadratic;
  double y_lin = kInitLinear;
  double y_quad = kInitQuadratic;

  std::array<double, 4> as_array() const { return {x_lin, x_quad, y_lin, y_quad}; }
  static Spring from_array(const std::array<double, 4>& w) {
    return {w[0], w[1], w[2], w[3]};
  }
  /// psi for a source-minus-target displacement.
  double psi(double dx, double dy) const {
    return -(x_lin * dx + x_quad * dx * dx + y_lin * dy + y_quad * dy * dy);
  }
  /// The spring seen from the other end: same potential, negated displacement.
  Spring mirrored() const { return {-x_lin, x_quad, -y_lin, y_quad}; }

  friend bool operator==(const Spring&, const Spring&) = default;
};

/// d psi / d w at a displacement, in as_array() order.
inline std::array<double, 4> psi_gradient(double dx, double dy) {
  return {-dx, -dx * dx, -dy, -dy * dy};
}

/// One Spring per ParamSlot of the graph it was created for.
struct SpringParams {
  std::vector<Spring> springs;
  friend bool operator==(const SpringParams&, const SpringParams&) = default;
};

SpringParams init_spring_params(const PartGraph& graph);

/// Floors the quadratic coefficients at kMinQuadratic; throws NumericError on
/// non-finite entries.
SpringParams clamp_spring_params(const SpringParams& params);

nlohmann::json params_to_json(const PartGraph& graph, const SpringParams& params);
SpringParams params_from_json(const PartGraph& graph, const nlohmann::json& doc);

}  // namespace thinslice
