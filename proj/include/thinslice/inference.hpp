#pragma once

// Spatio-temporal max-sum message passing over a thin slice.
//
// Each iteration computes, for every directed edge k -> i, the message
//   m_ki(p) = max_q score_k(q) + psi_ki(q - p)
// from the previous iteration's scores (temporal children are first aligned to
// the recipient's frame by flow warping), then sets
//   score_i = unary_i + sum of incoming messages
// and optionally shifts each score map to peak at zero.

#include <memory>
#include <vector>

#include "thinslice/distance_transform.hpp"
#include "thinslice/graph.hpp"
#include "thinslice/tensor.hpp"
#include "thinslice/warp.hpp"

namespace thinslice {

enum class InferenceMode {
  /// Every neighbour's message is computed from its full score.
  kPaper,
  /// Max-product exclusion: the recipient's own previous message is removed
  /// from the sender's score first. Exact on trees.
  kBp,
};

struct InferenceConfig {
  int iterations = 3;
  InferenceMode mode = InferenceMode::kPaper;
  bool normalize = true;
};

/// Unrolled edges, neighbourhoods and warp operators for one slice geometry.
class SliceModel {
 public:
  /// Throws ConfigError when a temporal edge needs a flow the set lacks.
  SliceModel(const PartGraph& graph, int frames, int height, int width,
             const FlowSet& flows);

  int frames() const { return frames_; }
  int parts() const { return parts_; }
  int height() const { return height_; }
  int width() const { return width_; }
  int node_count() const { return frames_ * parts_; }
  int node(int frame, int part) const { return frame * parts_ + part; }

  const std::vector<EdgeInstance>& edges() const { return edges_; }
  /// Edge indices whose recipient is the node.
  const std::vector<int>& incoming(int node) const { return incoming_[node]; }
  /// Warps aligning the sender's frame to the recipient's, in application
  /// order. Empty for spatial edges.
  const std::vector<const WarpPlan*>& warp_chain(int edge) const {
    return chains_[edge];
  }

 private:
  int frames_;
  int parts_;
  int height_;
  int width_;
  std::vector<EdgeInstance> edges_;
  std::vector<std::vector<int>> incoming_;
  std::vector<std::unique_ptr<WarpPlan>> plans_;
  std::vector<std::vector<const WarpPlan*>> chains_;
};

/// What one iteration keeps for the backward pass.
struct IterationRecord {
  /// Per edge: the transform whose values are the message.
  std::vector<DtResult> transforms;
  /// Per edge: pixel of the sender map that supplied the off-grid fill of a
  /// temporal warp, -1 for spatial edges.
  std::vector<int> fill_source;
  /// Per node: peak subtracted by normalization, -1 when normalization is off.
  std::vector<int> peak;
};

struct MessageState {
  int iteration = 0;
  InferenceConfig config;
  /// Per node (frame-major), the current score maps.
  std::vector<Heatmap> scores;
  /// history[n] holds iteration n + 1.
  std::vector<IterationRecord> history;

  const Heatmap& message(int edge) const {
    return history.back().transforms[static_cast<std::size_t>(edge)].values;
  }
  /// Every stored discrete choice (DT sources, fill sources, peaks). Two
  /// forward runs with equal signatures share one linear region.
  std::vector<int> signature() const;
};

/// Iteration-0 state: scores are the unaries.
MessageState initial_state(const HeatmapSequence& unaries,
                           const InferenceConfig& config);

/// Sender input for `edge` (previous scores, bp exclusion, warps) followed by
/// the distance transform. `fill_source` receives the fill pixel or -1.
DtResult compute_message(const MessageState& state, const SliceModel& model,
                         int edge, const SpringParams& params,
                         int* fill_source = nullptr);

/// One synchronous update of every message, then of every score.
MessageState run_iteration(const MessageState& state, const SliceModel& model,
                           const SpringParams& params,
                           const HeatmapSequence& unaries);

struct InferenceResult {
  MessageState state;
  JointTrack track;
};

/// Runs config.iterations iterations and decodes the per-map argmax.
InferenceResult infer_slice(const HeatmapSequence& unaries, const FlowSet& flows,
                            const PartGraph& graph, const SpringParams& params,
                            const InferenceConfig& config);
InferenceResult infer_slice(const HeatmapSequence& unaries,
                            const SliceModel& model, const SpringParams& params,
                            const InferenceConfig& config);

/// Per-map argmax of the scores.
JointTrack decode(const std::vector<Heatmap>& scores, int frames, int parts);

/// Slice objective: unaries at the joints, spatial springs per frame, and a
/// temporal spring between p_later and p_earlier carried forward along the
/// flow. Each undirected edge uses the parameters of its forward direction
/// (a -> b as listed, earlier -> later frame).
double score_slice(const JointTrack& track, const HeatmapSequence& unaries,
                   const FlowSet& flows, const PartGraph& graph,
                   const SpringParams& params);

}  // namespace thinslice
