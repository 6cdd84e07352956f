#pragma once

// Losses on final score maps, the backward pass through message passing, and
// the SGD loop that fits spring weights.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "thinslice/graph.hpp"
#include "thinslice/inference.hpp"
#include "thinslice/tensor.hpp"

namespace thinslice {

/// Ideal belief maps: a Gaussian of peak 1 at each visible joint, 0 elsewhere
/// (and all 0 for invisible joints).
HeatmapSequence render_ground_truth(const JointTrack& track, int height,
                                    int width, double sigma = 1.5);

struct LossResult {
  double loss = 0.0;
  HeatmapSequence gradient;
};

/// sum (b - b*)^2, gradient 2 (b - b*).
LossResult l2_loss(const HeatmapSequence& pred, const HeatmapSequence& truth);

/// sum max(0, 1 - b I) with I = +1 within `radius` (inclusive) of the joint
/// and -1 elsewhere. Invisible joints contribute nothing.
LossResult hinge_loss(const HeatmapSequence& pred, const JointTrack& truth,
                      double radius);

struct GradientBundle {
  /// One 4-vector per parameter slot, in Spring::as_array() order.
  std::vector<std::array<double, 4>> params;
  HeatmapSequence unaries;
};

/// Reverse pass over the retained iterations of `state`. `loss_grad` is the
/// gradient of the loss with respect to the final scores.
GradientBundle backward_slice(const MessageState& state,
                              const HeatmapSequence& loss_grad,
                              const SliceModel& model, const SpringParams& params);
GradientBundle backward_slice(const MessageState& state,
                              const HeatmapSequence& loss_grad,
                              const PartGraph& graph, const SpringParams& params,
                              const FlowSet& flows);

/// Copy of the state's score maps as a sequence.
HeatmapSequence scores_as_sequence(const MessageState& state, int frames,
                                   int parts);

enum class LossKind { kL2, kHinge };

struct TrainConfig {
  double learning_rate = 1e-4;
  double lr_decay_factor = 3.0;
  /// Steps between learning-rate drops.
  int decay_interval = 5000;
  int epochs = 3;
  double hinge_radius = 2.0;
  LossKind loss = LossKind::kHinge;
  double gt_sigma = 1.5;
  /// Divide loss and gradients by the number of map pixels in the slice.
  bool mean_over_pixels = true;
  std::uint64_t seed = 0;
  InferenceConfig inference;
};

struct TrainingSlice {
  HeatmapSequence unaries;
  FlowSet flows;
  JointTrack track;
};

/// Loss of one slice under the configured loss, with its gradient on the
/// final scores. Both honour mean_over_pixels.
LossResult slice_loss(const MessageState& state, const TrainingSlice& slice,
                      const TrainConfig& config);

struct TrainStep {
  int step = 0;
  double loss = 0.0;
  double learning_rate = 0.0;
};

struct TrainResult {
  SpringParams params;
  std::vector<TrainStep> trace;
};

/// One slice per step, epoch order shuffled by config.seed. After each step
/// params <- clamp(params - lr * grad). Throws NumericError naming the step
/// when the loss stops being finite.
TrainResult sgd_train(const std::vector<TrainingSlice>& dataset,
                      const PartGraph& graph, const TrainConfig& config,
                      const SpringParams& initial);
TrainResult sgd_train(const std::vector<TrainingSlice>& dataset,
                      const PartGraph& graph, const TrainConfig& config);

/// "step,loss,lr" CSV.
std::string loss_trace_csv(const std::vector<TrainStep>& trace);

/// Means over consecutive windows of `window` steps (last partial window
/// dropped unless it is the only one).
std::vector<double> windowed_means(const std::vector<TrainStep>& trace,
                                   int window);

}  // namespace thinslice
