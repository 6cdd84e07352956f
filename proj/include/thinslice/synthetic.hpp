#pragma once

// Desk-scale synthetic worlds: articulated joint tracks, corrupted Gaussian
// unaries and flow fields consistent with the motion.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "thinslice/errors.hpp"
#include "thinslice/graph.hpp"
#include "thinslice/tensor.hpp"

namespace thinslice {

class GenerationError : public Error {
 public:
  using Error::Error;
};

struct CorruptionSpec {
  /// Probability that a (frame, part) unary is wiped.
  double occlusion_prob = 0.0;
  /// Probability that a second, equal peak is added at the symmetric twin.
  double distractor_prob = 0.0;
  double blur_sigma = 0.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  bool clean() const {
    return occlusion_prob == 0.0 && distractor_prob == 0.0 &&
           blur_sigma == 0.0 && noise_sigma == 0.0;
  }
};

/// Rest pose in skeleton units (roughly one unit per short bone); y grows
/// downward like image rows.
using PoseTemplate = std::vector<std::array<double, 2>>;

/// Template for the built-in part sets, matched by part names.
std::optional<PoseTemplate> builtin_template(const PartGraph& graph);

struct TrackOptions {
  /// Pixels per template unit.
  double scale = 4.0;
  /// Each bone length is its template length * scale * (1 +- bone_jitter).
  double bone_jitter = 0.15;
  /// Random rotation of each bone away from its template direction (radians).
  double angle_jitter = 0.35;
  /// Per-frame displacement bound for every joint, in pixels.
  double max_velocity = 2.0;
  /// Per-frame angular speed bound for every bone (radians).
  double max_angular_velocity = 0.15;
  /// Distance kept between every joint and the grid border.
  int margin = 2;
};

/// Closed interval of admissible lengths for one limb edge, already including
/// the half-pixel rounding of both endpoints.
struct BoneBand {
  int a = 0;
  int b = 0;
  double min_length = 0.0;
  double max_length = 0.0;
};

struct GeneratedTrack {
  JointTrack track;
  std::vector<BoneBand> bands;
};

/// Integer-pixel joint tracks driven by forward kinematics over the limb
/// edges (which must form a forest). Deterministic per seed.
GeneratedTrack generate_tracks(const PartGraph& graph, int frames, int height,
                               int width, std::uint64_t seed,
                               const TrackOptions& options = {});

/// Gaussian peaks of height 1 (width `peak_sigma`) at the joints, followed by
/// occlusion, distractor, blur and additive noise as set in `spec`.
HeatmapSequence render_unaries(const JointTrack& track, const PartGraph& graph,
                               int height, int width, const CorruptionSpec& spec,
                               double peak_sigma = 1.5);

/// Both-direction flows between adjacent frames, blended from the joint
/// displacements by inverse-distance radial weights that reproduce each
/// joint's own displacement exactly at its position; plus Gaussian noise of
/// amplitude `flow_noise`.
FlowSet derive_flows(const JointTrack& track, int height, int width,
                     double flow_noise = 0.0, std::uint64_t seed = 0);

struct SliceOptions {
  int frames = 5;
  int height = 48;
  int width = 48;
  TrackOptions track;
  CorruptionSpec corruption;
  double flow_noise = 0.0;
  double peak_sigma = 1.5;
};

struct SyntheticSlice {
  JointTrack track;
  HeatmapSequence unaries;
  FlowSet flows;
  CorruptionSpec spec;
};

/// A full slice; `seed` drives the track, corruption and flow noise.
SyntheticSlice generate_slice(const PartGraph& graph, const SliceOptions& options,
                              std::uint64_t seed);

}  // namespace thinslice
