#include "thinslice/inference.hpp"

#include <cmath>
#include <string>

#include "thinslice/errors.hpp"

namespace thinslice {

SliceModel::SliceModel(const PartGraph& graph, int frames, int height,
                       int width, const FlowSet& flows)
    : frames_(frames),
      parts_(graph.part_count()),
      height_(height),
      width_(width),
      edges_(graph.unroll(frames)) {
  if (frames < 1 || height < 1 || width < 1) {
    throw ArgumentError("slice geometry must be positive");
  }
  incoming_.resize(static_cast<std::size_t>(node_count()));
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    incoming_[node(edges_[e].to_frame, edges_[e].to_part)].push_back(
        static_cast<int>(e));
  }

  // One plan per ordered adjacent pair that some edge actually crosses.
  const std::size_t pair_slots =
      frames > 1 ? 2 * static_cast<std::size_t>(frames - 1) : 0;
  plans_.resize(pair_slots);
  auto plan_for = [&](int target, int source) -> const WarpPlan* {
    const std::size_t s = FlowSet::slot(target, source);
    if (!plans_[s]) {
      const FlowField& f = flows.get(target, source);
      if (f.height() != height || f.width() != width) {
        throw ConfigError("flow for frame pair target " + std::to_string(target) +
                          " <- source " + std::to_string(source) +
                          " does not match the heatmap size");
      }
      plans_[s] = std::make_unique<WarpPlan>(f);
    }
    return plans_[s].get();
  };
  chains_.resize(edges_.size());
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const EdgeInstance& ei = edges_[e];
    if (ei.kind != EdgeKind::kTemporal) continue;
    const int step = ei.to_frame > ei.from_frame ? 1 : -1;
    for (int f = ei.from_frame; f != ei.to_frame; f += step) {
      chains_[e].push_back(plan_for(f + step, f));
    }
  }
}

std::vector<int> MessageState::signature() const {
  std::vector<int> sig;
  for (const IterationRecord& rec : history) {
    for (const DtResult& dt : rec.transforms) {
      sig.insert(sig.end(), dt.argmax.begin(), dt.argmax.end());
    }
    sig.insert(sig.end(), rec.fill_source.begin(), rec.fill_source.end());
    sig.insert(sig.end(), rec.peak.begin(), rec.peak.end());
  }
  return sig;
}

MessageState initial_state(const HeatmapSequence& unaries,
                           const InferenceConfig& config) {
  if (config.iterations < 1) {
    throw ArgumentError("inference needs at least one iteration");
  }
  MessageState s;
  s.config = config;
  s.scores.assign(unaries.maps().begin(), unaries.maps().end());
  return s;
}

DtResult compute_message(const MessageState& state, const SliceModel& model,
                         int edge, const SpringParams& params,
                         int* fill_source) {
  const EdgeInstance& ei = model.edges()[static_cast<std::size_t>(edge)];
  Heatmap input = state.scores[model.node(ei.from_frame, ei.from_part)];
  if (state.config.mode == InferenceMode::kBp && !state.history.empty()) {
    const Heatmap& back = state.message(ei.reverse);
    for (std::size_t i = 0; i < input.size(); ++i) input[i] -= back[i];
  }
  int fill_at = -1;
  const auto& chain = model.warp_chain(edge);
  if (!chain.empty()) {
    // Off-grid samples take the sender's lowest score: an aligned map should
    // carry no evidence where the flow leaves the frame.
    std::size_t lo = 0;
    for (std::size_t i = 1; i < input.size(); ++i) {
      if (input[i] < input[lo]) lo = i;
    }
    fill_at = static_cast<int>(lo);
    const double fill = input[lo];
    for (const WarpPlan* plan : chain) input = plan->apply(input, fill);
  }
  if (fill_source) *fill_source = fill_at;
  return gdt_2d(input, params.springs[static_cast<std::size_t>(ei.slot)]);
}

namespace {

// In-place form of run_iteration; avoids copying the retained history.
void advance(MessageState& state, const SliceModel& model,
             const SpringParams& params, const HeatmapSequence& unaries) {
  if (static_cast<int>(state.scores.size()) != model.node_count() ||
      unaries.frames() != model.frames() || unaries.parts() != model.parts()) {
    throw ArgumentError("message state does not match the slice model");
  }
  const std::size_t edge_count = model.edges().size();
  IterationRecord rec;
  rec.transforms.reserve(edge_count);
  rec.fill_source.assign(edge_count, -1);
  for (std::size_t e = 0; e < edge_count; ++e) {
    rec.transforms.push_back(compute_message(state, model, static_cast<int>(e),
                                             params, &rec.fill_source[e]));
  }

  std::vector<Heatmap> scores;
  scores.reserve(static_cast<std::size_t>(model.node_count()));
  rec.peak.assign(static_cast<std::size_t>(model.node_count()), -1);
  for (int t = 0; t < model.frames(); ++t) {
    for (int k = 0; k < model.parts(); ++k) {
      const int n = model.node(t, k);
      Heatmap score = unaries.at(t, k);
      for (int e : model.incoming(n)) {
        const Heatmap& m = rec.transforms[static_cast<std::size_t>(e)].values;
        for (std::size_t i = 0; i < score.size(); ++i) score[i] += m[i];
      }
      if (state.config.normalize) {
        const std::size_t peak = argmax_index(score.values());
        rec.peak[n] = static_cast<int>(peak);
        const double top = score[peak];
        for (double& v : score.values()) v -= top;
      }
      scores.push_back(std::move(score));
    }
  }
  state.scores = std::move(scores);
  state.history.push_back(std::move(rec));
  ++state.iteration;
}

}  // namespace

MessageState run_iteration(const MessageState& state, const SliceModel& model,
                           const SpringParams& params,
                           const HeatmapSequence& unaries) {
  MessageState next = state;
  advance(next, model, params, unaries);
  return next;
}

JointTrack decode(const std::vector<Heatmap>& scores, int frames, int parts) {
  JointTrack track(frames, parts);
  for (int t = 0; t < frames; ++t) {
    for (int k = 0; k < parts; ++k) {
      const Peak p = argmax_2d(scores[static_cast<std::size_t>(t * parts + k)]);
      track.at(t, k) = {static_cast<double>(p.x), static_cast<double>(p.y), true};
    }
  }
  return track;
}

InferenceResult infer_slice(const HeatmapSequence& unaries,
                            const SliceModel& model, const SpringParams& params,
                            const InferenceConfig& config) {
  MessageState state = initial_state(unaries, config);
  for (int n = 0; n < config.iterations; ++n) {
    advance(state, model, params, unaries);
  }
  JointTrack track = decode(state.scores, unaries.frames(), unaries.parts());
  return {std::move(state), std::move(track)};
}

InferenceResult infer_slice(const HeatmapSequence& unaries, const FlowSet& flows,
                            const PartGraph& graph, const SpringParams& params,
                            const InferenceConfig& config) {
  if (params.springs.size() != graph.slots().size()) {
    throw ArgumentError("spring parameters do not match the graph");
  }
  const SliceModel model(graph, unaries.frames(), unaries.height(),
                         unaries.width(), flows);
  return infer_slice(unaries, model, params, config);
}

namespace {

int grid_coordinate(double v, int extent, const char* axis) {
  const double r = std::round(v);
  if (r != v || r < 0 || r >= extent) {
    throw ArgumentError(std::string("track ") + axis + " coordinate " +
                        std::to_string(v) + " is not an in-grid pixel");
  }
  return static_cast<int>(r);
}

double flow_component(std::span<const double> values, int h, int w, double x,
                      double y) {
  return bilinear_sample(Heatmap(h, w, {values.begin(), values.end()}), x, y);
}

}  // namespace

double score_slice(const JointTrack& track, const HeatmapSequence& unaries,
                   const FlowSet& flows, const PartGraph& graph,
                   const SpringParams& params) {
  if (track.frames() != unaries.frames() || track.parts() != unaries.parts() ||
      graph.part_count() != unaries.parts()) {
    throw ArgumentError("track, unaries and graph disagree on shape");
  }
  const int h = unaries.height();
  const int w = unaries.width();
  std::vector<Pixel> at(static_cast<std::size_t>(track.frames() * track.parts()));
  for (int t = 0; t < track.frames(); ++t) {
    for (int k = 0; k < track.parts(); ++k) {
      const Joint& j = track.at(t, k);
      at[static_cast<std::size_t>(t * track.parts() + k)] = {
          grid_coordinate(j.x, w, "x"), grid_coordinate(j.y, h, "y")};
    }
  }
  auto pos = [&](int t, int k) { return at[static_cast<std::size_t>(t * track.parts() + k)]; };

  double total = 0.0;
  for (int t = 0; t < track.frames(); ++t) {
    for (int k = 0; k < track.parts(); ++k) {
      total += unaries.at(t, k).at(pos(t, k).x, pos(t, k).y);
    }
    for (const SpatialEdge& e : graph.spatial_edges()) {
      const Spring& s = params.springs[static_cast<std::size_t>(graph.spatial_slot(e.a, e.b))];
      total += s.psi(pos(t, e.a).x - pos(t, e.b).x, pos(t, e.a).y - pos(t, e.b).y);
    }
  }
  for (int k = 0; k < track.parts(); ++k) {
    for (int o : graph.temporal_offsets()) {
      const Spring& s = params.springs[static_cast<std::size_t>(graph.temporal_slot(k, o))];
      for (int t = 0; t + o < track.frames(); ++t) {
        // Carry p_t forward to frame t + o one flow step at a time.
        double x = pos(t, k).x;
        double y = pos(t, k).y;
        for (int f = t; f < t + o; ++f) {
          const FlowField& fl = flows.get(f, f + 1);
          const double dx = flow_component(fl.dx_values(), h, w, x, y);
          const double dy = flow_component(fl.dy_values(), h, w, x, y);
          x += dx;
          y += dy;
        }
        total += s.psi(x - pos(t + o, k).x, y - pos(t + o, k).y);
      }
    }
  }
  return total;
}

}  // namespace thinslice
