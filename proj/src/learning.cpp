#include "thinslice/learning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "thinslice/errors.hpp"

namespace thinslice {

HeatmapSequence render_ground_truth(const JointTrack& track, int height,
                                    int width, double sigma) {
  if (!(sigma > 0.0)) throw ArgumentError("ground-truth sigma must be positive");
  HeatmapSequence out(track.frames(), track.parts(), height, width);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int t = 0; t < track.frames(); ++t) {
    for (int k = 0; k < track.parts(); ++k) {
      const Joint& j = track.at(t, k);
      if (!j.visible) continue;
      Heatmap& m = out.at(t, k);
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          const double dx = x - j.x;
          const double dy = y - j.y;
          m.at(x, y) = std::exp(-(dx * dx + dy * dy) * inv);
        }
      }
    }
  }
  return out;
}

LossResult l2_loss(const HeatmapSequence& pred, const HeatmapSequence& truth) {
  if (!pred.same_shape(truth)) throw ArgumentError("l2_loss: shape mismatch");
  LossResult r{0.0, HeatmapSequence(pred.frames(), pred.parts(), pred.height(),
                                    pred.width())};
  for (std::size_t m = 0; m < pred.maps().size(); ++m) {
    const Heatmap& b = pred.maps()[m];
    const Heatmap& ideal = truth.maps()[m];
    Heatmap& g = r.gradient.maps()[m];
    for (std::size_t i = 0; i < b.size(); ++i) {
      const double d = b[i] - ideal[i];
      r.loss += d * d;
      g[i] = 2.0 * d;
    }
  }
  return r;
}

LossResult hinge_loss(const HeatmapSequence& pred, const JointTrack& truth,
                      double radius) {
  if (!(radius >= 1.0)) throw ArgumentError("hinge radius must be >= 1");
  if (pred.frames() != truth.frames() || pred.parts() != truth.parts()) {
    throw ArgumentError("hinge_loss: prediction and track disagree on shape");
  }
  LossResult r{0.0, HeatmapSequence(pred.frames(), pred.parts(), pred.height(),
                                    pred.width())};
  const double r2 = radius * radius;
  for (int t = 0; t < pred.frames(); ++t) {
    for (int k = 0; k < pred.parts(); ++k) {
      const Joint& j = truth.at(t, k);
      if (!j.visible) continue;
      const Heatmap& b = pred.at(t, k);
      Heatmap& g = r.gradient.at(t, k);
      for (int y = 0; y < b.height(); ++y) {
        for (int x = 0; x < b.width(); ++x) {
          const double dx = x - j.x;
          const double dy = y - j.y;
          const double label = dx * dx + dy * dy <= r2 ? 1.0 : -1.0;
          const double margin = 1.0 - b.at(x, y) * label;
          if (margin > 0.0) {
            r.loss += margin;
            g.at(x, y) = -label;
          }
        }
      }
    }
  }
  return r;
}

HeatmapSequence scores_as_sequence(const MessageState& state, int frames,
                                   int parts) {
  if (static_cast<int>(state.scores.size()) != frames * parts) {
    throw ArgumentError("state holds a different number of score maps");
  }
  const Heatmap& first = state.scores.front();
  HeatmapSequence out(frames, parts, first.height(), first.width());
  std::copy(state.scores.begin(), state.scores.end(), out.maps().begin());
  return out;
}

namespace {

void add_into(Heatmap& dst, const Heatmap& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

GradientBundle backward_slice(const MessageState& state,
                              const HeatmapSequence& loss_grad,
                              const SliceModel& model,
                              const SpringParams& params) {
  if (state.iteration < 1 ||
      static_cast<int>(state.history.size()) != state.iteration) {
    throw UsageError("backward_slice needs a state that retains every iteration");
  }
  if (loss_grad.frames() != model.frames() || loss_grad.parts() != model.parts() ||
      loss_grad.height() != model.height() || loss_grad.width() != model.width()) {
    throw ArgumentError("loss gradient does not match the slice");
  }
  const int h = model.height();
  const int w = model.width();
  const std::size_t nodes = static_cast<std::size_t>(model.node_count());
  const std::size_t edges = model.edges().size();
  const bool bp = state.config.mode == InferenceMode::kBp;

  GradientBundle out{std::vector<std::array<double, 4>>(params.springs.size()),
                     HeatmapSequence(model.frames(), model.parts(), h, w)};
  auto unary_grad = [&](std::size_t n) -> Heatmap& { return out.unaries.maps()[n]; };

  std::vector<Heatmap> grad_scores(loss_grad.maps().begin(), loss_grad.maps().end());
  std::vector<Heatmap> grad_messages(edges, Heatmap(h, w));

  for (int n = state.iteration; n >= 1; --n) {
    const IterationRecord& rec = state.history[static_cast<std::size_t>(n - 1)];
    // Scores of iteration n: unary + incoming messages, then minus the peak.
    for (std::size_t node = 0; node < nodes; ++node) {
      Heatmap& g = grad_scores[node];
      if (rec.peak[node] >= 0) {
        double total = 0.0;
        for (double v : g.values()) total += v;
        g[static_cast<std::size_t>(rec.peak[node])] -= total;
      }
      add_into(unary_grad(node), g);
      for (int e : model.incoming(static_cast<int>(node))) {
        add_into(grad_messages[static_cast<std::size_t>(e)], g);
      }
    }

    std::vector<Heatmap> prev_scores(nodes, Heatmap(h, w));
    std::vector<Heatmap> prev_messages(bp && n > 1 ? edges : 0, Heatmap(h, w));
    for (std::size_t e = 0; e < edges; ++e) {
      const EdgeInstance& ei = model.edges()[e];
      Heatmap grad_input(h, w);
      dt_backward_accumulate(rec.transforms[e], grad_messages[e], grad_input,
                             out.params[static_cast<std::size_t>(ei.slot)]);
      const auto& chain = model.warp_chain(static_cast<int>(e));
      if (!chain.empty()) {
        double grad_fill = 0.0;
        for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
          Heatmap before(h, w);
          grad_fill += (*it)->transpose_accumulate(grad_input, before);
          grad_input = std::move(before);
        }
        grad_input[static_cast<std::size_t>(rec.fill_source[e])] += grad_fill;
      }
      add_into(prev_scores[static_cast<std::size_t>(model.node(ei.from_frame, ei.from_part))],
               grad_input);
      if (!prev_messages.empty()) {
        Heatmap& g = prev_messages[static_cast<std::size_t>(ei.reverse)];
        for (std::size_t i = 0; i < g.size(); ++i) g[i] -= grad_input[i];
      }
    }

    if (n == 1) {
      // Iteration-0 scores are the unaries themselves.
      for (std::size_t node = 0; node < nodes; ++node) {
        add_into(unary_grad(node), prev_scores[node]);
      }
    } else {
      grad_scores = std::move(prev_scores);
      if (bp) {
        grad_messages = std::move(prev_messages);
      } else {
        for (Heatmap& g : grad_messages) std::fill(g.values().begin(), g.values().end(), 0.0);
      }
    }
  }
  return out;
}

GradientBundle backward_slice(const MessageState& state,
                              const HeatmapSequence& loss_grad,
                              const PartGraph& graph, const SpringParams& params,
                              const FlowSet& flows) {
  const SliceModel model(graph, loss_grad.frames(), loss_grad.height(),
                         loss_grad.width(), flows);
  return backward_slice(state, loss_grad, model, params);
}

LossResult slice_loss(const MessageState& state, const TrainingSlice& slice,
                      const TrainConfig& config) {
  const HeatmapSequence pred = scores_as_sequence(
      state, slice.unaries.frames(), slice.unaries.parts());
  LossResult r = config.loss == LossKind::kHinge
                     ? hinge_loss(pred, slice.track, config.hinge_radius)
                     : l2_loss(pred, render_ground_truth(slice.track, pred.height(),
                                                         pred.width(), config.gt_sigma));
  if (config.mean_over_pixels) {
    const double scale = 1.0 / (static_cast<double>(pred.maps().size()) *
                                pred.height() * pred.width());
    r.loss *= scale;
    for (Heatmap& g : r.gradient.maps()) {
      for (double& v : g.values()) v *= scale;
    }
  }
  return r;
}

TrainResult sgd_train(const std::vector<TrainingSlice>& dataset,
                      const PartGraph& graph, const TrainConfig& config,
                      const SpringParams& initial) {
  if (dataset.empty()) throw ArgumentError("sgd_train: empty dataset");
  if (!(config.learning_rate >= 0.0) || config.epochs < 0 ||
      config.decay_interval < 1 || !(config.lr_decay_factor > 0.0)) {
    throw ArgumentError("sgd_train: invalid training configuration");
  }
  TrainResult result{clamp_spring_params(initial), {}};
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(dataset.size());
  int step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t idx : order) {
      const TrainingSlice& slice = dataset[idx];
      const double lr = config.learning_rate *
                        std::pow(config.lr_decay_factor, -(step / config.decay_interval));
      const SliceModel model(graph, slice.unaries.frames(), slice.unaries.height(),
                             slice.unaries.width(), slice.flows);
      const InferenceResult fwd =
          infer_slice(slice.unaries, model, result.params, config.inference);
      const LossResult loss = slice_loss(fwd.state, slice, config);
      if (!std::isfinite(loss.loss)) {
        throw NumericError("training diverged at step " + std::to_string(step));
      }
      const GradientBundle grad =
          backward_slice(fwd.state, loss.gradient, model, result.params);
      SpringParams next = result.params;
      for (std::size_t s = 0; s < next.springs.size(); ++s) {
        auto w = next.springs[s].as_array();
        for (int c = 0; c < 4; ++c) w[c] -= lr * grad.params[s][c];
        next.springs[s] = Spring::from_array(w);
      }
      try {
        result.params = clamp_spring_params(next);
      } catch (const NumericError&) {
        throw NumericError("training diverged at step " + std::to_string(step));
      }
      result.trace.push_back({step, loss.loss, lr});
      ++step;
    }
  }
  return result;
}

TrainResult sgd_train(const std::vector<TrainingSlice>& dataset,
                      const PartGraph& graph, const TrainConfig& config) {
  return sgd_train(dataset, graph, config, init_spring_params(graph));
}

std::string loss_trace_csv(const std::vector<TrainStep>& trace) {
  std::string out = "step,loss,lr\n";
  char line[96];
  for (const TrainStep& s : trace) {
    std::snprintf(line, sizeof line, "%d,%.9g,%.9g\n", s.step, s.loss,
                  s.learning_rate);
    out += line;
  }
  return out;
}

std::vector<double> windowed_means(const std::vector<TrainStep>& trace,
                                   int window) {
  if (window < 1) throw ArgumentError("window must be positive");
  std::vector<double> means;
  const std::size_t w = static_cast<std::size_t>(window);
  for (std::size_t start = 0; start + w <= trace.size(); start += w) {
    double sum = 0.0;
    for (std::size_t i = start; i < start + w; ++i) sum += trace[i].loss;
    means.push_back(sum / static_cast<double>(w));
  }
  if (means.empty() && !trace.empty()) {
    double sum = 0.0;
    for (const TrainStep& s : trace) sum += s.loss;
    means.push_back(sum / static_cast<double>(trace.size()));
  }
  return means;
}

}  // namespace thinslice
