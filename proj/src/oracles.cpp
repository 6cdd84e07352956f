#include "thinslice/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>

#include "thinslice/distance_transform.hpp"
#include "thinslice/errors.hpp"

namespace thinslice::oracle {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

Dt1dResult exhaustive_dt_1d(std::span<const double> score, double w_quad,
                            double w_lin, double psi_sign) {
  const int n = static_cast<int>(score.size());
  Dt1dResult r{std::vector<double>(score.size()), std::vector<int>(score.size())};
  for (int i = 0; i < n; ++i) {
    double best = kNegInf;
    int arg = 0;
    for (int j = 0; j < n; ++j) {
      const double d = j - i;
      const double v = score[j] - psi_sign * (w_quad * d * d + w_lin * d);
      if (v > best) {
        best = v;
        arg = j;
      }
    }
    r.values[i] = best;
    r.argmax[i] = arg;
  }
  return r;
}

DtResult exhaustive_dt_2d(const Heatmap& score, const Spring& spring,
                          double psi_sign) {
  const int h = score.height();
  const int w = score.width();
  DtResult r{Heatmap(h, w), std::vector<int>(score.size())};
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      double best = kNegInf;
      int arg = 0;
      for (int qy = 0; qy < h; ++qy) {
        for (int qx = 0; qx < w; ++qx) {
          const double v = score.at(qx, qy) + psi_sign * spring.psi(qx - px, qy - py);
          if (v > best) {
            best = v;
            arg = qy * w + qx;
          }
        }
      }
      r.values.at(px, py) = best;
      r.argmax[r.values.index(px, py)] = arg;
    }
  }
  return r;
}

double FactorGraph::score(const std::vector<int>& labels) const {
  double s = 0.0;
  for (std::size_t v = 0; v < unary.size(); ++v) s += unary[v][labels[v]];
  for (const Factor& f : factors) {
    s += f.table[static_cast<std::size_t>(labels[f.u] * states + labels[f.v])];
  }
  return s;
}

FactorGraph slice_factor_graph(const HeatmapSequence& unaries,
                               const FlowSet& flows, const PartGraph& graph,
                               const SpringParams& params) {
  const int frames = unaries.frames();
  const int parts = unaries.parts();
  const int h = unaries.height();
  const int w = unaries.width();
  const int s = h * w;
  if (graph.part_count() != parts ||
      params.springs.size() != static_cast<std::size_t>(graph.slot_count())) {
    throw ArgumentError("factor graph inputs disagree on the part graph");
  }
  FactorGraph fg;
  fg.states = s;
  for (const Heatmap& m : unaries.maps()) {
    fg.unary.emplace_back(m.values().begin(), m.values().end());
  }
  auto var = [&](int t, int k) { return t * parts + k; };

  for (int t = 0; t < frames; ++t) {
    for (const SpatialEdge& e : graph.spatial_edges()) {
      const Spring& sp = params.springs[static_cast<std::size_t>(graph.spatial_slot(e.a, e.b))];
      FactorGraph::Factor f{var(t, e.a), var(t, e.b),
                            std::vector<double>(static_cast<std::size_t>(s) * s)};
      for (int la = 0; la < s; ++la) {
        for (int lb = 0; lb < s; ++lb) {
          f.table[static_cast<std::size_t>(la) * s + lb] =
              sp.psi(la % w - lb % w, la / w - lb / w);
        }
      }
      fg.factors.push_back(std::move(f));
    }
  }

  // Direct bilinear lookup of a flow component, zero outside the grid.
  auto lookup = [&](std::span<const double> comp, double x, double y) {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;
    double acc = 0.0;
    for (int dy = 0; dy <= 1; ++dy) {
      for (int dx = 0; dx <= 1; ++dx) {
        const int xx = x0 + dx;
        const int yy = y0 + dy;
        if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
        const double wt = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
        acc += wt * comp[static_cast<std::size_t>(yy * w + xx)];
      }
    }
    return acc;
  };
  for (int k = 0; k < parts; ++k) {
    for (int o : graph.temporal_offsets()) {
      const Spring& sp = params.springs[static_cast<std::size_t>(graph.temporal_slot(k, o))];
      for (int t = 0; t + o < frames; ++t) {
        FactorGraph::Factor f{var(t, k), var(t + o, k),
                              std::vector<double>(static_cast<std::size_t>(s) * s)};
        for (int la = 0; la < s; ++la) {
          double x = la % w;
          double y = la / w;
          for (int step = t; step < t + o; ++step) {
            const FlowField& fl = flows.get(step, step + 1);
            const double dx = lookup(fl.dx_values(), x, y);
            const double dy = lookup(fl.dy_values(), x, y);
            x += dx;
            y += dy;
          }
          for (int lb = 0; lb < s; ++lb) {
            f.table[static_cast<std::size_t>(la) * s + lb] = sp.psi(x - lb % w, y - lb / w);
          }
        }
        fg.factors.push_back(std::move(f));
      }
    }
  }
  return fg;
}

namespace {

void check_budget(const FactorGraph& fg, double max_configs) {
  const double configs = std::pow(static_cast<double>(fg.states), fg.variables());
  if (configs > max_configs) {
    throw ArgumentError("exhaustive enumeration of " + std::to_string(configs) +
                        " configurations exceeds the budget");
  }
}

// Calls visit(labels, score) for every labelling.
template <typename Visit>
void enumerate(const FactorGraph& fg, Visit visit) {
  const int n = fg.variables();
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  while (true) {
    visit(labels, fg.score(labels));
    int v = n - 1;
    while (v >= 0 && ++labels[v] == fg.states) {
      labels[v] = 0;
      --v;
    }
    if (v < 0) break;
  }
}

}  // namespace

MapResult exhaustive_map(const FactorGraph& fg, double max_configs) {
  check_budget(fg, max_configs);
  MapResult best{kNegInf, {}};
  enumerate(fg, [&](const std::vector<int>& labels, double s) {
    if (s > best.score) {
      best.score = s;
      best.labels = labels;
    }
  });
  return best;
}

std::vector<std::vector<double>> exhaustive_max_marginals(const FactorGraph& fg,
                                                          double max_configs) {
  check_budget(fg, max_configs);
  std::vector<std::vector<double>> mm(
      static_cast<std::size_t>(fg.variables()),
      std::vector<double>(static_cast<std::size_t>(fg.states), kNegInf));
  enumerate(fg, [&](const std::vector<int>& labels, double s) {
    for (std::size_t v = 0; v < labels.size(); ++v) {
      mm[v][labels[v]] = std::max(mm[v][labels[v]], s);
    }
  });
  return mm;
}

std::vector<std::vector<double>> tree_max_marginals(const FactorGraph& fg) {
  const int n = fg.variables();
  const int s = fg.states;
  std::vector<int> root(static_cast<std::size_t>(n));
  std::iota(root.begin(), root.end(), 0);
  std::function<int(int)> find = [&](int v) {
    return root[v] == v ? v : root[v] = find(root[v]);
  };
  // adjacency: (neighbour, factor index)
  std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(n));
  for (std::size_t f = 0; f < fg.factors.size(); ++f) {
    const int a = find(fg.factors[f].u);
    const int b = find(fg.factors[f].v);
    if (a == b) throw ArgumentError("tree_max_marginals: factor graph has a cycle");
    root[a] = b;
    adj[fg.factors[f].u].push_back({fg.factors[f].v, static_cast<int>(f)});
    adj[fg.factors[f].v].push_back({fg.factors[f].u, static_cast<int>(f)});
  }

  // msg[(from, to)] over labels of `to`, computed on demand.
  std::vector<std::vector<std::vector<double>>> msg(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) msg[v].resize(adj[v].size());
  std::function<const std::vector<double>&(int, std::size_t)> message =
      [&](int from, std::size_t slot) -> const std::vector<double>& {
    std::vector<double>& out = msg[from][slot];
    if (!out.empty()) return out;
    const auto [to, f] = adj[from][slot];
    std::vector<double> belief = fg.unary[from];
    for (std::size_t o = 0; o < adj[from].size(); ++o) {
      if (o == slot) continue;
      const int nb = adj[from][o].first;
      std::size_t back = 0;
      while (adj[nb][back].first != from) ++back;
      const std::vector<double>& m = message(nb, back);
      for (int l = 0; l < s; ++l) belief[l] += m[l];
    }
    const FactorGraph::Factor& fac = fg.factors[static_cast<std::size_t>(f)];
    const bool from_is_u = fac.u == from;
    std::vector<double> result(static_cast<std::size_t>(s), kNegInf);
    for (int lt = 0; lt < s; ++lt) {
      for (int lf = 0; lf < s; ++lf) {
        const double pair = from_is_u ? fac.table[static_cast<std::size_t>(lf) * s + lt]
                                      : fac.table[static_cast<std::size_t>(lt) * s + lf];
        result[lt] = std::max(result[lt], belief[lf] + pair);
      }
    }
    out = std::move(result);
    return out;
  };

  std::vector<std::vector<double>> mm(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    mm[v] = fg.unary[v];
    for (const auto& [nb, f] : adj[v]) {
      std::size_t back = 0;
      while (adj[nb][back].first != v) ++back;
      const std::vector<double>& m = message(nb, back);
      for (int l = 0; l < s; ++l) mm[v][l] += m[l];
    }
  }
  return mm;
}

GraphSpec random_tree_spec(int parts, std::mt19937_64& rng) {
  if (parts < 1) throw ArgumentError("random_tree_spec: need at least one part");
  GraphSpec spec;
  for (int k = 0; k < parts; ++k) spec.parts.push_back("p" + std::to_string(k));
  for (int k = 1; k < parts; ++k) {
    std::uniform_int_distribution<int> pick(0, k - 1);
    const int parent = pick(rng);
    // Random orientation so both slot directions get exercised.
    if (rng() & 1u) {
      spec.limb_edges.push_back({parent, k});
    } else {
      spec.limb_edges.push_back({k, parent});
    }
  }
  return spec;
}

int spatial_diameter(const PartGraph& graph) {
  const int k = graph.part_count();
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(k));
  for (const SpatialEdge& e : graph.spatial_edges()) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  int best = 0;
  for (int s = 0; s < k; ++s) {
    std::vector<int> dist(static_cast<std::size_t>(k), -1);
    std::queue<int> q;
    dist[s] = 0;
    q.push(s);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      best = std::max(best, dist[u]);
      for (int v : adj[u]) {
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          q.push(v);
        }
      }
    }
  }
  return best;
}

SpringParams random_consistent_params(const PartGraph& graph,
                                      std::mt19937_64& rng, double max_linear,
                                      double max_quadratic) {
  std::uniform_real_distribution<double> lin(-max_linear, max_linear);
  std::uniform_real_distribution<double> quad(0.01, max_quadratic);
  SpringParams p = init_spring_params(graph);
  for (const SpatialEdge& e : graph.spatial_edges()) {
    const Spring s{lin(rng), quad(rng), lin(rng), quad(rng)};
    p.springs[static_cast<std::size_t>(graph.spatial_slot(e.a, e.b))] = s;
    p.springs[static_cast<std::size_t>(graph.spatial_slot(e.b, e.a))] = s.mirrored();
  }
  for (int k = 0; k < graph.part_count(); ++k) {
    for (int o : graph.temporal_offsets()) {
      const Spring s{lin(rng), quad(rng), lin(rng), quad(rng)};
      p.springs[static_cast<std::size_t>(graph.temporal_slot(k, o))] = s;
      p.springs[static_cast<std::size_t>(graph.temporal_slot(k, -o))] = s.mirrored();
    }
  }
  return p;
}

HeatmapSequence random_unaries(int frames, int parts, int height, int width,
                               std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  HeatmapSequence seq(frames, parts, height, width);
  for (Heatmap& m : seq.maps()) {
    for (double& v : m.values()) v = u(rng);
  }
  return seq;
}

FlowSet random_flows(int frames, int height, int width, double max_shift,
                     std::mt19937_64& rng) {
  std::uniform_real_distribution<double> shift(-max_shift, max_shift);
  std::uniform_real_distribution<double> wobble(-0.1, 0.1);
  std::vector<FlowField> fields;
  for (int t = 0; t + 1 < frames; ++t) {
    const double sx = shift(rng);
    const double sy = shift(rng);
    FlowField fwd(height, width);
    FlowField bwd(height, width);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        fwd.set(x, y, -sx + wobble(rng), -sy + wobble(rng));
        bwd.set(x, y, sx + wobble(rng), sy + wobble(rng));
      }
    }
    fields.push_back(std::move(fwd));
    fields.push_back(std::move(bwd));
  }
  return FlowSet(frames, std::move(fields));
}

bool fd_agrees(const FdSample& s, double rel, double abs_floor) {
  return std::abs(s.analytic - s.numeric) <=
         rel * std::max(std::abs(s.analytic), std::abs(s.numeric)) + abs_floor;
}

namespace {

struct Probe {
  double loss = 0.0;
  std::vector<int> signature;
  std::vector<bool> active;
};

Probe probe(const FdProblem& p, const SliceModel& model, const SpringParams& params,
            const HeatmapSequence& unaries) {
  const InferenceResult r = infer_slice(unaries, model, params, p.inference);
  const LossResult loss = hinge_loss(
      scores_as_sequence(r.state, unaries.frames(), unaries.parts()), p.truth,
      p.hinge_radius);
  Probe out{loss.loss, r.state.signature(), {}};
  for (const Heatmap& g : loss.gradient.maps()) {
    for (double v : g.values()) out.active.push_back(v != 0.0);
  }
  return out;
}

}  // namespace

std::vector<FdSample> finite_difference_check(const FdProblem& problem,
                                              const PartGraph& graph,
                                              int unary_samples, double step,
                                              std::mt19937_64& rng) {
  const HeatmapSequence& u = problem.unaries;
  const SliceModel model(graph, u.frames(), u.height(), u.width(), problem.flows);
  const InferenceResult fwd = infer_slice(u, model, problem.params, problem.inference);
  const LossResult loss =
      hinge_loss(scores_as_sequence(fwd.state, u.frames(), u.parts()), problem.truth,
                 problem.hinge_radius);
  const GradientBundle grad =
      backward_slice(fwd.state, loss.gradient, model, problem.params);
  const Probe base = probe(problem, model, problem.params, u);

  std::vector<FdSample> out;
  auto finish = [&](FdSample s, const Probe& plus, const Probe& minus) {
    s.numeric = (plus.loss - minus.loss) / (2.0 * step);
    s.stable = plus.signature == base.signature && minus.signature == base.signature &&
               plus.active == base.active && minus.active == base.active;
    out.push_back(s);
  };

  for (std::size_t slot = 0; slot < problem.params.springs.size(); ++slot) {
    for (int c = 0; c < 4; ++c) {
      SpringParams plus = problem.params;
      SpringParams minus = problem.params;
      auto wp = plus.springs[slot].as_array();
      auto wm = minus.springs[slot].as_array();
      wp[c] += step;
      wm[c] -= step;
      plus.springs[slot] = Spring::from_array(wp);
      minus.springs[slot] = Spring::from_array(wm);
      FdSample s;
      s.slot = static_cast<int>(slot);
      s.component = c;
      s.analytic = grad.params[slot][c];
      finish(s, probe(problem, model, plus, u), probe(problem, model, minus, u));
    }
  }

  std::uniform_int_distribution<int> pick_map(0, static_cast<int>(u.maps().size()) - 1);
  std::uniform_int_distribution<int> pick_pixel(0, u.height() * u.width() - 1);
  for (int i = 0; i < unary_samples; ++i) {
    const int m = pick_map(rng);
    const int px = pick_pixel(rng);
    HeatmapSequence plus = u;
    HeatmapSequence minus = u;
    plus.maps()[m][static_cast<std::size_t>(px)] += step;
    minus.maps()[m][static_cast<std::size_t>(px)] -= step;
    FdSample s;
    s.map = m;
    s.pixel = px;
    s.analytic = grad.unaries.maps()[m][static_cast<std::size_t>(px)];
    finish(s, probe(problem, model, problem.params, plus),
           probe(problem, model, problem.params, minus));
  }
  return out;
}

}  // namespace thinslice::oracle
