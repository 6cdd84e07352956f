#include "thinslice/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <random>
#include <string>

namespace thinslice {

namespace {

struct Bone {
  int parent = 0;
  int child = 0;
  double length = 0.0;
  double rest_angle = 0.0;
};

struct Skeleton {
  std::vector<int> roots;
  std::vector<Bone> bones;  // parents before children
};

Skeleton limb_forest(const PartGraph& graph) {
  const int k = graph.part_count();
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(k));
  for (const SpatialEdge& e : graph.spatial_edges()) {
    if (e.symmetric) continue;
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  Skeleton sk;
  std::vector<int> parent(static_cast<std::size_t>(k), -2);
  for (int r = 0; r < k; ++r) {
    if (parent[r] != -2) continue;
    parent[r] = -1;
    sk.roots.push_back(r);
    std::queue<int> q;
    q.push(r);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adj[u]) {
        if (v == parent[u]) continue;
        if (parent[v] != -2) {
          throw GenerationError("limb edges must form a forest to drive tracks");
        }
        parent[v] = u;
        sk.bones.push_back({u, v, 0.0, 0.0});
        q.push(v);
      }
    }
  }
  return sk;
}

using Vec2 = std::array<double, 2>;

std::vector<Vec2> pose(const Skeleton& sk, const std::vector<Vec2>& root_pos,
                       const std::vector<double>& angles, int parts) {
  std::vector<Vec2> p(static_cast<std::size_t>(parts));
  for (std::size_t r = 0; r < sk.roots.size(); ++r) p[sk.roots[r]] = root_pos[r];
  for (std::size_t b = 0; b < sk.bones.size(); ++b) {
    const Bone& bone = sk.bones[b];
    p[bone.child] = {p[bone.parent][0] + bone.length * std::cos(angles[b]),
                     p[bone.parent][1] + bone.length * std::sin(angles[b])};
  }
  return p;
}

std::vector<Vec2> rounded(const std::vector<Vec2>& p) {
  std::vector<Vec2> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    out[i] = {std::round(p[i][0]), std::round(p[i][1])};
  }
  return out;
}

bool inside(const std::vector<Vec2>& p, int height, int width, int margin) {
  for (const Vec2& v : p) {
    if (v[0] < margin || v[1] < margin || v[0] > width - 1 - margin ||
        v[1] > height - 1 - margin) {
      return false;
    }
  }
  return true;
}

void gaussian_blur(Heatmap& map, double sigma) {
  if (sigma <= 0.0) return;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (double& v : kernel) v /= sum;
  const int h = map.height();
  const int w = map.width();
  Heatmap tmp(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        if (x + i >= 0 && x + i < w) acc += kernel[i + radius] * map.at(x + i, y);
      }
      tmp.at(x, y) = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        if (y + i >= 0 && y + i < h) acc += kernel[i + radius] * tmp.at(x, y + i);
      }
      map.at(x, y) = acc;
    }
  }
}

void add_gaussian(Heatmap& map, double cx, double cy, double sigma) {
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      map.at(x, y) += std::exp(-(dx * dx + dy * dy) * inv);
    }
  }
}

}  // namespace

std::optional<PoseTemplate> builtin_template(const PartGraph& graph) {
  const auto& names = graph.part_names();
  auto matches = [&](const std::vector<std::string>& expected) {
    return names == expected;
  };
  if (matches({"head", "l_shoulder", "r_shoulder", "l_elbow", "r_elbow",
               "l_wrist", "r_wrist", "l_hip", "r_hip", "l_knee", "r_knee",
               "l_ankle", "r_ankle"})) {
    return PoseTemplate{{0.0, -4.2}, {1.3, -3.0}, {-1.3, -3.0}, {1.8, -1.5},
                        {-1.8, -1.5}, {2.0, 0.0}, {-2.0, 0.0}, {0.9, 0.2},
                        {-0.9, 0.2}, {1.0, 2.0}, {-1.0, 2.0}, {1.1, 3.8},
                        {-1.1, 3.8}};
  }
  if (matches({"neck", "pelvis", "l_hand", "r_hand"})) {
    return PoseTemplate{{0.0, -2.0}, {0.0, 2.0}, {2.0, 0.0}, {-2.0, 0.0}};
  }
  if (matches({"root", "tip"})) {
    return PoseTemplate{{0.0, -1.0}, {0.0, 1.0}};
  }
  return std::nullopt;
}

GeneratedTrack generate_tracks(const PartGraph& graph, int frames, int height,
                               int width, std::uint64_t seed,
                               const TrackOptions& options) {
  if (frames < 1) throw GenerationError("need at least one frame");
  const int parts = graph.part_count();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  Skeleton sk = limb_forest(graph);
  const auto tmpl = builtin_template(graph);
  constexpr double kPi = std::numbers::pi;
  for (Bone& b : sk.bones) {
    double len = 1.5;
    double angle = kPi * unit(rng);
    if (tmpl) {
      const Vec2& pa = (*tmpl)[b.parent];
      const Vec2& pc = (*tmpl)[b.child];
      len = std::hypot(pc[0] - pa[0], pc[1] - pa[1]);
      angle = std::atan2(pc[1] - pa[1], pc[0] - pa[0]);
    }
    b.length = len * options.scale * (1.0 + options.bone_jitter * unit(rng));
    b.rest_angle = angle + options.angle_jitter * unit(rng);
  }

  // Place every component root so its rest pose fits inside the margins.
  std::vector<double> angles(sk.bones.size());
  for (std::size_t b = 0; b < sk.bones.size(); ++b) angles[b] = sk.bones[b].rest_angle;
  std::vector<Vec2> roots(sk.roots.size(), Vec2{0.0, 0.0});
  {
    const std::vector<Vec2> rel = pose(sk, roots, angles, parts);
    std::vector<int> component(static_cast<std::size_t>(parts), 0);
    for (std::size_t r = 0; r < sk.roots.size(); ++r) component[sk.roots[r]] = static_cast<int>(r);
    for (const Bone& b : sk.bones) component[b.child] = component[b.parent];
    for (std::size_t r = 0; r < sk.roots.size(); ++r) {
      double lo[2] = {1e300, 1e300};
      double hi[2] = {-1e300, -1e300};
      for (int k = 0; k < parts; ++k) {
        if (component[k] != static_cast<int>(r)) continue;
        for (int c = 0; c < 2; ++c) {
          lo[c] = std::min(lo[c], rel[k][c]);
          hi[c] = std::max(hi[c], rel[k][c]);
        }
      }
      const double extent[2] = {static_cast<double>(width), static_cast<double>(height)};
      for (int c = 0; c < 2; ++c) {
        // One extra pixel on each side absorbs rounding.
        const double min_root = options.margin + 1 - lo[c];
        const double max_root = extent[c] - 2 - options.margin - hi[c];
        if (min_root > max_root) {
          throw GenerationError("grid " + std::to_string(height) + "x" +
                                std::to_string(width) +
                                " is too small to fit the skeleton");
        }
        roots[r][c] = min_root + (max_root - min_root) * 0.5 * (1.0 + unit(rng));
      }
    }
  }

  GeneratedTrack out{JointTrack(frames, parts), {}};
  std::vector<Vec2> current = pose(sk, roots, angles, parts);
  std::vector<Vec2> shown = rounded(current);
  std::vector<double> spin(sk.bones.size());
  for (double& s : spin) s = options.max_angular_velocity * unit(rng);
  Vec2 drift = {0.5 * options.max_velocity * unit(rng),
                0.5 * options.max_velocity * unit(rng)};

  for (int t = 0; t < frames; ++t) {
    if (t > 0) {
      bool moved = false;
      double damp = 1.0;
      for (int attempt = 0; attempt < 24 && !moved; ++attempt, damp *= 0.5) {
        std::vector<Vec2> next_roots = roots;
        std::vector<double> next_angles = angles;
        for (Vec2& r : next_roots) {
          r[0] += damp * drift[0];
          r[1] += damp * drift[1];
        }
        for (std::size_t b = 0; b < angles.size(); ++b) {
          next_angles[b] += damp * spin[b];
        }
        const std::vector<Vec2> cand = pose(sk, next_roots, next_angles, parts);
        const std::vector<Vec2> cand_shown = rounded(cand);
        if (!inside(cand_shown, height, width, options.margin)) {
          // Head back the other way next time.
          drift = {-drift[0], -drift[1]};
          continue;
        }
        bool slow = true;
        for (int k = 0; k < parts; ++k) {
          const double d = std::hypot(cand_shown[k][0] - shown[k][0],
                                      cand_shown[k][1] - shown[k][1]);
          if (d > options.max_velocity) slow = false;
        }
        if (!slow) continue;
        roots = next_roots;
        angles = next_angles;
        current = cand;
        shown = cand_shown;
        moved = true;
      }
      // Keep joints near their rest directions.
      for (std::size_t b = 0; b < angles.size(); ++b) {
        if (std::abs(angles[b] - sk.bones[b].rest_angle) > 2.0 * options.angle_jitter) {
          spin[b] = -std::copysign(std::abs(spin[b]), angles[b] - sk.bones[b].rest_angle);
        }
      }
    }
    for (int k = 0; k < parts; ++k) {
      out.track.at(t, k) = {shown[k][0], shown[k][1], true};
    }
  }
  if (!inside(shown, height, width, options.margin)) {
    throw GenerationError("generated pose left the grid");
  }
  constexpr double kRounding = std::numbers::sqrt2;
  for (const Bone& b : sk.bones) {
    out.bands.push_back({b.parent, b.child, b.length - kRounding, b.length + kRounding});
  }
  return out;
}

HeatmapSequence render_unaries(const JointTrack& track, const PartGraph& graph,
                               int height, int width, const CorruptionSpec& spec,
                               double peak_sigma) {
  if (spec.occlusion_prob < 0 || spec.occlusion_prob > 1 ||
      spec.distractor_prob < 0 || spec.distractor_prob > 1 ||
      spec.blur_sigma < 0 || spec.noise_sigma < 0) {
    throw ArgumentError("corruption probabilities must lie in [0,1] and sigmas >= 0");
  }
  if (graph.part_count() != track.parts()) {
    throw ArgumentError("track and graph disagree on the part count");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  HeatmapSequence out(track.frames(), track.parts(), height, width);
  for (int t = 0; t < track.frames(); ++t) {
    for (int k = 0; k < track.parts(); ++k) {
      Heatmap& m = out.at(t, k);
      const Joint& j = track.at(t, k);
      // Draw every random decision even when its probability is 0 so one
      // knob does not reshuffle the others.
      const bool occluded = coin(rng) < spec.occlusion_prob;
      const bool distracted = coin(rng) < spec.distractor_prob;
      if (j.visible && !occluded) add_gaussian(m, j.x, j.y, peak_sigma);
      const int twin = graph.symmetric_twin(k);
      if (distracted && twin >= 0 && track.at(t, twin).visible) {
        add_gaussian(m, track.at(t, twin).x, track.at(t, twin).y, peak_sigma);
      }
      gaussian_blur(m, spec.blur_sigma);
      if (spec.noise_sigma > 0.0) {
        for (double& v : m.values()) v += spec.noise_sigma * noise(rng);
      }
    }
  }
  return out;
}

FlowSet derive_flows(const JointTrack& track, int height, int width,
                     double flow_noise, std::uint64_t seed) {
  const int frames = track.frames();
  std::vector<FlowField> fields;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  // Displacements known at `anchor` joints, blended with 1/d^4 weights.
  auto blend = [&](int anchor_frame, int other_frame) {
    FlowField f(height, width);
    const int parts = track.parts();
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double wsum = 0.0, dx = 0.0, dy = 0.0;
        double exact_n = 0.0, exact_dx = 0.0, exact_dy = 0.0;
        for (int k = 0; k < parts; ++k) {
          const Joint& a = track.at(anchor_frame, k);
          const Joint& o = track.at(other_frame, k);
          const double ddx = o.x - a.x;
          const double ddy = o.y - a.y;
          const double r2 = (x - a.x) * (x - a.x) + (y - a.y) * (y - a.y);
          if (r2 == 0.0) {
            exact_n += 1.0;
            exact_dx += ddx;
            exact_dy += ddy;
            continue;
          }
          const double wt = 1.0 / (r2 * r2);
          wsum += wt;
          dx += wt * ddx;
          dy += wt * ddy;
        }
        if (exact_n > 0.0) {
          f.set(x, y, exact_dx / exact_n, exact_dy / exact_n);
        } else {
          f.set(x, y, dx / wsum, dy / wsum);
        }
      }
    }
    if (flow_noise > 0.0) {
      for (double& v : f.dx_values()) v += flow_noise * noise(rng);
      for (double& v : f.dy_values()) v += flow_noise * noise(rng);
    }
    return f;
  };

  for (int t = 0; t + 1 < frames; ++t) {
    fields.push_back(blend(t + 1, t));  // target t+1, source t
    fields.push_back(blend(t, t + 1));  // target t, source t+1
  }
  return FlowSet(frames, std::move(fields));
}

SyntheticSlice generate_slice(const PartGraph& graph, const SliceOptions& options,
                              std::uint64_t seed) {
  // Independent streams for the track, corruption and flow noise.
  std::seed_seq seq{seed, std::uint64_t{0x7468696eu}};
  std::array<std::uint64_t, 3> seeds{};
  {
    std::array<std::uint32_t, 6> raw{};
    seq.generate(raw.begin(), raw.end());
    for (int i = 0; i < 3; ++i) {
      seeds[i] = (static_cast<std::uint64_t>(raw[2 * i]) << 32) | raw[2 * i + 1];
    }
  }
  SyntheticSlice s;
  s.spec = options.corruption;
  s.spec.seed = seeds[1] ^ options.corruption.seed;
  s.track = generate_tracks(graph, options.frames, options.height, options.width,
                            seeds[0], options.track)
                .track;
  s.unaries = render_unaries(s.track, graph, options.height, options.width,
                             s.spec, options.peak_sigma);
  s.flows = derive_flows(s.track, options.height, options.width,
                         options.flow_noise, seeds[2]);
  return s;
}

}  // namespace thinslice
