#include "thinslice/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "thinslice/errors.hpp"

namespace thinslice {

namespace {

using nlohmann::json;

std::vector<std::pair<int, int>> read_pairs(const json& doc, const char* key) {
  std::vector<std::pair<int, int>> out;
  if (!doc.contains(key)) return out;
  for (const auto& e : doc.at(key)) {
    if (!e.is_array() || e.size() != 2) {
      throw SpecError(std::string(key) + " entries must be [i, j] pairs");
    }
    out.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  return out;
}

}  // namespace

GraphSpec graph_spec_from_json(const json& doc) {
  if (!doc.is_object()) throw SpecError("graph spec must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "parts" && key != "limb_edges" && key != "symmetric_pairs" &&
        key != "temporal_offsets") {
      throw SpecError("unknown graph spec key \"" + key + "\"");
    }
  }
  GraphSpec spec;
  try {
    spec.parts = doc.at("parts").get<std::vector<std::string>>();
    spec.limb_edges = read_pairs(doc, "limb_edges");
    spec.symmetric_pairs = read_pairs(doc, "symmetric_pairs");
    if (doc.contains("temporal_offsets")) {
      spec.temporal_offsets = doc.at("temporal_offsets").get<std::vector<int>>();
    }
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed graph spec: ") + e.what());
  }
  return spec;
}

json graph_spec_to_json(const GraphSpec& spec) {
  json limbs = json::array();
  for (auto [a, b] : spec.limb_edges) limbs.push_back({a, b});
  json sym = json::array();
  for (auto [a, b] : spec.symmetric_pairs) sym.push_back({a, b});
  return {{"parts", spec.parts},
          {"limb_edges", limbs},
          {"symmetric_pairs", sym},
          {"temporal_offsets", spec.temporal_offsets}};
}

GraphSpec builtin_graph_spec(std::string_view name) {
  if (name == "penn13") {
    // Penn Action joint order.
    return {{"head", "l_shoulder", "r_shoulder", "l_elbow", "r_elbow",
             "l_wrist", "r_wrist", "l_hip", "r_hip", "l_knee", "r_knee",
             "l_ankle", "r_ankle"},
            {{0, 1}, {0, 2}, {1, 3}, {3, 5}, {2, 4}, {4, 6}, {1, 7}, {2, 8},
             {7, 9}, {9, 11}, {8, 10}, {10, 12}},
            {{1, 2}, {3, 4}, {5, 6}, {7, 8}, {9, 10}, {11, 12}},
            {1}};
  }
  if (name == "toy2") {
    return {{"root", "tip"}, {{0, 1}}, {}, {1}};
  }
  if (name == "toy4") {
    return {{"neck", "pelvis", "l_hand", "r_hand"},
            {{0, 1}, {0, 2}, {0, 3}},
            {{2, 3}},
            {1}};
  }
  throw SpecError("unknown built-in graph \"" + std::string(name) + "\"");
}

PartGraph build_graph(const GraphSpec& spec) {
  const int k = static_cast<int>(spec.parts.size());
  if (k < 1) throw SpecError("graph needs at least one part");
  PartGraph g;
  g.part_names_ = spec.parts;

  std::set<std::pair<int, int>> seen;
  auto add = [&](std::pair<int, int> e, bool symmetric) {
    auto [a, b] = e;
    if (a < 0 || b < 0 || a >= k || b >= k) {
      throw SpecError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                      ") references a part outside [0," + std::to_string(k) +
                      ")");
    }
    if (a == b) {
      throw SpecError("self-loop on part " + std::to_string(a));
    }
    if (!seen.insert({std::min(a, b), std::max(a, b)}).second) {
      throw SpecError("duplicate edge (" + std::to_string(a) + "," +
                      std::to_string(b) + ")");
    }
    g.spatial_.push_back({a, b, symmetric});
  };
  for (auto e : spec.limb_edges) add(e, false);
  for (auto e : spec.symmetric_pairs) add(e, true);

  std::set<int> offsets;
  for (int o : spec.temporal_offsets) {
    if (o < 1) throw SpecError("temporal offsets must be >= 1");
    if (!offsets.insert(o).second) {
      throw SpecError("duplicate temporal offset " + std::to_string(o));
    }
  }
  g.offsets_ = spec.temporal_offsets;

  for (const SpatialEdge& e : g.spatial_) {
    g.slots_.push_back({EdgeKind::kSpatial, e.a, e.b, 0});
    g.slots_.push_back({EdgeKind::kSpatial, e.b, e.a, 0});
  }
  for (int part = 0; part < k; ++part) {
    for (int o : g.offsets_) {
      g.slots_.push_back({EdgeKind::kTemporal, part, part, o});
      g.slots_.push_back({EdgeKind::kTemporal, part, part, -o});
    }
  }
  return g;
}

int PartGraph::spatial_slot(int from, int to) const {
  for (std::size_t e = 0; e < spatial_.size(); ++e) {
    if (spatial_[e].a == from && spatial_[e].b == to) return 2 * static_cast<int>(e);
    if (spatial_[e].b == from && spatial_[e].a == to) return 2 * static_cast<int>(e) + 1;
  }
  return -1;
}

int PartGraph::temporal_slot(int part, int offset) const {
  const auto it = std::find(offsets_.begin(), offsets_.end(), std::abs(offset));
  if (it == offsets_.end() || offset == 0 || part < 0 || part >= part_count()) {
    return -1;
  }
  const int oi = static_cast<int>(it - offsets_.begin());
  const int base = 2 * static_cast<int>(spatial_.size());
  return base + (part * static_cast<int>(offsets_.size()) + oi) * 2 +
         (offset > 0 ? 0 : 1);
}

int PartGraph::symmetric_twin(int part) const {
  for (const SpatialEdge& e : spatial_) {
    if (!e.symmetric) continue;
    if (e.a == part) return e.b;
    if (e.b == part) return e.a;
  }
  return -1;
}

int PartGraph::part_index(std::string_view name) const {
  for (std::size_t i = 0; i < part_names_.size(); ++i) {
    if (part_names_[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<EdgeInstance> PartGraph::unroll(int frames) const {
  std::vector<EdgeInstance> out;
  for (int t = 0; t < frames; ++t) {
    for (std::size_t e = 0; e < spatial_.size(); ++e) {
      const int base = static_cast<int>(out.size());
      const int slot = 2 * static_cast<int>(e);
      out.push_back({EdgeKind::kSpatial, slot, t, spatial_[e].a, t,
                     spatial_[e].b, base + 1});
      out.push_back({EdgeKind::kSpatial, slot + 1, t, spatial_[e].b, t,
                     spatial_[e].a, base});
    }
  }
  for (int part = 0; part < part_count(); ++part) {
    for (int o : offsets_) {
      for (int t = 0; t + o < frames; ++t) {
        const int base = static_cast<int>(out.size());
        out.push_back({EdgeKind::kTemporal, temporal_slot(part, o), t, part,
                       t + o, part, base + 1});
        out.push_back({EdgeKind::kTemporal, temporal_slot(part, -o), t + o,
                       part, t, part, base});
      }
    }
  }
  return out;
}

SpringParams init_spring_params(const PartGraph& graph) {
  return {std::vector<Spring>(static_cast<std::size_t>(graph.slot_count()),
                              Spring{})};
}

SpringParams clamp_spring_params(const SpringParams& params) {
  SpringParams out = params;
  for (std::size_t i = 0; i < out.springs.size(); ++i) {
    Spring& s = out.springs[i];
    for (double v : s.as_array()) {
      if (!std::isfinite(v)) {
        throw NumericError("non-finite spring parameter in slot " +
                           std::to_string(i));
      }
    }
    s.x_quad = std::max(s.x_quad, kMinQuadratic);
    s.y_quad = std::max(s.y_quad, kMinQuadratic);
  }
  return out;
}

json params_to_json(const PartGraph& graph, const SpringParams& params) {
  if (params.springs.size() != graph.slots().size()) {
    throw ArgumentError("parameter count does not match the graph");
  }
  json edges = json::array();
  for (std::size_t i = 0; i < params.springs.size(); ++i) {
    const ParamSlot& s = graph.slots()[i];
    json e = {{"from", s.from},
              {"to", s.to},
              {"kind", s.kind == EdgeKind::kSpatial ? "spatial" : "temporal"}};
    if (s.kind == EdgeKind::kTemporal) e["offset"] = s.offset;
    e["w"] = params.springs[i].as_array();
    edges.push_back(std::move(e));
  }
  return {{"edges", edges}};
}

SpringParams params_from_json(const PartGraph& graph, const json& doc) {
  SpringParams out;
  out.springs.resize(graph.slots().size());
  std::vector<bool> filled(graph.slots().size(), false);
  try {
    for (const auto& e : doc.at("edges")) {
      const std::string kind = e.at("kind").get<std::string>();
      const int from = e.at("from").get<int>();
      const int to = e.at("to").get<int>();
      int slot = -1;
      if (kind == "spatial") {
        slot = graph.spatial_slot(from, to);
      } else if (kind == "temporal") {
        if (from != to) throw SpecError("temporal edges link one part");
        slot = graph.temporal_slot(from, e.at("offset").get<int>());
      } else {
        throw SpecError("unknown edge kind \"" + kind + "\"");
      }
      if (slot < 0) {
        throw SpecError("params reference an edge " + std::to_string(from) +
                        "->" + std::to_string(to) + " absent from the graph");
      }
      if (filled[static_cast<std::size_t>(slot)]) {
        throw SpecError("duplicate parameters for edge " + std::to_string(from) +
                        "->" + std::to_string(to));
      }
      filled[static_cast<std::size_t>(slot)] = true;
      out.springs[static_cast<std::size_t>(slot)] =
          Spring::from_array(e.at("w").get<std::array<double, 4>>());
    }
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed params JSON: ") + e.what());
  }
  if (std::find(filled.begin(), filled.end(), false) != filled.end()) {
    throw SpecError("params JSON does not cover every edge of the graph");
  }
  return out;
}

}  // namespace thinslice
