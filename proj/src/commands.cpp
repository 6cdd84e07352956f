#include "thinslice/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "thinslice/errors.hpp"
#include "thinslice/io.hpp"

namespace thinslice {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void expect_keys(const json& obj, std::initializer_list<const char*> allowed,
                 const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) throw ConfigError("unknown key \"" + key + "\" in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& into, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    into = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

InferenceMode parse_mode(const std::string& s) {
  if (s == "paper") return InferenceMode::kPaper;
  if (s == "bp") return InferenceMode::kBp;
  throw ConfigError("inference.mode must be \"paper\" or \"bp\", got \"" + s + "\"");
}

const char* mode_name(InferenceMode m) {
  return m == InferenceMode::kBp ? "bp" : "paper";
}

json corruption_to_json(const CorruptionSpec& c) {
  return {{"occlusion_prob", c.occlusion_prob},
          {"distractor_prob", c.distractor_prob},
          {"blur_sigma", c.blur_sigma},
          {"noise_sigma", c.noise_sigma}};
}

}  // namespace

RunConfig run_config_from_json(const json& doc, const fs::path& base_dir) {
  expect_keys(doc,
              {"graph", "slices", "seed", "frames", "height", "width", "peak_sigma",
               "flow_noise", "corruption", "track", "inference", "train", "params"},
              "config");
  RunConfig c;
  if (doc.contains("graph")) {
    const json& g = doc.at("graph");
    try {
      if (g.is_object()) {
        c.graph = graph_spec_from_json(g);
      } else if (g.is_string()) {
        const std::string s = g.get<std::string>();
        if (s.size() > 5 && s.ends_with(".json")) {
          const fs::path p = resolve(base_dir, s);
          if (!fs::exists(p)) throw ConfigError("graph file " + p.string() + " does not exist");
          c.graph = graph_spec_from_json(read_json_file(p));
        } else {
          c.graph = builtin_graph_spec(s);
        }
      } else {
        throw ConfigError("config.graph must be a name, a path or an object");
      }
    } catch (const SpecError& e) {
      throw ConfigError(std::string("config.graph: ") + e.what());
    }
  }
  read(doc, "slices", c.slices, "config");
  read(doc, "seed", c.seed, "config");
  read(doc, "frames", c.slice.frames, "config");
  read(doc, "height", c.slice.height, "config");
  read(doc, "width", c.slice.width, "config");
  read(doc, "peak_sigma", c.slice.peak_sigma, "config");
  read(doc, "flow_noise", c.slice.flow_noise, "config");
  if (doc.contains("corruption")) {
    const json& j = doc.at("corruption");
    expect_keys(j, {"occlusion_prob", "distractor_prob", "blur_sigma", "noise_sigma"},
                "config.corruption");
    CorruptionSpec& s = c.slice.corruption;
    read(j, "occlusion_prob", s.occlusion_prob, "config.corruption");
    read(j, "distractor_prob", s.distractor_prob, "config.corruption");
    read(j, "blur_sigma", s.blur_sigma, "config.corruption");
    read(j, "noise_sigma", s.noise_sigma, "config.corruption");
  }
  if (doc.contains("track")) {
    const json& j = doc.at("track");
    expect_keys(j, {"scale", "bone_jitter", "angle_jitter", "max_velocity",
                    "max_angular_velocity", "margin"},
                "config.track");
    TrackOptions& t = c.slice.track;
    read(j, "scale", t.scale, "config.track");
    read(j, "bone_jitter", t.bone_jitter, "config.track");
    read(j, "angle_jitter", t.angle_jitter, "config.track");
    read(j, "max_velocity", t.max_velocity, "config.track");
    read(j, "max_angular_velocity", t.max_angular_velocity, "config.track");
    read(j, "margin", t.margin, "config.track");
  }
  if (doc.contains("inference")) {
    const json& j = doc.at("inference");
    expect_keys(j, {"iterations", "mode", "normalize"}, "config.inference");
    read(j, "iterations", c.inference.iterations, "config.inference");
    read(j, "normalize", c.inference.normalize, "config.inference");
    std::string mode = mode_name(c.inference.mode);
    read(j, "mode", mode, "config.inference");
    c.inference.mode = parse_mode(mode);
  }
  c.train.seed = c.seed;
  if (doc.contains("train")) {
    const json& j = doc.at("train");
    expect_keys(j, {"learning_rate", "lr_decay_factor", "decay_interval", "epochs",
                    "hinge_radius", "loss", "gt_sigma", "mean_over_pixels", "seed"},
                "config.train");
    TrainConfig& t = c.train;
    read(j, "learning_rate", t.learning_rate, "config.train");
    read(j, "lr_decay_factor", t.lr_decay_factor, "config.train");
    read(j, "decay_interval", t.decay_interval, "config.train");
    read(j, "epochs", t.epochs, "config.train");
    read(j, "hinge_radius", t.hinge_radius, "config.train");
    read(j, "gt_sigma", t.gt_sigma, "config.train");
    read(j, "mean_over_pixels", t.mean_over_pixels, "config.train");
    read(j, "seed", t.seed, "config.train");
    std::string loss = t.loss == LossKind::kHinge ? "hinge" : "l2";
    read(j, "loss", loss, "config.train");
    if (loss != "hinge" && loss != "l2") {
      throw ConfigError("config.train.loss must be \"hinge\" or \"l2\"");
    }
    t.loss = loss == "hinge" ? LossKind::kHinge : LossKind::kL2;
  }
  c.train.inference = c.inference;
  if (doc.contains("params")) {
    std::string p;
    read(doc, "params", p, "config");
    c.params = resolve(base_dir, p);
    if (!fs::exists(*c.params)) {
      throw ConfigError("params file " + c.params->string() + " does not exist");
    }
  }
  if (c.slices < 1 || c.slice.frames < 1 || c.slice.height < 1 || c.slice.width < 1) {
    throw ConfigError("slices, frames, height and width must be positive");
  }
  if (!(c.train.learning_rate > 0.0) || !(c.train.hinge_radius >= 1.0) ||
      c.train.epochs < 0 || c.train.decay_interval < 1) {
    throw ConfigError("train needs learning_rate > 0, hinge_radius >= 1, epochs >= 0 "
                      "and decay_interval >= 1");
  }
  if (c.inference.iterations < 1) throw ConfigError("inference.iterations must be >= 1");
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config " + path.string() + " does not exist");
  json doc;
  try {
    doc = read_json_file(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return run_config_from_json(doc, path.parent_path());
}

json run_config_to_json(const RunConfig& c) {
  json doc = {
      {"graph", graph_spec_to_json(c.graph)},
      {"slices", c.slices},
      {"seed", c.seed},
      {"frames", c.slice.frames},
      {"height", c.slice.height},
      {"width", c.slice.width},
      {"peak_sigma", c.slice.peak_sigma},
      {"flow_noise", c.slice.flow_noise},
      {"corruption", corruption_to_json(c.slice.corruption)},
      {"track",
       {{"scale", c.slice.track.scale},
        {"bone_jitter", c.slice.track.bone_jitter},
        {"angle_jitter", c.slice.track.angle_jitter},
        {"max_velocity", c.slice.track.max_velocity},
        {"max_angular_velocity", c.slice.track.max_angular_velocity},
        {"margin", c.slice.track.margin}}},
      {"inference",
       {{"iterations", c.inference.iterations},
        {"mode", mode_name(c.inference.mode)},
        {"normalize", c.inference.normalize}}},
      {"train",
       {{"learning_rate", c.train.learning_rate},
        {"lr_decay_factor", c.train.lr_decay_factor},
        {"decay_interval", c.train.decay_interval},
        {"epochs", c.train.epochs},
        {"hinge_radius", c.train.hinge_radius},
        {"loss", c.train.loss == LossKind::kHinge ? "hinge" : "l2"},
        {"gt_sigma", c.train.gt_sigma},
        {"mean_over_pixels", c.train.mean_over_pixels},
        {"seed", c.train.seed}}}};
  if (c.params) doc["params"] = c.params->string();
  return doc;
}

Model parse_model(std::string_view name) {
  if (name == "baseline") return Model::kBaseline;
  if (name == "s-infer") return Model::kSpatial;
  if (name == "st-infer") return Model::kSpatioTemporal;
  throw UsageError("unknown mode \"" + std::string(name) +
                   "\" (expected baseline, s-infer or st-infer)");
}

std::string model_name(Model model) {
  switch (model) {
    case Model::kBaseline: return "baseline";
    case Model::kSpatial: return "s-infer";
    case Model::kSpatioTemporal: return "st-infer";
  }
  return "";
}

JointTrack predict(Model model, const HeatmapSequence& unaries,
                   const FlowSet& flows, const PartGraph& graph,
                   const SpringParams& params, const InferenceConfig& config) {
  const int frames = unaries.frames();
  const int parts = unaries.parts();
  switch (model) {
    case Model::kBaseline:
      return decode({unaries.maps().begin(), unaries.maps().end()}, frames, parts);
    case Model::kSpatial: {
      JointTrack out(frames, parts);
      const SliceModel single(graph, 1, unaries.height(), unaries.width(), FlowSet(1, {}));
      for (int t = 0; t < frames; ++t) {
        HeatmapSequence one(1, parts, unaries.height(), unaries.width());
        for (int k = 0; k < parts; ++k) one.at(0, k) = unaries.at(t, k);
        const InferenceResult r = infer_slice(one, single, params, config);
        for (int k = 0; k < parts; ++k) out.at(t, k) = r.track.at(0, k);
      }
      return out;
    }
    case Model::kSpatioTemporal:
      return infer_slice(unaries, flows, graph, params, config).track;
  }
  return {};
}

Manifest load_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("manifest " + path.string() + " does not exist");
  const json doc = read_json_file(path);
  const fs::path base = path.parent_path();
  Manifest m;
  try {
    if (doc.at("version").get<int>() != 1) throw ConfigError("unsupported manifest version");
    m.graph = graph_spec_from_json(doc.at("graph"));
    m.frames = doc.at("frames").get<int>();
    m.height = doc.at("height").get<int>();
    m.width = doc.at("width").get<int>();
    m.clean = doc.at("clean").get<bool>();
    for (const json& s : doc.at("slices")) {
      m.slices.push_back({s.at("id").get<std::string>(),
                          resolve(base, s.at("unaries").get<std::string>()),
                          resolve(base, s.at("flows").get<std::string>()),
                          resolve(base, s.at("track").get<std::string>())});
    }
  } catch (const json::exception& e) {
    throw ConfigError("malformed manifest " + path.string() + ": " + e.what());
  } catch (const SpecError& e) {
    throw ConfigError("manifest " + path.string() + ": " + e.what());
  }
  return m;
}

std::uint64_t slice_seed(std::uint64_t seed, int index) {
  // splitmix64 of the (seed, index) pair
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  const int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex mu;
  int failed_at = n;
  std::exception_ptr failure;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (i < failed_at) {
            failed_at = i;
            failure = std::current_exception();
          }
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

fs::path cmd_synth(const RunConfig& config, const fs::path& out_dir, int threads) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw ConfigError("cannot create " + out_dir.string() + ": " + ec.message());
  const PartGraph graph = build_graph(config.graph);
  std::vector<std::string> ids(static_cast<std::size_t>(config.slices));
  parallel_for(config.slices, threads, [&](int i) {
    char id[32];
    std::snprintf(id, sizeof id, "slice_%04d", i);
    const SyntheticSlice s = generate_slice(graph, config.slice, slice_seed(config.seed, i));
    save_heatmap_sequence(s.unaries, out_dir / (std::string(id) + ".hmsq"));
    if (!s.flows.empty()) save_flow_set(s.flows, out_dir / (std::string(id) + ".flsq"));
    save_track(s.track, out_dir / (std::string(id) + ".json"));
    ids[static_cast<std::size_t>(i)] = id;
  });
  json slices = json::array();
  for (const std::string& id : ids) {
    slices.push_back({{"id", id},
                      {"unaries", id + ".hmsq"},
                      {"flows", id + ".flsq"},
                      {"track", id + ".json"}});
  }
  const json manifest = {{"version", 1},
                         {"graph", graph_spec_to_json(config.graph)},
                         {"frames", config.slice.frames},
                         {"height", config.slice.height},
                         {"width", config.slice.width},
                         {"seed", config.seed},
                         {"clean", config.slice.corruption.clean()},
                         {"corruption", corruption_to_json(config.slice.corruption)},
                         {"flow_noise", config.slice.flow_noise},
                         {"slices", slices}};
  const fs::path path = out_dir / "manifest.json";
  write_json_file(manifest, path);
  return path;
}

json predictions_to_json(const Predictions& p) {
  json slices = json::array();
  for (const auto& [id, track] : p.slices) {
    slices.push_back({{"id", id}, {"track", track_to_json(track)}});
  }
  return {{"model", p.model}, {"slices", slices}};
}

Predictions predictions_from_json(const json& doc) {
  Predictions p;
  try {
    p.model = doc.at("model").get<std::string>();
    for (const json& s : doc.at("slices")) {
      p.slices.emplace_back(s.at("id").get<std::string>(), track_from_json(s.at("track")));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed predictions: ") + e.what());
  }
  return p;
}

namespace {

SpringParams load_params(const RunConfig& config, const PartGraph& graph) {
  if (!config.params) return init_spring_params(graph);
  try {
    return clamp_spring_params(params_from_json(graph, read_json_file(*config.params)));
  } catch (const SpecError& e) {
    throw ConfigError(config.params->string() + ": " + e.what());
  }
}

FlowSet load_flows_for(const SliceEntry& s, int frames) {
  if (!fs::exists(s.flows)) return FlowSet(frames, {});
  return load_flow_set(s.flows, frames);
}

}  // namespace

Predictions cmd_infer(const RunConfig& config, const fs::path& manifest_path,
                      Model model, const fs::path& out, int threads) {
  const Manifest m = load_manifest(manifest_path);
  const PartGraph graph = build_graph(m.graph);
  const SpringParams params = load_params(config, graph);
  if (params.springs.size() != graph.slots().size()) {
    throw ConfigError("params do not match the manifest graph");
  }
  Predictions p{model_name(model), std::vector<std::pair<std::string, JointTrack>>(m.slices.size())};
  parallel_for(static_cast<int>(m.slices.size()), threads, [&](int i) {
    const SliceEntry& s = m.slices[static_cast<std::size_t>(i)];
    const HeatmapSequence unaries = load_heatmap_sequence(s.unaries);
    const FlowSet flows = model == Model::kSpatioTemporal ? load_flows_for(s, unaries.frames())
                                                          : FlowSet(unaries.frames(), {});
    try {
      p.slices[static_cast<std::size_t>(i)] = {
          s.id, predict(model, unaries, flows, graph, params, config.inference)};
    } catch (const ConfigError& e) {
      throw ConfigError(s.id + ": " + e.what());
    }
  });
  if (!out.empty()) {
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_json_file(predictions_to_json(p), out);
  }
  return p;
}

TrainResult cmd_train(const RunConfig& config, const fs::path& manifest_path,
                      const fs::path& out_dir) {
  const Manifest m = load_manifest(manifest_path);
  const PartGraph graph = build_graph(m.graph);
  std::vector<TrainingSlice> data;
  for (const SliceEntry& s : m.slices) {
    const HeatmapSequence unaries = load_heatmap_sequence(s.unaries);
    data.push_back({unaries, load_flows_for(s, unaries.frames()), load_track(s.track)});
  }
  TrainResult r = sgd_train(data, graph, config.train, load_params(config, graph));
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_json_file(params_to_json(graph, r.params), out_dir / "params.json");
    write_text_file(loss_trace_csv(r.trace), out_dir / "loss.csv");
  }
  return r;
}

std::vector<ModelCurve> cmd_eval(const fs::path& manifest_path,
                                 const std::vector<fs::path>& prediction_paths,
                                 const std::vector<double>& alphas,
                                 const fs::path& out_dir) {
  if (prediction_paths.empty()) throw UsageError("eval needs at least one predictions file");
  if (alphas.empty() || !std::is_sorted(alphas.begin(), alphas.end())) {
    throw UsageError("alphas must be a non-empty ascending list");
  }
  const Manifest m = load_manifest(manifest_path);
  const PartGraph graph = build_graph(m.graph);
  std::vector<JointTrack> truth;
  for (const SliceEntry& s : m.slices) truth.push_back(load_track(s.track));

  std::vector<ModelCurve> curves;
  for (const fs::path& path : prediction_paths) {
    if (!fs::exists(path)) throw ConfigError("predictions " + path.string() + " do not exist");
    const Predictions p = predictions_from_json(read_json_file(path));
    std::map<std::string, const JointTrack*> by_id;
    for (const auto& [id, track] : p.slices) by_id[id] = &track;
    std::vector<PckAccumulator> acc;
    for (double a : alphas) acc.emplace_back(graph.part_count(), a);
    for (std::size_t i = 0; i < m.slices.size(); ++i) {
      const auto it = by_id.find(m.slices[i].id);
      if (it == by_id.end()) {
        throw ConfigError("predictions " + path.string() + " lack slice " + m.slices[i].id);
      }
      for (PckAccumulator& a : acc) a.add(*it->second, truth[i]);
    }
    ModelCurve c{p.model, {}};
    for (const PckAccumulator& a : acc) c.reports.push_back(a.report());
    if (c.reports.front().skipped_frames > 0) {
      std::fprintf(stderr, "warning: %s: %d frame(s) with fewer than two visible joints skipped\n",
                   p.model.c_str(), c.reports.front().skipped_frames);
    }
    curves.push_back(std::move(c));
  }
  const double table_alpha =
      std::find(alphas.begin(), alphas.end(), 0.2) != alphas.end() ? 0.2 : alphas.back();
  emit_report(curves, graph.part_names(), out_dir, table_alpha);
  return curves;
}

}  // namespace thinslice
