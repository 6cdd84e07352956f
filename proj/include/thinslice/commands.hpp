#pragma once

// The synth / infer / train / eval / check pipeline behind the CLI. Each
// stage reads and writes plain files so stages can run independently.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "thinslice/evaluation.hpp"
#include "thinslice/graph.hpp"
#include "thinslice/inference.hpp"
#include "thinslice/learning.hpp"
#include "thinslice/synthetic.hpp"
#include <json.hpp>

namespace thinslice {

struct RunConfig {
  GraphSpec graph = builtin_graph_spec("penn13");
  SliceOptions slice;
  int slices = 50;
  std::uint64_t seed = 0;
  InferenceConfig inference;
  TrainConfig train;
  /// Spring checkpoint used by `infer`; initial springs when absent.
  std::optional<std::filesystem::path> params;
};

/// Unknown keys anywhere raise ConfigError. Relative paths resolve against
/// `base_dir`. `graph` may be a built-in name, an inline spec or a JSON path.
RunConfig run_config_from_json(const nlohmann::json& doc,
                               const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json run_config_to_json(const RunConfig& config);

enum class Model { kBaseline, kSpatial, kSpatioTemporal };

/// "baseline", "s-infer" or "st-infer".
Model parse_model(std::string_view name);
std::string model_name(Model model);

/// baseline: unary argmax; s-infer: spatial edges only, every frame on its
/// own; st-infer: the full slice graph.
JointTrack predict(Model model, const HeatmapSequence& unaries,
                   const FlowSet& flows, const PartGraph& graph,
                   const SpringParams& params, const InferenceConfig& config);

struct SliceEntry {
  std::string id;
  std::filesystem::path unaries;
  std::filesystem::path flows;
  std::filesystem::path track;
};

struct Manifest {
  GraphSpec graph;
  int frames = 0;
  int height = 0;
  int width = 0;
  bool clean = true;
  std::vector<SliceEntry> slices;
};

/// Paths in the result are absolute (resolved against the manifest's folder).
Manifest load_manifest(const std::filesystem::path& path);

/// Seed of slice `index` in a dataset generated with `seed`.
std::uint64_t slice_seed(std::uint64_t seed, int index);

/// Writes slice_NNNN.{hmsq,flsq,json} and manifest.json into `out_dir`;
/// returns the manifest path.
std::filesystem::path cmd_synth(const RunConfig& config,
                                const std::filesystem::path& out_dir,
                                int threads = 1);

struct Predictions {
  std::string model;
  std::vector<std::pair<std::string, JointTrack>> slices;
};

nlohmann::json predictions_to_json(const Predictions& p);
Predictions predictions_from_json(const nlohmann::json& doc);

/// Predicts every manifest slice and writes the predictions JSON to `out`.
Predictions cmd_infer(const RunConfig& config,
                      const std::filesystem::path& manifest_path, Model model,
                      const std::filesystem::path& out, int threads = 1);

/// Trains on every manifest slice; writes params.json and loss.csv into
/// `out_dir`.
TrainResult cmd_train(const RunConfig& config,
                      const std::filesystem::path& manifest_path,
                      const std::filesystem::path& out_dir);

/// PCK curves for each predictions file, then the report files in `out_dir`.
std::vector<ModelCurve> cmd_eval(
    const std::filesystem::path& manifest_path,
    const std::vector<std::filesystem::path>& prediction_paths,
    const std::vector<double>& alphas, const std::filesystem::path& out_dir);

/// Calls body(i) for i in [0, n) on up to `threads` workers; rethrows the
/// first failure by index.
void parallel_for(int n, int threads, const std::function<void(int)>& body);

}  // namespace thinslice
