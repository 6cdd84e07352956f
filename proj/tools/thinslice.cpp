// thinslice: synth | infer | train | eval | check

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "thinslice/commands.hpp"
#include "thinslice/errors.hpp"
#include "thinslice/selfcheck.hpp"

namespace fs = std::filesystem;
using namespace thinslice;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumeric = 2;

std::vector<double> parse_alphas(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos
                                                                           : comma - start);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--alphas: cannot parse \"" + item + "\"");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

RunConfig config_or_default(const std::string& path) {
  return path.empty() ? RunConfig{} : load_run_config(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatio-temporal part-graph inference over thin video slices"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::string mode = "st-infer";
  std::string manifest;
  std::string params;
  std::string alphas = "0.05,0.1,0.2";
  std::vector<std::string> predictions;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 1;
  bool mutate = false;
  double effort = 1.0;

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset and its manifest");
  synth->add_option("--config", config_path, "run config JSON");
  synth->add_option("--out", out, "output directory")->required();

  auto* infer = app.add_subcommand("infer", "predict joint tracks for every manifest slice");
  infer->add_option("--config", config_path, "run config JSON (inference settings, params)");
  infer->add_option("--manifest", manifest, "dataset manifest")->required();
  infer->add_option("--mode", mode, "baseline, s-infer or st-infer");
  infer->add_option("--params", params, "spring checkpoint (overrides the config)");
  infer->add_option("--out", out, "predictions JSON to write")->required();

  auto* train = app.add_subcommand("train", "fit spring weights on a dataset");
  train->add_option("--config", config_path, "run config JSON (train settings)");
  train->add_option("--manifest", manifest, "dataset manifest")->required();
  train->add_option("--out", out, "directory for params.json and loss.csv")->required();

  auto* eval = app.add_subcommand("eval", "PCK tables and curves for prediction files");
  eval->add_option("--manifest", manifest, "dataset manifest")->required();
  eval->add_option("--predictions", predictions, "predictions JSON files")->required();
  eval->add_option("--alphas", alphas, "comma-separated ascending thresholds");
  eval->add_option("--out", out, "report directory")->required();

  auto* check = app.add_subcommand("check", "run the brute-force oracle suites");
  check->add_flag("--mutate-psi-sign", mutate, "flip psi in the distance-transform references");
  check->add_option("--effort", effort, "scale of every suite's case count");

  for (CLI::App* sub : {synth, infer, train, check}) {
    sub->add_option("--seed", seed, "overrides the config seed")
        ->each([&](const std::string&) { seed_given = true; });
  }
  for (CLI::App* sub : {synth, infer}) {
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (synth->parsed()) {
      RunConfig c = config_or_default(config_path);
      if (seed_given) c.seed = seed;
      const fs::path m = cmd_synth(c, out, threads);
      std::printf("%s\n", m.string().c_str());
    } else if (infer->parsed()) {
      RunConfig c = config_or_default(config_path);
      if (!params.empty()) {
        if (!fs::exists(params)) throw ConfigError("params file " + params + " does not exist");
        c.params = params;
      }
      const Predictions p = cmd_infer(c, manifest, parse_model(mode), out, threads);
      std::printf("%s: %zu slices -> %s\n", p.model.c_str(), p.slices.size(), out.c_str());
    } else if (train->parsed()) {
      RunConfig c = config_or_default(config_path);
      if (seed_given) c.train.seed = seed;
      const TrainResult r = cmd_train(c, manifest, out);
      std::printf("%zu steps, final loss %.6g -> %s\n", r.trace.size(),
                  r.trace.empty() ? 0.0 : r.trace.back().loss, out.c_str());
    } else if (eval->parsed()) {
      std::vector<fs::path> paths(predictions.begin(), predictions.end());
      const auto curves = cmd_eval(manifest, paths, parse_alphas(alphas), out);
      for (const ModelCurve& c : curves) {
        for (const PckReport& r : c.reports) {
          std::printf("%-10s PCK@%.2f %.4f\n", c.model.c_str(), r.alpha, r.mean);
        }
      }
    } else if (check->parsed()) {
      SelfCheckOptions o;
      if (seed_given) o.seed = seed;
      o.mutate_psi_sign = mutate;
      o.effort = effort;
      const auto results = run_selfcheck(o);
      std::printf("%s", format_selfcheck(results).c_str());
      for (const SuiteResult& r : results) {
        if (!r.passed()) return kExitNumeric;
      }
    }
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return 0;
}
