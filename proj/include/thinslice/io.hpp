#pragma once

// Binary containers for heatmap stacks ("HMSQ") and flow sets ("FLSQ"), plus
// JSON joint tracks. Binary payloads are little-endian float32.

#include <cstdint>
#include <filesystem>
#include <string>

#include "thinslice/tensor.hpp"
#include <json.hpp>

namespace thinslice {

inline constexpr std::uint32_t kContainerVersion = 1;

void save_heatmap_sequence(const HeatmapSequence& seq,
                           const std::filesystem::path& path);
HeatmapSequence load_heatmap_sequence(const std::filesystem::path& path);

/// Writes every stored field of the set; P in the header is fields().size().
void save_flow_set(const FlowSet& flows, const std::filesystem::path& path);
/// `frames` is the slice length the flows belong to.
FlowSet load_flow_set(const std::filesystem::path& path, int frames);

nlohmann::json track_to_json(const JointTrack& track);
JointTrack track_from_json(const nlohmann::json& doc);
void save_track(const JointTrack& track, const std::filesystem::path& path);
JointTrack load_track(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json_file(const nlohmann::json& doc,
                     const std::filesystem::path& path);
void write_text_file(const std::string& text,
                     const std::filesystem::path& path);

}  // namespace thinslice
