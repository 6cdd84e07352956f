#include "thinslice/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "thinslice/errors.hpp"

namespace thinslice {

namespace {

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::vector<unsigned char>& bytes,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArgumentError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ArgumentError("write failed for " + path.string());
}

class Writer {
 public:
  void magic(const char (&tag)[5]) { bytes_.insert(bytes_.end(), tag, tag + 4); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back((v >> (8 * i)) & 0xffu);
  }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  const std::vector<unsigned char>& bytes() const { return bytes_; }

 private:
  std::vector<unsigned char> bytes_;
};

class Reader {
 public:
  explicit Reader(std::vector<unsigned char> bytes) : bytes_(std::move(bytes)) {}

  void expect_magic(const char (&tag)[5]) {
    need(4, "magic");
    if (std::memcmp(bytes_.data(), tag, 4) != 0) {
      throw FormatError(std::string("bad magic, expected \"") + tag + "\"", 0);
    }
    pos_ = 4;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  double f32() {
    const std::size_t at = pos_;
    const float f = std::bit_cast<float>(u32("value"));
    if (!std::isfinite(f)) throw FormatError("non-finite value", at);
    return f;
  }
  void expect_end() const {
    if (pos_ != bytes_.size()) {
      throw FormatError("trailing bytes after payload", pos_);
    }
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() < pos_ + n) {
      throw FormatError(std::string("truncated payload reading ") + what, pos_);
    }
  }

  std::vector<unsigned char> bytes_;
  std::size_t pos_ = 0;
};

void check_version(std::uint32_t version) {
  if (version != kContainerVersion) {
    throw FormatError("unsupported version " + std::to_string(version), 4);
  }
}

int checked_dim(std::uint32_t v, const char* name, std::size_t offset) {
  if (v == 0 || v > (1u << 20)) {
    throw FormatError(std::string("invalid dimension ") + name, offset);
  }
  return static_cast<int>(v);
}

}  // namespace

void save_heatmap_sequence(const HeatmapSequence& seq,
                           const std::filesystem::path& path) {
  Writer w;
  w.magic("HMSQ");
  w.u32(kContainerVersion);
  w.u32(seq.frames());
  w.u32(seq.parts());
  w.u32(seq.height());
  w.u32(seq.width());
  for (const Heatmap& map : seq.maps()) {
    for (double v : map.values()) w.f32(v);
  }
  write_bytes(w.bytes(), path);
}

HeatmapSequence load_heatmap_sequence(const std::filesystem::path& path) {
  Reader r(read_bytes(path));
  r.expect_magic("HMSQ");
  check_version(r.u32("version"));
  const int t = checked_dim(r.u32("T"), "T", 8);
  const int k = checked_dim(r.u32("K"), "K", 12);
  const int h = checked_dim(r.u32("H"), "H", 16);
  const int w = checked_dim(r.u32("W"), "W", 20);
  HeatmapSequence seq(t, k, h, w);
  for (Heatmap& map : seq.maps()) {
    for (double& v : map.values()) v = r.f32();
  }
  r.expect_end();
  return seq;
}

void save_flow_set(const FlowSet& flows, const std::filesystem::path& path) {
  Writer w;
  w.magic("FLSQ");
  w.u32(kContainerVersion);
  const auto fields = flows.fields();
  w.u32(static_cast<std::uint32_t>(fields.size()));
  w.u32(fields.empty() ? 1 : fields.front().height());
  w.u32(fields.empty() ? 1 : fields.front().width());
  for (const FlowField& f : fields) {
    for (double v : f.dx_values()) w.f32(v);
    for (double v : f.dy_values()) w.f32(v);
  }
  write_bytes(w.bytes(), path);
}

FlowSet load_flow_set(const std::filesystem::path& path, int frames) {
  Reader r(read_bytes(path));
  r.expect_magic("FLSQ");
  check_version(r.u32("version"));
  const std::uint32_t pairs = r.u32("P");
  const int h = checked_dim(r.u32("H"), "H", 12);
  const int w = checked_dim(r.u32("W"), "W", 16);
  if (pairs > (1u << 16)) throw FormatError("invalid pair count", 8);
  std::vector<FlowField> fields;
  fields.reserve(pairs);
  for (std::uint32_t p = 0; p < pairs; ++p) {
    FlowField f(h, w);
    for (double& v : f.dx_values()) v = r.f32();
    for (double& v : f.dy_values()) v = r.f32();
    fields.push_back(std::move(f));
  }
  r.expect_end();
  return FlowSet(frames, std::move(fields));
}

nlohmann::json track_to_json(const JointTrack& track) {
  nlohmann::json frames = nlohmann::json::array();
  for (int t = 0; t < track.frames(); ++t) {
    nlohmann::json parts = nlohmann::json::array();
    for (int k = 0; k < track.parts(); ++k) {
      const Joint& j = track.at(t, k);
      parts.push_back({{"x", j.x}, {"y", j.y}, {"visible", j.visible}});
    }
    frames.push_back(std::move(parts));
  }
  return frames;
}

JointTrack track_from_json(const nlohmann::json& doc) {
  if (!doc.is_array() || doc.empty() || !doc.front().is_array() ||
      doc.front().empty()) {
    throw ArgumentError("track JSON must be a non-empty array of frames");
  }
  const int frames = static_cast<int>(doc.size());
  const int parts = static_cast<int>(doc.front().size());
  JointTrack track(frames, parts);
  for (int t = 0; t < frames; ++t) {
    const auto& row = doc[static_cast<std::size_t>(t)];
    if (!row.is_array() || static_cast<int>(row.size()) != parts) {
      throw ArgumentError("track frame " + std::to_string(t) +
                          " does not list " + std::to_string(parts) + " joints");
    }
    for (int k = 0; k < parts; ++k) {
      const auto& j = row[static_cast<std::size_t>(k)];
      Joint& out = track.at(t, k);
      try {
        out.x = j.at("x").get<double>();
        out.y = j.at("y").get<double>();
        out.visible = j.at("visible").get<bool>();
      } catch (const nlohmann::json::exception&) {
        throw ArgumentError("track joint (" + std::to_string(t) + ", " +
                            std::to_string(k) + ") needs numeric x, y and a boolean visible");
      }
      if (!std::isfinite(out.x) || !std::isfinite(out.y)) {
        throw ArgumentError("track joint coordinates must be finite");
      }
    }
  }
  return track;
}

void save_track(const JointTrack& track, const std::filesystem::path& path) {
  write_json_file(track_to_json(track), path);
}

JointTrack load_track(const std::filesystem::path& path) {
  return track_from_json(read_json_file(path));
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ArgumentError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_json_file(const nlohmann::json& doc,
                     const std::filesystem::path& path) {
  write_text_file(doc.dump(2) + "\n", path);
}

void write_text_file(const std::string& text,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArgumentError("cannot write " + path.string());
  out << text;
  if (!out) throw ArgumentError("write failed for " + path.string());
}

}  // namespace thinslice
