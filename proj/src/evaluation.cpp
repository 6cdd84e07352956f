#include "thinslice/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "thinslice/errors.hpp"
#include "thinslice/io.hpp"

namespace thinslice {

PckAccumulator::PckAccumulator(int parts, double alpha)
    : alpha_(alpha),
      hits_(static_cast<std::size_t>(parts), 0),
      counts_(static_cast<std::size_t>(parts), 0) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ArgumentError("pck alpha must be a positive number");
  }
}

void PckAccumulator::add(const JointTrack& pred, const JointTrack& truth) {
  if (pred.frames() != truth.frames() || pred.parts() != truth.parts() ||
      truth.parts() != static_cast<int>(counts_.size())) {
    throw ArgumentError("pck: prediction and truth disagree on shape");
  }
  for (int t = 0; t < truth.frames(); ++t) {
    double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    int visible = 0;
    for (int k = 0; k < truth.parts(); ++k) {
      const Joint& j = truth.at(t, k);
      if (!j.visible) continue;
      if (visible == 0) {
        x0 = x1 = j.x;
        y0 = y1 = j.y;
      } else {
        x0 = std::min(x0, j.x);
        x1 = std::max(x1, j.x);
        y0 = std::min(y0, j.y);
        y1 = std::max(y1, j.y);
      }
      ++visible;
    }
    if (visible < 2) {
      ++skipped_;
      continue;
    }
    const double threshold = alpha_ * std::max(x1 - x0, y1 - y0);
    for (int k = 0; k < truth.parts(); ++k) {
      const Joint& j = truth.at(t, k);
      if (!j.visible) continue;
      const Joint& p = pred.at(t, k);
      ++counts_[k];
      if (std::hypot(p.x - j.x, p.y - j.y) <= threshold) ++hits_[k];
    }
  }
}

PckReport PckAccumulator::report() const {
  PckReport r;
  r.alpha = alpha_;
  r.counts = counts_;
  r.skipped_frames = skipped_;
  int hits = 0, total = 0;
  for (std::size_t k = 0; k < counts_.size(); ++k) {
    r.per_part.push_back(counts_[k] > 0 ? static_cast<double>(hits_[k]) / counts_[k]
                                        : 0.0);
    hits += hits_[k];
    total += counts_[k];
  }
  r.mean = total > 0 ? static_cast<double>(hits) / total : 0.0;
  return r;
}

PckReport pck(const JointTrack& pred, const JointTrack& truth, double alpha) {
  PckAccumulator acc(truth.parts(), alpha);
  acc.add(pred, truth);
  return acc.report();
}

std::vector<PckReport> pck_curve(const JointTrack& pred, const JointTrack& truth,
                                 const std::vector<double>& alphas) {
  if (!std::is_sorted(alphas.begin(), alphas.end())) {
    throw ArgumentError("pck_curve: alphas must be ascending");
  }
  std::vector<PckReport> out;
  out.reserve(alphas.size());
  for (double a : alphas) out.push_back(pck(pred, truth, a));
  return out;
}

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

void check_parts(const std::vector<ModelCurve>& curves,
                 const std::vector<std::string>& part_names) {
  if (curves.empty()) throw ArgumentError("report needs at least one model");
  for (const ModelCurve& c : curves) {
    if (c.reports.empty()) throw ArgumentError("model " + c.model + " has no reports");
    for (const PckReport& r : c.reports) {
      if (r.per_part.size() != part_names.size()) {
        throw ArgumentError("model " + c.model + " reports a different part count");
      }
    }
  }
}

}  // namespace

std::string pck_csv(const std::vector<ModelCurve>& curves,
                    const std::vector<std::string>& part_names) {
  check_parts(curves, part_names);
  std::string out = "model,part,alpha,accuracy,count\n";
  for (const ModelCurve& c : curves) {
    for (const PckReport& r : c.reports) {
      const std::string alpha = fmt("%.6f", r.alpha);
      int total = 0;
      for (std::size_t k = 0; k < part_names.size(); ++k) {
        out += c.model + "," + part_names[k] + "," + alpha + "," +
               fmt("%.6f", r.per_part[k]) + "," + std::to_string(r.counts[k]) + "\n";
        total += r.counts[k];
      }
      out += c.model + ",mean," + alpha + "," + fmt("%.6f", r.mean) + "," +
             std::to_string(total) + "\n";
    }
  }
  return out;
}

std::string pck_table_csv(const std::vector<ModelCurve>& curves,
                          const std::vector<std::string>& part_names,
                          double alpha) {
  check_parts(curves, part_names);
  std::string out = "model";
  for (const std::string& p : part_names) out += "," + p;
  out += ",mean\n";
  for (const ModelCurve& c : curves) {
    const auto it = std::find_if(c.reports.begin(), c.reports.end(),
                                 [&](const PckReport& r) {
                                   return std::abs(r.alpha - alpha) < 1e-12;
                                 });
    if (it == c.reports.end()) {
      throw ArgumentError("model " + c.model + " has no report at alpha " +
                          fmt("%g", alpha));
    }
    out += c.model;
    for (double v : it->per_part) out += "," + fmt("%.1f", 100.0 * v);
    out += "," + fmt("%.1f", 100.0 * it->mean) + "\n";
  }
  return out;
}

std::string pck_svg(const std::vector<ModelCurve>& curves, int part,
                    const std::string& title) {
  constexpr double kW = 480, kH = 320, kLeft = 56, kRight = 120, kTop = 32,
                   kBottom = 44;
  static const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                        "#9467bd", "#ff7f0e", "#8c564b"};
  double amin = 1e300, amax = -1e300;
  for (const ModelCurve& c : curves) {
    for (const PckReport& r : c.reports) {
      amin = std::min(amin, r.alpha);
      amax = std::max(amax, r.alpha);
    }
  }
  if (amax <= amin) {
    amin -= 0.05;
    amax += 0.05;
  }
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  auto sx = [&](double a) { return kLeft + pw * (a - amin) / (amax - amin); };
  auto sy = [&](double v) { return kTop + ph * (1.0 - v); };

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"320\" "
                  "font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect width=\"480\" height=\"320\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt("%.1f", kLeft) + "\" y=\"20\" font-size=\"13\">" + title +
       "</text>\n";
  s += "<rect x=\"" + fmt("%.1f", kLeft) + "\" y=\"" + fmt("%.1f", kTop) +
       "\" width=\"" + fmt("%.1f", pw) + "\" height=\"" + fmt("%.1f", ph) +
       "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0;
    s += "<text x=\"" + fmt("%.1f", kLeft - 6) + "\" y=\"" + fmt("%.1f", sy(v) + 4) +
         "\" text-anchor=\"end\">" + fmt("%.2f", v) + "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double a = amin + (amax - amin) * i / 4.0;
    s += "<text x=\"" + fmt("%.1f", sx(a)) + "\" y=\"" + fmt("%.1f", kTop + ph + 16) +
         "\" text-anchor=\"middle\">" + fmt("%.3f", a) + "</text>\n";
  }
  s += "<text x=\"" + fmt("%.1f", kLeft + pw / 2) + "\" y=\"" + fmt("%.1f", kH - 8) +
       "\" text-anchor=\"middle\">normalized distance (alpha)</text>\n";
  for (std::size_t m = 0; m < curves.size(); ++m) {
    const char* color = kColors[m % std::size(kColors)];
    std::string pts;
    for (const PckReport& r : curves[m].reports) {
      const double v = part < 0 ? r.mean : r.per_part[static_cast<std::size_t>(part)];
      if (!pts.empty()) pts += " ";
      pts += fmt("%.2f", sx(r.alpha)) + "," + fmt("%.2f", sy(v));
    }
    s += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
         "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
    const double ly = kTop + 14.0 + 16.0 * static_cast<double>(m);
    s += "<line x1=\"" + fmt("%.1f", kW - kRight + 10) + "\" y1=\"" + fmt("%.1f", ly) +
         "\" x2=\"" + fmt("%.1f", kW - kRight + 28) + "\" y2=\"" + fmt("%.1f", ly) +
         "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + fmt("%.1f", kW - kRight + 32) + "\" y=\"" +
         fmt("%.1f", ly + 4) + "\">" + curves[m].model + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::vector<std::filesystem::path> emit_report(
    const std::vector<ModelCurve>& curves,
    const std::vector<std::string>& part_names, const std::filesystem::path& dir,
    double table_alpha) {
  check_parts(curves, part_names);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create report directory " + dir.string() + ": " + ec.message());

  bool have_alpha = true;
  double largest = -1.0;
  for (const ModelCurve& c : curves) {
    bool found = false;
    for (const PckReport& r : c.reports) {
      found = found || std::abs(r.alpha - table_alpha) < 1e-12;
      largest = std::max(largest, r.alpha);
    }
    have_alpha = have_alpha && found;
  }
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const std::string& text) {
    write_text_file(text, dir / name);
    written.push_back(dir / name);
  };
  put("pck.csv", pck_csv(curves, part_names));
  put("table.csv", pck_table_csv(curves, part_names, have_alpha ? table_alpha : largest));
  for (std::size_t k = 0; k < part_names.size(); ++k) {
    put("pck_" + part_names[k] + ".svg",
        pck_svg(curves, static_cast<int>(k), "PCK: " + part_names[k]));
  }
  put("pck_mean.svg", pck_svg(curves, -1, "PCK: mean"));
  return written;
}

}  // namespace thinslice
