#pragma once

// PCK@alpha against per-frame ground-truth boxes, accuracy curves over alpha
// and the CSV/SVG report files.

#include <filesystem>
#include <string>
#include <vector>

#include "thinslice/tensor.hpp"

namespace thinslice {

struct PckReport {
  double alpha = 0.0;
  std::vector<double> per_part;
  /// Count-weighted mean of per_part.
  double mean = 0.0;
  std::vector<int> counts;
  /// Frames dropped because fewer than two joints were visible.
  int skipped_frames = 0;
};

/// Accumulates hits and counts over several slices before turning them into
/// a report.
class PckAccumulator {
 public:
  PckAccumulator(int parts, double alpha);
  void add(const JointTrack& pred, const JointTrack& truth);
  PckReport report() const;

 private:
  double alpha_;
  std::vector<int> hits_;
  std::vector<int> counts_;
  int skipped_ = 0;
};

/// A joint counts as correct when it lies within alpha * max(h, w) of the
/// truth, (h, w) being the box around the frame's visible ground-truth joints.
PckReport pck(const JointTrack& pred, const JointTrack& truth, double alpha);

/// One report per alpha (ascending).
std::vector<PckReport> pck_curve(const JointTrack& pred, const JointTrack& truth,
                                 const std::vector<double>& alphas);

struct ModelCurve {
  std::string model;
  /// Ascending alpha.
  std::vector<PckReport> reports;
};

/// Long-form CSV: model,part,alpha,accuracy,count with one "mean" row per
/// report.
std::string pck_csv(const std::vector<ModelCurve>& curves,
                    const std::vector<std::string>& part_names);

/// Comparison table at one alpha: one row per model, one column per part and
/// a final mean column, values in percent.
std::string pck_table_csv(const std::vector<ModelCurve>& curves,
                          const std::vector<std::string>& part_names,
                          double alpha);

/// Accuracy-vs-alpha chart for one part (`part` = -1 for the mean).
std::string pck_svg(const std::vector<ModelCurve>& curves, int part,
                    const std::string& title);

/// Writes pck.csv, table.csv (at `table_alpha`, or the largest alpha present)
/// and one pck_<part>.svg per part plus pck_mean.svg into `dir`.
std::vector<std::filesystem::path> emit_report(
    const std::vector<ModelCurve>& curves,
    const std::vector<std::string>& part_names, const std::filesystem::path& dir,
    double table_alpha = 0.2);

}  // namespace thinslice
