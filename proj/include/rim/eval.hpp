#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rim/core.hpp"

namespace rim {

struct GroundTruth {
  int frame = 0;
  Label label = Label::wheel;
  BBox bbox;
};

/// Detections in descending score order (ties keep input order) with their
/// TP/FP flags.
struct MatchResult {
  std::vector<std::size_t> order;  // indices into the input detections
  std::vector<double> scores;
  std::vector<bool> tp;
  int n_gt = 0;
  int fn = 0;
};

/// Greedy by score: each detection takes the unmatched ground truth of the same
/// frame and label with the highest IoU >= iou_t. Mixed labels are fine, each
/// detection only competes for boxes of its own label.
MatchResult match_detections(std::span<const Detection> dets, std::span<const GroundTruth> gts, double iou_t);

enum class ApInterpolation { all_point, eleven_point };

struct PrCurve {
  std::vector<double> recall;
  std::vector<double> precision;
  double ap = 0;
  bool defined = true;  // false when there is no ground truth
};

PrCurve average_precision(const std::vector<bool>& tp, int n_gt,
                          ApInterpolation interp = ApInterpolation::all_point);

struct MapResult {
  std::vector<double> thresholds;
  std::vector<double> aps;
  double mean = 0;
  bool defined = true;
};

/// Thresholds lo, lo + step, ... up to hi, each rounded to 1e-6 so that an IoU
/// of exactly 0.7 passes the 0.7 threshold.
MapResult map_range(std::span<const Detection> dets, std::span<const GroundTruth> gts, double t_lo = 0.5,
                    double t_hi = 0.95, double step = 0.05, ApInterpolation interp = ApInterpolation::all_point);

/// Precision / recall at the score cut maximizing F1 (ties to the higher cut).
struct OperatingPoint {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::optional<double> score_threshold;
};
OperatingPoint best_f1(const MatchResult& m);

struct ConfusionMatrix {
  std::array<std::array<long, RimClass::kCount>, RimClass::kCount> counts{};  // [truth][pred]
  long total = 0;
  long correct = 0;

  double accuracy() const { return total ? static_cast<double>(correct) / total : 0.0; }
};

ConfusionMatrix confusion_matrix(std::span<const RimClass> pred, std::span<const RimClass> truth);

/// "98.72%": percentage truncated (not rounded) to two decimals.
std::string format_accuracy(long correct, long total);

struct LabelReport {
  Label label = Label::wheel;
  int n_gt = 0;
  int n_det = 0;
  OperatingPoint op;
  PrCurve curve;  // at IoU 0.5
  double map50 = 0;
  MapResult map50_95;
};

std::vector<LabelReport> evaluate_detections(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                                             std::optional<Label> only = std::nullopt,
                                             ApInterpolation interp = ApInterpolation::all_point);

/// JSON document with one block per label plus their mean.
std::string eval_report_json(const std::vector<LabelReport>& reports, ApInterpolation interp);

/// YOLO annotation lines "class cx cy w h", normalized to the image size.
/// Classes missing from class_map are skipped. Throws DataError naming the
/// line on malformed input.
std::vector<GroundTruth> parse_yolo_labels(const std::string& text, int frame, int image_width, int image_height,
                                           const std::map<int, Label>& class_map);

/// Reads every *.txt in dir in lexicographic order; file k is frame k. Image
/// size comes from a sibling image with the same stem, else the fallback.
std::vector<GroundTruth> load_yolo_dir(const std::filesystem::path& dir, const std::map<int, Label>& class_map,
                                       std::optional<std::pair<int, int>> fallback_size = std::nullopt);

}  // namespace rim
