#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rim/core.hpp"
#include "rim/hough.hpp"
#include "rim/svm.hpp"

namespace rim {

inline constexpr std::string_view kDetectionSchema = "rim-inspect/det-v1";
inline constexpr std::string_view kClassSchema = "rim-inspect/cls-v1";

class DetectionSource {
 public:
  virtual ~DetectionSource() = default;
  /// Detections of one label in one frame. image may be null for sources
  /// that do not look at pixels.
  virtual std::vector<Detection> detect(int frame, const Image* image, Label wanted) const = 0;
  virtual std::string_view name() const = 0;
};

struct WheelHoughParams {
  HoughConfig hough;
  int downscale = 4;
  double blur_sigma = 1.5;
};

/// Hough wheel finder on a full frame. A wheel shows two strong concentric
/// circles (tyre and rim flange), so circles centered inside a larger kept
/// circle are dropped and the outer one wins.
std::vector<Detection> detect_wheels(const Image& frame, const WheelHoughParams& params, int frame_index);

class HoughDetectionSource : public DetectionSource {
 public:
  explicit HoughDetectionSource(WheelHoughParams params) : params_(params) {}
  /// Wheels only; other labels yield nothing.
  std::vector<Detection> detect(int frame, const Image* image, Label wanted) const override;
  std::string_view name() const override { return "hough_internal"; }

 private:
  WheelHoughParams params_;
};

/// JSONL detections, one object per line:
///   {"frame":12,"label":"wheel","bbox":[x,y,w,h],"score":0.97}
/// Lines without "label" are metadata: a header
///   {"schema":"rim-inspect/det-v1","frames":30,"width":1920,"height":1080}
/// or a skipped frame {"frame":7,"skipped":"reason"}.
class ExternalDetections : public DetectionSource {
 public:
  static ExternalDetections load(const std::filesystem::path& path);
  static ExternalDetections parse(std::istream& in, const std::string& origin);

  std::vector<Detection> detect(int frame, const Image* image, Label wanted) const override;
  std::string_view name() const override { return "external_file"; }

  /// Frame count from the header when present, else one past the largest frame.
  int frame_count() const;
  std::optional<int> frame_width() const { return width_; }
  bool skipped(int frame) const { return skipped_.count(frame) > 0; }
  const std::vector<Detection>& all() const { return all_; }

 private:
  std::vector<Detection> all_;
  std::unordered_map<long long, std::vector<std::size_t>> index_;
  std::optional<int> header_frames_;
  std::optional<int> width_;
  std::set<int> skipped_;
};

std::string detection_header_line(int frames, std::string_view source, int width, int height);
std::string skipped_frame_line(int frame, const std::string& reason);
std::string detection_line(const Detection& d);

class ClassSource {
 public:
  virtual ~ClassSource() = default;
  /// RimClass::kCount scores for one wheel observation, nullopt when the
  /// source has nothing for it.
  virtual std::optional<std::vector<double>> scores(int frame, int track, const Image* crop,
                                                    const std::string& crop_name) const = 0;
  virtual std::string_view name() const = 0;
};

class SvmClassSource : public ClassSource {
 public:
  explicit SvmClassSource(SvmModel model);
  std::optional<std::vector<double>> scores(int frame, int track, const Image* crop,
                                            const std::string& crop_name) const override;
  std::string_view name() const override { return "hog_svm_internal"; }
  const SvmModel& model() const { return model_; }

 private:
  SvmModel model_;
};

/// JSONL class scores keyed by frame and track or by crop file name:
///   {"frame":12,"track":3,"scores":[...22 values...]}
///   {"crop":"000012_3.png","scores":[...]}
/// A repeated key replaces the earlier line and counts as a warning.
class ExternalClasses : public ClassSource {
 public:
  static ExternalClasses load(const std::filesystem::path& path);
  static ExternalClasses parse(std::istream& in, const std::string& origin);

  std::optional<std::vector<double>> scores(int frame, int track, const Image* crop,
                                            const std::string& crop_name) const override;
  std::string_view name() const override { return "external_file"; }

  std::size_t size() const { return by_track_.size() + by_crop_.size(); }
  int duplicate_warnings() const { return duplicates_; }

 private:
  std::map<std::pair<int, int>, std::vector<double>> by_track_;
  std::map<std::string, std::vector<double>> by_crop_;
  int duplicates_ = 0;
};

std::string class_line(int frame, int track, std::span<const double> scores);

/// Argmax over the scores; ties go to the smaller class id.
RimClass class_from_scores(std::span<const double> scores);

}  // namespace rim
