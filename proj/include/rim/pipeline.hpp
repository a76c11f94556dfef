#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rim/ellipsefit.hpp"
#include "rim/hog.hpp"
#include "rim/providers.hpp"
#include "rim/svm.hpp"
#include "rim/tracking.hpp"

namespace rim {

inline constexpr std::string_view kVerdictSchema = "rim-inspect/verdict-v1";

struct PipelineConfig {
  std::filesystem::path camera_a;  // image-sequence directory, lexicographic order
  std::filesystem::path camera_b;  // optional
  std::filesystem::path cars;      // car detections (JSONL)

  std::string wheel_source = "hough_internal";  // or external_file
  std::filesystem::path wheels_a, wheels_b;
  std::string class_source = "hog_svm_internal";  // or external_file
  std::filesystem::path model, classes;
  std::string bolt_source = "hough_internal";  // or external_file
  std::filesystem::path bolts_a, bolts_b;

  WheelHoughParams wheels;
  TrackerConfig tracker;
  RaycastConfig raycast;
  PitchCircleSpec pitch;
  double contour_blur = 1.0;
  int crop_side = 256;
  HogConfig hog;
  SvmTrainParams svm;

  std::filesystem::path verdicts, summary, tracks, debug_overlay;
  double latency_budget_ms = 400;

  void validate() const;
};

/// Image files (png, jpg, jpeg, pgm) of a directory, sorted by name.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir);

enum class Camera { a, b };

/// One tracked observation: a detection together with the track it joined.
struct Observation {
  int frame = 0;
  Camera camera = Camera::a;
  int track = 0;
  int car = -1;
  Label label = Label::wheel;
  BBox bbox;
  double score = 0;
};

std::string observation_line(const Observation& o);
std::vector<Observation> load_observations(const std::filesystem::path& path);

/// File name used for a wheel crop, also the key for crop-named class scores.
std::string crop_name(int frame, int track);

struct SizeResult {
  std::optional<SizeEstimate> estimate;
  std::string error;
};

struct FitDebug {
  Image overlay;  // RGB crop with rays, bolts and both ellipses
};

/// Crops the wheel, finds the rim contour and the bolt pitch ellipse and turns
/// them into a diameter. Bolts come from external detections when given (frame
/// coordinates, centers inside the wheel box), else from the crop.
SizeResult estimate_wheel_size(const Image& frame_gray, const BBox& wheel, const std::vector<Detection>* bolts,
                               const PipelineConfig& cfg, FitDebug* debug = nullptr);

std::optional<std::vector<double>> classify_wheel(const Image& frame, const BBox& wheel, int frame_index, int track,
                                                  const ClassSource& source, int crop_side);

std::string size_line(int frame, int track, const SizeResult& r);
using SizeTable = std::map<std::pair<int, int>, SizeResult>;
SizeTable load_sizes(const std::filesystem::path& path);

std::string verdict_line(const InspectionVerdict& v, int completed_frame);

struct StageTimes {
  int frame = 0;
  double decode_ms = 0, detect_ms = 0, track_ms = 0, classify_ms = 0, size_ms = 0, verdict_ms = 0;
  double total() const { return decode_ms + detect_ms + track_ms + classify_ms + size_ms + verdict_ms; }
};

struct RunSummary {
  int frames = 0;
  std::vector<int> skipped_a, skipped_b;
  int cars = 0;
  std::map<Verdict, int> counts;
  std::vector<StageTimes> timings;
  double budget_ms = 0;
  int over_budget = 0;
  int duplicate_class_keys = 0;
};

std::string summary_json(const RunSummary& s);

/// Full flow per frame pair: detect, track, classify and size every tracked
/// wheel, emit verdicts for completed cars. Verdict lines go to verdicts,
/// tracked observations to tracks when given.
RunSummary run_pipeline(const PipelineConfig& cfg, std::ostream& verdicts, std::ostream* tracks = nullptr);

// Stage commands; chained through files they reproduce run_pipeline.

/// Hough wheels for every frame of dir. Unreadable frames become skip records.
void run_detect(const std::filesystem::path& dir, const WheelHoughParams& params, std::ostream& out);

struct TrackInputs {
  const ExternalDetections* cars = nullptr;
  const ExternalDetections* wheels_a = nullptr;
  const ExternalDetections* wheels_b = nullptr;  // optional
  const ClassSource* classes = nullptr;          // optional, keyed by frame and track
  const SizeTable* sizes = nullptr;              // optional
  int frame_width = 0;                           // 0: take it from the wheels_a header
};

/// Returns the number of verdicts written.
int run_track(const TrackInputs& in, const TrackerConfig& cfg, std::ostream* tracks, std::ostream* verdicts);

void run_classify(const PipelineConfig& cfg, const std::vector<Observation>& obs, const ClassSource& source,
                  std::ostream& out);
void run_fit(const PipelineConfig& cfg, const std::vector<Observation>& obs, std::ostream& out);

}  // namespace rim
