#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rim/core.hpp"
#include "rim/ellipsefit.hpp"

namespace rim {

enum class TrackState { tentative, confirmed, dead };
enum class ClassVote { median, mode };

struct TrackerConfig {
  double iou_min = 0.3;
  int max_missed = 3;
  int min_hits = 2;
  ClassVote class_vote = ClassVote::median;
  double diameter_tolerance = 0.05;  // fraction of the median diameter
  double link_window = 0.15;         // camera-B x window, fraction of frame width
  bool front_is_right = true;        // belt moves toward +x

  void validate() const;
};

struct TrackEntry {
  int frame = 0;
  BBox bbox;
  double score = 0;
  std::optional<RimClass> cls;        // per-frame class, when classified
  std::vector<double> scores;         // RimClass::kCount class scores
  std::optional<SizeEstimate> size;
};

struct Track {
  int id = 0;
  Label label = Label::wheel;
  std::vector<TrackEntry> entries;  // strictly increasing frames
  int hits = 0;
  int missed = 0;
  TrackState state = TrackState::tentative;
  bool ever_confirmed = false;
  int car_id = -1;

  const TrackEntry* entry_at(int frame) const;
  TrackEntry* entry_at(int frame);
};

struct FrameAssignments {
  int frame = 0;
  std::vector<int> car_tracks;    // per car detection
  std::vector<int> wheel_tracks;  // per wheel detection
  std::vector<int> wheel_cars;    // car track id owning each wheel detection's track, -1 if none
  std::vector<int> completed_cars;
};

/// Greedy IoU association: all (track, detection) pairs with IoU >= iou_min,
/// taken in descending IoU (ties: lower track id, then lower detection index),
/// each side used at most once. Returns the matched track index per detection.
std::vector<int> greedy_iou_match(std::span<const BBox> track_boxes, std::span<const BBox> detections,
                                  double iou_min);

/// Single-writer IoU tracker for cars and wheels of one camera.
class Tracker {
 public:
  explicit Tracker(TrackerConfig cfg = {});

  /// Throws InvalidArgument unless frame is strictly greater than the last one.
  FrameAssignments update(int frame, std::span<const Detection> cars, std::span<const Detection> wheels);

  /// Ends the stream: every live car is completed, ids ascending.
  std::vector<int> finish();

  const Track* find(int id) const;
  Track* find(int id);
  std::vector<const Track*> wheels_of(int car_id) const;
  int allocate_id() { return next_id_++; }
  const TrackerConfig& config() const { return cfg_; }

 private:
  std::vector<int> step(std::vector<Track>& tracks, Label label, int frame, std::span<const Detection> dets,
                        std::vector<int>* died);

  TrackerConfig cfg_;
  std::vector<Track> cars_;
  std::vector<Track> wheels_;
  int next_id_ = 1;
  std::optional<int> last_frame_;
};

/// Median (lower middle of the sorted ids) or mode (ties to the larger summed
/// score, then the smaller id) over classified entries, class 0 excluded.
/// nullopt when no non-occluded entry exists.
std::optional<RimClass> aggregate_class(const Track& track, ClassVote mode);

/// For each camera-A wheel box of this frame, the index of the camera-B wheel
/// detection with the nearest center x within window_px. Claims are greedy by
/// distance, so a B detection is linked at most once.
std::vector<std::optional<std::size_t>> link_camera_b(std::span<const BBox> a_boxes,
                                                      std::span<const Detection> b_wheels, double window_px);

enum class WheelPosition { FL, FR, RL, RR };
std::string_view to_string(WheelPosition p);

struct CarRecord {
  int car_track_id = 0;
  int completed_frame = -1;
  bool confirmed = false;
  std::map<WheelPosition, Track> wheels;
};

enum class Verdict { pass, fail, inconclusive };
std::string_view to_string(Verdict v);

struct WheelVerdict {
  WheelPosition position = WheelPosition::FL;
  int track_id = 0;
  int observations = 0;
  std::optional<RimClass> cls;
  std::optional<double> diameter_mm;
};

struct VerdictReason {
  std::string code;  // class_mismatch, size_mismatch, wheels_missing, size_unavailable
  std::vector<WheelPosition> positions;
};

struct InspectionVerdict {
  int car_track_id = 0;
  std::vector<WheelVerdict> wheels;  // FL, FR, RL, RR order, present wheels only
  Verdict verdict = Verdict::inconclusive;
  std::vector<VerdictReason> reasons;
};

/// Pass iff all four wheels carry the same non-zero class and the diameter
/// spread is within diameter_tolerance of the median diameter.
InspectionVerdict inspect_car(const CarRecord& car, const TrackerConfig& cfg);

/// Camera-A tracker plus camera-B far-side wheels linked by horizontal position.
/// Usage per frame: process(), then annotate() the new observations, then
/// collect_completed().
class InspectionSession {
 public:
  InspectionSession(TrackerConfig cfg, int frame_width);

  struct FrameTracks {
    FrameAssignments a;
    std::vector<int> b_tracks;  // far-side track id per camera-B wheel detection, -1 if unlinked
    std::vector<int> b_cars;    // car track id of the linked camera-A wheel, -1 if none
  };

  FrameTracks process(int frame, std::span<const Detection> cars, std::span<const Detection> wheels_a,
                      std::span<const Detection> wheels_b);

  /// Attaches classification / size evidence to an existing observation.
  void annotate(int track_id, int frame, std::optional<RimClass> cls, std::vector<double> scores,
                std::optional<SizeEstimate> size);

  std::vector<CarRecord> collect_completed();
  std::vector<CarRecord> finish();

  const Track* find(int track_id) const;

 private:
  CarRecord build_record(int car_id, int frame) const;

  Tracker tracker_;
  double window_px_;
  std::map<int, Track> far_;      // keyed by camera-A wheel track id
  std::map<int, int> far_owner_;  // far-side track id -> camera-A track id
  std::vector<int> pending_;
  int last_frame_ = -1;
};

}  // namespace rim
