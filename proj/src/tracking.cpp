#include "rim/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>
#include <utility>

#include "rim/errors.hpp"

namespace rim {

void TrackerConfig::validate() const {
  if (!(iou_min > 0) || iou_min > 1) throw InvalidArgument("tracker: iou_min must lie in (0, 1]");
  if (max_missed < 0) throw InvalidArgument("tracker: max_missed must be >= 0");
  if (min_hits < 1) throw InvalidArgument("tracker: min_hits must be >= 1");
  if (!(diameter_tolerance >= 0)) throw InvalidArgument("tracker: diameter_tolerance must be >= 0");
  if (!(link_window > 0)) throw InvalidArgument("tracker: link_window must be positive");
}

const TrackEntry* Track::entry_at(int frame) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), frame,
                             [](const TrackEntry& e, int f) { return e.frame < f; });
  return it != entries.end() && it->frame == frame ? &*it : nullptr;
}

TrackEntry* Track::entry_at(int frame) {
  return const_cast<TrackEntry*>(std::as_const(*this).entry_at(frame));
}

std::vector<int> greedy_iou_match(std::span<const BBox> track_boxes, std::span<const BBox> detections,
                                  double iou_min) {
  struct Pair {
    double iou;
    int track;
    int det;
  };
  std::vector<Pair> pairs;
  for (std::size_t t = 0; t < track_boxes.size(); ++t) {
    for (std::size_t d = 0; d < detections.size(); ++d) {
      const double v = iou(track_boxes[t], detections[d]);
      if (v >= iou_min) pairs.push_back({v, static_cast<int>(t), static_cast<int>(d)});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.track != b.track) return a.track < b.track;
    return a.det < b.det;
  });
  std::vector<int> match(detections.size(), -1);
  std::vector<bool> used(track_boxes.size(), false);
  for (const Pair& p : pairs) {
    if (used[p.track] || match[p.det] >= 0) continue;
    used[p.track] = true;
    match[p.det] = p.track;
  }
  return match;
}

Tracker::Tracker(TrackerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

std::vector<int> Tracker::step(std::vector<Track>& tracks, Label label, int frame,
                               std::span<const Detection> dets, std::vector<int>* died) {
  std::vector<std::size_t> live;
  std::vector<BBox> boxes;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (tracks[i].state == TrackState::dead) continue;
    live.push_back(i);
    boxes.push_back(tracks[i].entries.back().bbox);
  }
  std::vector<BBox> det_boxes;
  for (const Detection& d : dets) det_boxes.push_back(d.bbox);
  const std::vector<int> match = greedy_iou_match(boxes, det_boxes, cfg_.iou_min);

  std::vector<bool> matched(live.size(), false);
  for (int m : match)
    if (m >= 0) matched[m] = true;
  for (std::size_t k = 0; k < live.size(); ++k) {
    if (matched[k]) continue;
    Track& t = tracks[live[k]];
    if (++t.missed > cfg_.max_missed) {
      t.state = TrackState::dead;
      if (died) died->push_back(t.id);
    }
  }

  std::vector<int> ids(dets.size());
  for (std::size_t d = 0; d < dets.size(); ++d) {
    TrackEntry entry;
    entry.frame = frame;
    entry.bbox = dets[d].bbox;
    entry.score = dets[d].score;
    if (match[d] >= 0) {
      Track& t = tracks[live[match[d]]];
      t.entries.push_back(std::move(entry));
      ++t.hits;
      t.missed = 0;
      if (t.hits >= cfg_.min_hits) {
        t.state = TrackState::confirmed;
        t.ever_confirmed = true;
      }
      ids[d] = t.id;
    } else {
      Track t;
      t.id = next_id_++;
      t.label = label;
      t.entries.push_back(std::move(entry));
      t.hits = 1;
      if (cfg_.min_hits <= 1) {
        t.state = TrackState::confirmed;
        t.ever_confirmed = true;
      }
      ids[d] = t.id;
      tracks.push_back(std::move(t));
    }
  }
  return ids;
}

FrameAssignments Tracker::update(int frame, std::span<const Detection> cars, std::span<const Detection> wheels) {
  if (last_frame_ && frame <= *last_frame_)
    throw InvalidArgument("tracker: frame " + std::to_string(frame) + " does not follow frame " +
                          std::to_string(*last_frame_));
  last_frame_ = frame;

  FrameAssignments out;
  out.frame = frame;
  out.car_tracks = step(cars_, Label::car, frame, cars, &out.completed_cars);
  out.wheel_tracks = step(wheels_, Label::wheel, frame, wheels, nullptr);
  out.wheel_cars.assign(wheels.size(), -1);
  for (std::size_t i = 0; i < wheels.size(); ++i) {
    Track* wt = find(out.wheel_tracks[i]);
    if (wt->car_id < 0) {
      const double wx = wheels[i].bbox.cx(), wy = wheels[i].bbox.cy();
      double best = 0;
      for (std::size_t c = 0; c < cars.size(); ++c) {
        if (!cars[c].bbox.contains(wx, wy)) continue;
        const double dist = std::hypot(cars[c].bbox.cx() - wx, cars[c].bbox.cy() - wy);
        if (wt->car_id < 0 || dist < best) {
          wt->car_id = out.car_tracks[c];
          best = dist;
        }
      }
    }
    out.wheel_cars[i] = wt->car_id;
  }
  return out;
}

std::vector<int> Tracker::finish() {
  std::vector<int> done;
  for (Track& t : cars_) {
    if (t.state == TrackState::dead) continue;
    t.state = TrackState::dead;
    done.push_back(t.id);
  }
  return done;
}

const Track* Tracker::find(int id) const {
  for (const auto* list : {&cars_, &wheels_}) {
    auto it = std::lower_bound(list->begin(), list->end(), id, [](const Track& t, int v) { return t.id < v; });
    if (it != list->end() && it->id == id) return &*it;
  }
  return nullptr;
}

Track* Tracker::find(int id) { return const_cast<Track*>(std::as_const(*this).find(id)); }

std::vector<const Track*> Tracker::wheels_of(int car_id) const {
  std::vector<const Track*> out;
  for (const Track& t : wheels_)
    if (t.car_id == car_id) out.push_back(&t);
  return out;
}

std::optional<RimClass> aggregate_class(const Track& track, ClassVote mode) {
  std::vector<int> ids;
  for (const TrackEntry& e : track.entries)
    if (e.cls && !e.cls->occluded()) ids.push_back(e.cls->id());
  if (ids.empty()) return std::nullopt;

  if (mode == ClassVote::median) {
    std::sort(ids.begin(), ids.end());
    return RimClass(ids[(ids.size() - 1) / 2]);
  }

  std::map<int, int> counts;
  for (int id : ids) ++counts[id];
  auto summed = [&](int id) {
    double s = 0;
    for (const TrackEntry& e : track.entries)
      if (e.cls && static_cast<std::size_t>(id) < e.scores.size()) s += e.scores[id];
    return s;
  };
  int best = -1, best_count = 0;
  double best_sum = 0;
  for (auto [id, count] : counts) {
    const double s = summed(id);
    if (best < 0 || count > best_count || (count == best_count && s > best_sum)) {
      best = id;
      best_count = count;
      best_sum = s;
    }
  }
  return RimClass(best);
}

std::vector<std::optional<std::size_t>> link_camera_b(std::span<const BBox> a_boxes,
                                                      std::span<const Detection> b_wheels, double window_px) {
  struct Pair {
    double dx;
    std::size_t a;
    std::size_t b;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < a_boxes.size(); ++i) {
    for (std::size_t j = 0; j < b_wheels.size(); ++j) {
      const double dx = std::abs(a_boxes[i].cx() - b_wheels[j].bbox.cx());
      if (dx <= window_px) pairs.push_back({dx, i, j});
    }
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const Pair& l, const Pair& r) { return std::tie(l.dx, l.a, l.b) < std::tie(r.dx, r.a, r.b); });
  std::vector<std::optional<std::size_t>> links(a_boxes.size());
  std::vector<bool> claimed(b_wheels.size(), false);
  for (const Pair& p : pairs) {
    if (links[p.a] || claimed[p.b]) continue;
    links[p.a] = p.b;
    claimed[p.b] = true;
  }
  return links;
}

std::string_view to_string(WheelPosition p) {
  switch (p) {
    case WheelPosition::FL: return "FL";
    case WheelPosition::FR: return "FR";
    case WheelPosition::RL: return "RL";
    case WheelPosition::RR: return "RR";
  }
  return "?";
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

std::optional<double> median_diameter(const Track& t) {
  std::vector<double> d;
  for (const TrackEntry& e : t.entries)
    if (e.size) d.push_back(e.size->diameter_mm);
  if (d.empty()) return std::nullopt;
  std::sort(d.begin(), d.end());
  const std::size_t n = d.size();
  return n % 2 ? d[n / 2] : (d[n / 2 - 1] + d[n / 2]) / 2;
}

}  // namespace

InspectionVerdict inspect_car(const CarRecord& car, const TrackerConfig& cfg) {
  InspectionVerdict out;
  out.car_track_id = car.car_track_id;
  constexpr WheelPosition kOrder[] = {WheelPosition::FL, WheelPosition::FR, WheelPosition::RL, WheelPosition::RR};

  std::vector<WheelPosition> missing;
  for (WheelPosition pos : kOrder) {
    auto it = car.wheels.find(pos);
    if (it == car.wheels.end()) {
      missing.push_back(pos);
      continue;
    }
    WheelVerdict w;
    w.position = pos;
    w.track_id = it->second.id;
    w.observations = static_cast<int>(it->second.entries.size());
    w.cls = aggregate_class(it->second, cfg.class_vote);
    w.diameter_mm = median_diameter(it->second);
    if (!w.cls) missing.push_back(pos);
    out.wheels.push_back(w);
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    out.verdict = Verdict::inconclusive;
    out.reasons.push_back({"wheels_missing", missing});
    return out;
  }

  // Majority class; 2-2 splits resolve to the smaller id.
  std::map<int, int> counts;
  for (const WheelVerdict& w : out.wheels) ++counts[w.cls->id()];
  int majority = counts.begin()->first;
  for (auto [id, n] : counts)
    if (n > counts[majority]) majority = id;
  VerdictReason class_reason{"class_mismatch", {}};
  for (const WheelVerdict& w : out.wheels)
    if (w.cls->id() != majority) class_reason.positions.push_back(w.position);
  if (!class_reason.positions.empty()) out.reasons.push_back(class_reason);

  const bool sized = std::all_of(out.wheels.begin(), out.wheels.end(),
                                 [](const WheelVerdict& w) { return w.diameter_mm.has_value(); });
  if (sized) {
    std::vector<double> d;
    for (const WheelVerdict& w : out.wheels) d.push_back(*w.diameter_mm);
    std::vector<double> sorted = d;
    std::sort(sorted.begin(), sorted.end());
    const double median = (sorted[1] + sorted[2]) / 2;
    const double band = cfg.diameter_tolerance * median;
    if (sorted.back() - sorted.front() > band) {
      VerdictReason size_reason{"size_mismatch", {}};
      for (std::size_t i = 0; i < d.size(); ++i)
        if (std::abs(d[i] - median) > band / 2) size_reason.positions.push_back(out.wheels[i].position);
      if (size_reason.positions.empty()) {
        const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
        size_reason.positions = {out.wheels[lo - d.begin()].position, out.wheels[hi - d.begin()].position};
        std::sort(size_reason.positions.begin(), size_reason.positions.end());
      }
      out.reasons.push_back(size_reason);
    }
  }

  if (!out.reasons.empty()) {
    out.verdict = Verdict::fail;
  } else if (!sized) {
    out.verdict = Verdict::inconclusive;
    VerdictReason r{"size_unavailable", {}};
    for (const WheelVerdict& w : out.wheels)
      if (!w.diameter_mm) r.positions.push_back(w.position);
    out.reasons.push_back(r);
  } else {
    out.verdict = Verdict::pass;
  }
  return out;
}

InspectionSession::InspectionSession(TrackerConfig cfg, int frame_width)
    : tracker_(cfg), window_px_(cfg.link_window * frame_width) {
  if (frame_width <= 0) throw InvalidArgument("inspection session: frame width must be positive");
}

InspectionSession::FrameTracks InspectionSession::process(int frame, std::span<const Detection> cars,
                                                          std::span<const Detection> wheels_a,
                                                          std::span<const Detection> wheels_b) {
  FrameTracks out;
  out.a = tracker_.update(frame, cars, wheels_a);
  last_frame_ = frame;

  std::vector<BBox> a_boxes;
  for (const Detection& d : wheels_a) a_boxes.push_back(d.bbox);
  const auto links = link_camera_b(a_boxes, wheels_b, window_px_);
  out.b_tracks.assign(wheels_b.size(), -1);
  out.b_cars.assign(wheels_b.size(), -1);
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (!links[i]) continue;
    const int a_id = out.a.wheel_tracks[i];
    auto [it, inserted] = far_.try_emplace(a_id);
    Track& far = it->second;
    if (inserted) {
      far.id = tracker_.allocate_id();
      far.label = Label::wheel;
      far_owner_[far.id] = a_id;
    }
    const Detection& b = wheels_b[*links[i]];
    TrackEntry entry;
    entry.frame = frame;
    entry.bbox = b.bbox;
    entry.score = b.score;
    far.entries.push_back(std::move(entry));
    ++far.hits;
    out.b_tracks[*links[i]] = far.id;
    out.b_cars[*links[i]] = out.a.wheel_cars[i];
  }
  pending_.insert(pending_.end(), out.a.completed_cars.begin(), out.a.completed_cars.end());
  return out;
}

const Track* InspectionSession::find(int track_id) const {
  if (auto it = far_owner_.find(track_id); it != far_owner_.end()) return &far_.at(it->second);
  return tracker_.find(track_id);
}

void InspectionSession::annotate(int track_id, int frame, std::optional<RimClass> cls, std::vector<double> scores,
                                 std::optional<SizeEstimate> size) {
  Track* track = nullptr;
  if (auto it = far_owner_.find(track_id); it != far_owner_.end()) {
    track = &far_.at(it->second);
  } else {
    track = tracker_.find(track_id);
  }
  TrackEntry* entry = track ? track->entry_at(frame) : nullptr;
  if (!entry)
    throw InvalidArgument("annotate: no observation for track " + std::to_string(track_id) + " at frame " +
                          std::to_string(frame));
  entry->cls = cls;
  entry->scores = std::move(scores);
  entry->size = std::move(size);
}

CarRecord InspectionSession::build_record(int car_id, int frame) const {
  const TrackerConfig& cfg = tracker_.config();
  const Track* car = tracker_.find(car_id);
  CarRecord rec;
  rec.car_track_id = car_id;
  rec.completed_frame = frame;
  rec.confirmed = car && car->ever_confirmed;
  if (!car) return rec;

  std::vector<const Track*> wheels;
  for (const Track* w : tracker_.wheels_of(car_id))
    if (w->ever_confirmed) wheels.push_back(w);
  std::stable_sort(wheels.begin(), wheels.end(), [](const Track* a, const Track* b) {
    return a->entries.size() > b->entries.size();
  });
  if (wheels.size() > 2) wheels.resize(2);

  auto offset = [&](const Track* w) {
    double sum = 0;
    int n = 0;
    for (const TrackEntry& e : w->entries) {
      if (const TrackEntry* ce = car->entry_at(e.frame)) {
        sum += e.bbox.cx() - ce->bbox.cx();
        ++n;
      }
    }
    if (n == 0) return w->entries.front().bbox.cx() - car->entries.front().bbox.cx();
    return sum / n;
  };
  auto is_front = [&](double off) { return cfg.front_is_right ? off > 0 : off < 0; };

  std::vector<std::pair<const Track*, bool>> placed;  // (track, front)
  if (wheels.size() == 2) {
    const double o0 = offset(wheels[0]), o1 = offset(wheels[1]);
    const bool first_front = cfg.front_is_right ? o0 > o1 : o0 < o1;
    placed = {{wheels[0], first_front}, {wheels[1], !first_front}};
  } else if (wheels.size() == 1) {
    placed = {{wheels[0], is_front(offset(wheels[0]))}};
  }
  for (auto [w, front] : placed) {
    rec.wheels[front ? WheelPosition::FR : WheelPosition::RR] = *w;
    if (auto it = far_.find(w->id); it != far_.end())
      rec.wheels[front ? WheelPosition::FL : WheelPosition::RL] = it->second;
  }
  return rec;
}

std::vector<CarRecord> InspectionSession::collect_completed() {
  std::vector<CarRecord> out;
  for (int id : pending_) out.push_back(build_record(id, last_frame_));
  pending_.clear();
  return out;
}

std::vector<CarRecord> InspectionSession::finish() {
  std::vector<CarRecord> out = collect_completed();
  for (int id : tracker_.finish()) out.push_back(build_record(id, last_frame_));
  return out;
}

}  // namespace rim
