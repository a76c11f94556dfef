#include "rim/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>

#include <json.hpp>

#include "rim/draw.hpp"
#include "rim/errors.hpp"
#include "rim/hough.hpp"
#include "rim/image_io.hpp"
#include "rim/imgproc.hpp"

namespace rim {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

ordered_json ellipse_json(const Ellipse& e) {
  return {{"cx", e.cx}, {"cy", e.cy}, {"a", e.a}, {"b", e.b}, {"theta", e.theta}};
}

Ellipse ellipse_from_json(const json& j) {
  return {j.at("cx").get<double>(), j.at("cy").get<double>(), j.at("a").get<double>(), j.at("b").get<double>(),
          j.at("theta").get<double>()};
}

std::optional<Image> try_read(const std::filesystem::path& path, std::string* why) {
  try {
    return read_image(path);
  } catch (const Error& e) {
    if (why) *why = e.what();
    return std::nullopt;
  }
}

// Session plus the bookkeeping shared by run_pipeline and run_track.
class Inspector {
 public:
  Inspector(const TrackerConfig& cfg, int frame_width) : cfg_(cfg), session_(cfg, frame_width) {}

  std::vector<Observation> process(int frame, std::span<const Detection> cars, std::span<const Detection> wheels_a,
                                   std::span<const Detection> wheels_b) {
    const auto ft = session_.process(frame, cars, wheels_a, wheels_b);
    std::vector<Observation> obs;
    for (std::size_t i = 0; i < cars.size(); ++i)
      obs.push_back({frame, Camera::a, ft.a.car_tracks[i], -1, Label::car, cars[i].bbox, cars[i].score});
    for (std::size_t i = 0; i < wheels_a.size(); ++i)
      obs.push_back({frame, Camera::a, ft.a.wheel_tracks[i], ft.a.wheel_cars[i], Label::wheel, wheels_a[i].bbox,
                     wheels_a[i].score});
    for (std::size_t j = 0; j < wheels_b.size(); ++j)
      if (ft.b_tracks[j] >= 0)
        obs.push_back({frame, Camera::b, ft.b_tracks[j], ft.b_cars[j], Label::wheel, wheels_b[j].bbox,
                       wheels_b[j].score});
    return obs;
  }

  void annotate(const Observation& o, const std::optional<std::vector<double>>& scores, const SizeResult* size) {
    const bool sized = size && size->estimate;
    if (!scores && !sized) return;
    std::optional<RimClass> cls;
    if (scores) cls = class_from_scores(*scores);
    session_.annotate(o.track, o.frame, cls, scores.value_or(std::vector<double>{}),
                      sized ? size->estimate : std::nullopt);
  }

  int emit(std::ostream* out, bool final, RunSummary* summary) {
    const auto records = final ? session_.finish() : session_.collect_completed();
    int n = 0;
    for (const CarRecord& rec : records) {
      if (!rec.confirmed) continue;
      const InspectionVerdict v = inspect_car(rec, cfg_);
      if (out) *out << verdict_line(v, rec.completed_frame) << '\n';
      if (summary) {
        ++summary->cars;
        ++summary->counts[v.verdict];
      }
      ++n;
    }
    return n;
  }

 private:
  TrackerConfig cfg_;
  InspectionSession session_;
};

}  // namespace

void PipelineConfig::validate() const {
  auto check_source = [](const std::string& v, std::initializer_list<const char*> allowed, const char* what) {
    for (const char* a : allowed)
      if (v == a) return;
    throw InvalidArgument(std::string("unknown ") + what + " \"" + v + "\"");
  };
  check_source(wheel_source, {"hough_internal", "external_file"}, "wheel source");
  check_source(class_source, {"hog_svm_internal", "external_file"}, "class source");
  check_source(bolt_source, {"hough_internal", "external_file"}, "bolt source");
  wheels.hough.validate();
  if (wheels.downscale < 1) throw InvalidArgument("pipeline: downscale must be >= 1");
  if (!(wheels.blur_sigma > 0)) throw InvalidArgument("pipeline: blur_sigma must be positive");
  tracker.validate();
  raycast.validate();
  pitch.validate();
  hog.validate();
  if (crop_side < 16) throw InvalidArgument("pipeline: crop_side must be >= 16");
  if (!(contour_blur >= 0)) throw InvalidArgument("size: blur_sigma must be >= 0");
  if (!(latency_budget_ms > 0)) throw InvalidArgument("pipeline: latency_budget_ms must be positive");
}

std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("not a frame directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".pgm") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string observation_line(const Observation& o) {
  ordered_json j;
  j["frame"] = o.frame;
  j["camera"] = o.camera == Camera::a ? "a" : "b";
  j["track"] = o.track;
  j["car"] = o.car;
  j["label"] = to_string(o.label);
  j["bbox"] = {o.bbox.x, o.bbox.y, o.bbox.w, o.bbox.h};
  j["score"] = o.score;
  return j.dump();
}

std::vector<Observation> load_observations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open tracks file " + path.string());
  std::vector<Observation> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      Observation o;
      o.frame = j.at("frame").get<int>();
      const std::string cam = j.at("camera").get<std::string>();
      if (cam != "a" && cam != "b") throw DataError("camera must be \"a\" or \"b\"");
      o.camera = cam == "a" ? Camera::a : Camera::b;
      o.track = j.at("track").get<int>();
      o.car = j.at("car").get<int>();
      const auto label = parse_label(j.at("label").get<std::string>());
      if (!label) throw DataError("unknown label");
      o.label = *label;
      const auto& b = j.at("bbox");
      o.bbox = make_bbox(b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>());
      o.score = j.at("score").get<double>();
      out.push_back(o);
    } catch (const std::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string crop_name(int frame, int track) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "f%06d_t%d.png", frame, track);
  return buf;
}

SizeResult estimate_wheel_size(const Image& frame_gray, const BBox& wheel, const std::vector<Detection>* bolts,
                               const PipelineConfig& cfg, FitDebug* debug) {
  SizeResult out;
  try {
    const CropTransform tr = CropTransform::for_box(wheel, cfg.crop_side);
    const Image crop = crop_square(frame_gray, wheel, cfg.crop_side);
    const RimContour rc = extract_rim_contour(crop, cfg.raycast, cfg.contour_blur);
    const Ellipse rim = tr.to_source(rc.ellipse);

    std::vector<Point2> centers;
    if (bolts) {
      for (const Detection& d : *bolts)
        if (wheel.contains(d.bbox.cx(), d.bbox.cy())) centers.push_back({d.bbox.cx(), d.bbox.cy()});
    } else {
      for (const Circle& c : detect_bolts(crop, bolt_preset(cfg.crop_side))) {
        if (static_cast<int>(centers.size()) == cfg.pitch.bolt_count) break;
        centers.push_back(tr.to_source(Point2{c.cx, c.cy}));
      }
    }
    if (debug) {
      debug->overlay = to_rgb(crop);
      for (const RayHit& h : rc.hits) draw_marker(debug->overlay, h.pixel, {255, 64, 64}, 1);
      for (const Point2& p : centers) draw_marker(debug->overlay, tr.to_crop(p), {64, 128, 255}, 2);
      draw_ellipse(debug->overlay, rc.ellipse, {64, 255, 64});
    }
    const Ellipse pitch = pitch_ellipse(std::span<const Point2>(centers), cfg.pitch);
    if (debug) {
      const Point2 c = tr.to_crop({pitch.cx, pitch.cy});
      draw_ellipse(debug->overlay, {c.x, c.y, pitch.a / tr.scale, pitch.b / tr.scale, pitch.theta}, {255, 220, 0});
    }
    out.estimate = estimate_rim_diameter(rim, pitch, cfg.pitch);
  } catch (const DataError& e) {
    out.error = e.what();
  } catch (const NumericalError& e) {
    out.error = e.what();
  }
  return out;
}

std::optional<std::vector<double>> classify_wheel(const Image& frame, const BBox& wheel, int frame_index, int track,
                                                  const ClassSource& source, int crop_side) {
  const Image crop = crop_square(to_grayscale(frame), wheel, crop_side);
  return source.scores(frame_index, track, &crop, crop_name(frame_index, track));
}

std::string size_line(int frame, int track, const SizeResult& r) {
  ordered_json j;
  j["frame"] = frame;
  j["track"] = track;
  if (r.estimate) {
    j["diameter_mm"] = r.estimate->diameter_mm;
    j["confidence"] = r.estimate->confidence;
    j["rim"] = ellipse_json(r.estimate->rim);
    j["pitch"] = ellipse_json(r.estimate->pitch);
  } else {
    j["error"] = r.error;
  }
  return j.dump();
}

SizeTable load_sizes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open sizes file " + path.string());
  SizeTable table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      SizeResult r;
      if (j.contains("diameter_mm")) {
        SizeEstimate e;
        e.diameter_mm = j.at("diameter_mm").get<double>();
        e.confidence = j.at("confidence").get<double>();
        e.rim = ellipse_from_json(j.at("rim"));
        e.pitch = ellipse_from_json(j.at("pitch"));
        r.estimate = e;
      } else {
        r.error = j.value("error", std::string("unknown"));
      }
      table[{j.at("frame").get<int>(), j.at("track").get<int>()}] = r;
    } catch (const std::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return table;
}

std::string verdict_line(const InspectionVerdict& v, int completed_frame) {
  ordered_json j;
  j["schema"] = kVerdictSchema;
  j["car"] = v.car_track_id;
  j["completed_frame"] = completed_frame;
  j["verdict"] = to_string(v.verdict);
  ordered_json wheels = ordered_json::array();
  for (const WheelVerdict& w : v.wheels) {
    ordered_json wj;
    wj["position"] = to_string(w.position);
    wj["track"] = w.track_id;
    wj["observations"] = w.observations;
    wj["class"] = w.cls ? ordered_json(w.cls->id()) : ordered_json(nullptr);
    wj["diameter_mm"] = w.diameter_mm ? ordered_json(*w.diameter_mm) : ordered_json(nullptr);
    wheels.push_back(wj);
  }
  j["wheels"] = wheels;
  ordered_json reasons = ordered_json::array();
  for (const VerdictReason& r : v.reasons) {
    ordered_json pos = ordered_json::array();
    for (WheelPosition p : r.positions) pos.push_back(to_string(p));
    reasons.push_back({{"code", r.code}, {"positions", pos}});
  }
  j["reasons"] = reasons;
  return j.dump();
}

std::string summary_json(const RunSummary& s) {
  ordered_json j;
  j["schema"] = "rim-inspect/summary-v1";
  j["frames"] = s.frames;
  j["skipped_frames_a"] = s.skipped_a;
  j["skipped_frames_b"] = s.skipped_b;
  j["cars"] = s.cars;
  j["verdicts"] = {{"pass", s.counts.count(Verdict::pass) ? s.counts.at(Verdict::pass) : 0},
                   {"fail", s.counts.count(Verdict::fail) ? s.counts.at(Verdict::fail) : 0},
                   {"inconclusive", s.counts.count(Verdict::inconclusive) ? s.counts.at(Verdict::inconclusive) : 0}};
  j["latency_budget_ms"] = s.budget_ms;
  j["frames_over_budget"] = s.over_budget;
  j["duplicate_class_keys"] = s.duplicate_class_keys;

  const std::array<std::pair<const char*, double StageTimes::*>, 6> stages{{{"decode", &StageTimes::decode_ms},
                                                                            {"detect", &StageTimes::detect_ms},
                                                                            {"track", &StageTimes::track_ms},
                                                                            {"classify", &StageTimes::classify_ms},
                                                                            {"size", &StageTimes::size_ms},
                                                                            {"verdict", &StageTimes::verdict_ms}}};
  ordered_json totals;
  for (auto [name, field] : stages) {
    double sum = 0, mx = 0;
    for (const StageTimes& t : s.timings) {
      sum += t.*field;
      mx = std::max(mx, t.*field);
    }
    totals[name] = {{"total_ms", sum}, {"mean_ms", s.timings.empty() ? 0.0 : sum / s.timings.size()}, {"max_ms", mx}};
  }
  j["stages"] = totals;
  ordered_json per = ordered_json::array();
  for (const StageTimes& t : s.timings) {
    ordered_json f;
    f["frame"] = t.frame;
    for (auto [name, field] : stages) f[std::string(name) + "_ms"] = t.*field;
    f["total_ms"] = t.total();
    per.push_back(f);
  }
  j["per_frame"] = per;
  return j.dump(2) + "\n";
}

RunSummary run_pipeline(const PipelineConfig& cfg, std::ostream& verdicts, std::ostream* tracks) {
  cfg.validate();
  if (cfg.camera_a.empty()) throw InvalidArgument("pipeline: camera A directory is required");
  if (cfg.cars.empty()) throw InvalidArgument("pipeline: car detections are required");
  const auto frames_a = list_frames(cfg.camera_a);
  if (frames_a.empty()) throw DataError("pipeline: no frames in " + cfg.camera_a.string());
  const auto frames_b = cfg.camera_b.empty() ? std::vector<std::filesystem::path>{} : list_frames(cfg.camera_b);

  const ExternalDetections cars = ExternalDetections::load(cfg.cars);
  std::optional<HoughDetectionSource> hough;
  std::optional<ExternalDetections> ext_a, ext_b, bolts_a, bolts_b;
  const DetectionSource* src_a = nullptr;
  const DetectionSource* src_b = nullptr;
  if (cfg.wheel_source == "hough_internal") {
    hough.emplace(cfg.wheels);
    src_a = src_b = &*hough;
  } else {
    if (cfg.wheels_a.empty()) throw InvalidArgument("pipeline: external wheel source needs wheels_a");
    ext_a = ExternalDetections::load(cfg.wheels_a);
    src_a = &*ext_a;
    if (!cfg.wheels_b.empty()) {
      ext_b = ExternalDetections::load(cfg.wheels_b);
      src_b = &*ext_b;
    }
  }
  if (cfg.bolt_source == "external_file") {
    if (cfg.bolts_a.empty()) throw InvalidArgument("pipeline: external bolt source needs bolts_a");
    bolts_a = ExternalDetections::load(cfg.bolts_a);
    if (!cfg.bolts_b.empty()) bolts_b = ExternalDetections::load(cfg.bolts_b);
  }
  std::unique_ptr<ClassSource> classes;
  RunSummary summary;
  if (cfg.class_source == "hog_svm_internal") {
    if (cfg.model.empty()) throw InvalidArgument("pipeline: hog_svm_internal needs a model file");
    classes = std::make_unique<SvmClassSource>(load_model(cfg.model));
  } else {
    if (cfg.classes.empty()) throw InvalidArgument("pipeline: external class source needs a classes file");
    auto ext = std::make_unique<ExternalClasses>(ExternalClasses::load(cfg.classes));
    summary.duplicate_class_keys = ext->duplicate_warnings();
    classes = std::move(ext);
  }

  const int n = static_cast<int>(frames_a.size());
  summary.frames = n;
  summary.budget_ms = cfg.latency_budget_ms;
  std::unique_ptr<Inspector> inspector;

  for (int k = 0; k < n; ++k) {
    StageTimes t;
    t.frame = k;
    auto t0 = Clock::now();
    std::string why;
    std::optional<Image> img_a = try_read(frames_a[k], &why);
    if (!img_a) {
      std::cerr << "warning: camera A frame " << k << " skipped: " << why << '\n';
      summary.skipped_a.push_back(k);
    }
    std::optional<Image> img_b;
    if (k < static_cast<int>(frames_b.size())) {
      img_b = try_read(frames_b[k], &why);
      if (!img_b) {
        std::cerr << "warning: camera B frame " << k << " skipped: " << why << '\n';
        summary.skipped_b.push_back(k);
      }
    }
    std::optional<Image> gray_a, gray_b;
    if (img_a) gray_a = to_grayscale(*img_a);
    if (img_b) gray_b = to_grayscale(*img_b);
    t.decode_ms = ms_since(t0);

    t0 = Clock::now();
    std::vector<Detection> car_dets, wheels_a, wheels_b;
    if (img_a) {
      car_dets = cars.detect(k, nullptr, Label::car);
      wheels_a = src_a->detect(k, &*img_a, Label::wheel);
    }
    if (img_b && src_b) wheels_b = src_b->detect(k, &*img_b, Label::wheel);
    t.detect_ms = ms_since(t0);

    t0 = Clock::now();
    if (!inspector) {
      // The camera-B window scales with the frame width, known once a frame decodes.
      if (!img_a) {
        summary.timings.push_back(t);
        continue;
      }
      inspector = std::make_unique<Inspector>(cfg.tracker, img_a->width);
    }
    const std::vector<Observation> obs = inspector->process(k, car_dets, wheels_a, wheels_b);
    if (tracks)
      for (const Observation& o : obs) *tracks << observation_line(o) << '\n';
    t.track_ms = ms_since(t0);

    std::vector<std::optional<std::vector<double>>> scores(obs.size());
    std::vector<SizeResult> sizes(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
      if (obs[i].label != Label::wheel) continue;
      const Image& frame = obs[i].camera == Camera::a ? *img_a : *img_b;
      t0 = Clock::now();
      try {
        scores[i] = classify_wheel(frame, obs[i].bbox, k, obs[i].track, *classes, cfg.crop_side);
      } catch (const Error& e) {
        throw DataError("classify: frame " + std::to_string(k) + " track " + std::to_string(obs[i].track) + ": " +
                        e.what());
      }
      t.classify_ms += ms_since(t0);

      t0 = Clock::now();
      const Image& gray = obs[i].camera == Camera::a ? *gray_a : *gray_b;
      std::vector<Detection> bolt_dets;
      const ExternalDetections* bolt_src = obs[i].camera == Camera::a ? (bolts_a ? &*bolts_a : nullptr)
                                                                      : (bolts_b ? &*bolts_b : nullptr);
      if (bolt_src) bolt_dets = bolt_src->detect(k, nullptr, Label::bolt);
      const bool external_bolts = cfg.bolt_source == "external_file";
      FitDebug dbg;
      sizes[i] = estimate_wheel_size(gray, obs[i].bbox, external_bolts ? &bolt_dets : nullptr, cfg,
                                     cfg.debug_overlay.empty() ? nullptr : &dbg);
      if (!cfg.debug_overlay.empty() && !dbg.overlay.empty()) {
        std::filesystem::create_directories(cfg.debug_overlay);
        write_png(cfg.debug_overlay / ((obs[i].camera == Camera::a ? "a_" : "b_") + crop_name(k, obs[i].track)),
                  dbg.overlay);
      }
      t.size_ms += ms_since(t0);
      inspector->annotate(obs[i], scores[i], &sizes[i]);
    }

    t0 = Clock::now();
    inspector->emit(&verdicts, false, &summary);
    t.verdict_ms = ms_since(t0);
    if (t.total() > cfg.latency_budget_ms) {
      ++summary.over_budget;
      std::cerr << "note: frame " << k << " took " << t.total() << " ms, budget " << cfg.latency_budget_ms << " ms\n";
    }
    summary.timings.push_back(t);
  }
  if (inspector) {
    const auto t0 = Clock::now();
    inspector->emit(&verdicts, true, &summary);
    if (!summary.timings.empty()) summary.timings.back().verdict_ms += ms_since(t0);
  }
  return summary;
}

void run_detect(const std::filesystem::path& dir, const WheelHoughParams& params, std::ostream& out) {
  const auto frames = list_frames(dir);
  if (frames.empty()) throw DataError("detect: no frames in " + dir.string());
  std::vector<std::string> lines;
  int width = 0, height = 0;
  for (int k = 0; k < static_cast<int>(frames.size()); ++k) {
    std::string why;
    const std::optional<Image> img = try_read(frames[k], &why);
    if (!img) {
      std::cerr << "warning: frame " << k << " skipped: " << why << '\n';
      lines.push_back(skipped_frame_line(k, why));
      continue;
    }
    if (width == 0) {
      width = img->width;
      height = img->height;
    }
    for (const Detection& d : detect_wheels(*img, params, k)) lines.push_back(detection_line(d));
  }
  out << detection_header_line(static_cast<int>(frames.size()), "hough_internal", std::max(width, 1),
                               std::max(height, 1))
      << '\n';
  for (const std::string& l : lines) out << l << '\n';
}

int run_track(const TrackInputs& in, const TrackerConfig& cfg, std::ostream* tracks, std::ostream* verdicts) {
  if (!in.cars || !in.wheels_a) throw InvalidArgument("track: car and camera-A wheel detections are required");
  int width = in.frame_width;
  if (width <= 0) width = in.wheels_a->frame_width().value_or(0);
  if (width <= 0) throw InvalidArgument("track: frame width unknown; pass it explicitly");
  // Camera A drives the frame clock, as in run_pipeline.
  const int frames = in.wheels_a->frame_count();

  Inspector inspector(cfg, width);
  int written = 0;
  bool started = false;
  for (int k = 0; k < frames; ++k) {
    const bool skip_a = in.wheels_a->skipped(k);
    if (skip_a && !started) continue;
    started = true;
    std::vector<Detection> cars, wa, wb;
    if (!skip_a) {
      cars = in.cars->detect(k, nullptr, Label::car);
      wa = in.wheels_a->detect(k, nullptr, Label::wheel);
    }
    if (in.wheels_b) wb = in.wheels_b->detect(k, nullptr, Label::wheel);
    const std::vector<Observation> obs = inspector.process(k, cars, wa, wb);
    for (const Observation& o : obs) {
      if (tracks) *tracks << observation_line(o) << '\n';
      if (o.label != Label::wheel) continue;
      std::optional<std::vector<double>> scores;
      if (in.classes) scores = in.classes->scores(o.frame, o.track, nullptr, {});
      const SizeResult* size = nullptr;
      if (in.sizes)
        if (auto it = in.sizes->find({o.frame, o.track}); it != in.sizes->end()) size = &it->second;
      inspector.annotate(o, scores, size);
    }
    written += inspector.emit(verdicts, false, nullptr);
  }
  written += inspector.emit(verdicts, true, nullptr);
  return written;
}

namespace {

template <typename Fn>
void for_each_wheel_frame(const PipelineConfig& cfg, const std::vector<Observation>& obs, Fn&& fn) {
  const auto frames_a = list_frames(cfg.camera_a);
  const auto frames_b = cfg.camera_b.empty() ? std::vector<std::filesystem::path>{} : list_frames(cfg.camera_b);
  std::map<std::pair<int, int>, Image> cache;  // (camera, frame); observations arrive in frame order
  for (const Observation& o : obs) {
    if (o.label != Label::wheel) continue;
    const auto& list = o.camera == Camera::a ? frames_a : frames_b;
    if (o.frame < 0 || o.frame >= static_cast<int>(list.size()))
      throw DataError("no camera " + std::string(o.camera == Camera::a ? "A" : "B") + " frame " +
                      std::to_string(o.frame));
    const std::pair<int, int> key{static_cast<int>(o.camera), o.frame};
    auto it = cache.find(key);
    if (it == cache.end()) {
      std::erase_if(cache, [&](const auto& kv) { return kv.first.second < o.frame; });
      it = cache.emplace(key, read_image(list[o.frame])).first;
    }
    fn(o, it->second);
  }
}

}  // namespace

void run_classify(const PipelineConfig& cfg, const std::vector<Observation>& obs, const ClassSource& source,
                  std::ostream& out) {
  for_each_wheel_frame(cfg, obs, [&](const Observation& o, const Image& frame) {
    const auto scores = classify_wheel(frame, o.bbox, o.frame, o.track, source, cfg.crop_side);
    if (scores) out << class_line(o.frame, o.track, *scores) << '\n';
  });
}

void run_fit(const PipelineConfig& cfg, const std::vector<Observation>& obs, std::ostream& out) {
  std::optional<ExternalDetections> bolts_a, bolts_b;
  const bool external = cfg.bolt_source == "external_file";
  if (external) {
    if (cfg.bolts_a.empty()) throw InvalidArgument("fit: external bolt source needs bolts_a");
    bolts_a = ExternalDetections::load(cfg.bolts_a);
    if (!cfg.bolts_b.empty()) bolts_b = ExternalDetections::load(cfg.bolts_b);
  }
  for_each_wheel_frame(cfg, obs, [&](const Observation& o, const Image& frame) {
    std::vector<Detection> bolt_dets;
    const auto& src = o.camera == Camera::a ? bolts_a : bolts_b;
    if (src) bolt_dets = src->detect(o.frame, nullptr, Label::bolt);
    FitDebug dbg;
    const SizeResult r = estimate_wheel_size(to_grayscale(frame), o.bbox, external ? &bolt_dets : nullptr, cfg,
                                             cfg.debug_overlay.empty() ? nullptr : &dbg);
    if (!cfg.debug_overlay.empty() && !dbg.overlay.empty()) {
      std::filesystem::create_directories(cfg.debug_overlay);
      write_png(cfg.debug_overlay / ((o.camera == Camera::a ? "a_" : "b_") + crop_name(o.frame, o.track)),
                dbg.overlay);
    }
    out << size_line(o.frame, o.track, r) << '\n';
  });
}

}  // namespace rim
