#include "rim/providers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "rim/errors.hpp"
#include "rim/hog.hpp"
#include "rim/imgproc.hpp"

namespace rim {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void line_error(const std::string& origin, int lineno, const std::string& what) {
  throw DataError(origin + ":" + std::to_string(lineno) + ": " + what);
}

long long key_of(int frame, Label label) { return static_cast<long long>(frame) * 8 + static_cast<int>(label); }

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

void check_schema(const json& j, std::string_view expected, const std::string& origin, int lineno) {
  if (!j.contains("schema")) return;
  if (!j["schema"].is_string() || j["schema"].get<std::string>() != expected)
    line_error(origin, lineno, "unsupported schema, expected \"" + std::string(expected) + "\"");
}

std::vector<double> read_scores(const json& j, const std::string& origin, int lineno) {
  if (!j.contains("scores") || !j["scores"].is_array()) line_error(origin, lineno, "missing \"scores\" array");
  const json& arr = j["scores"];
  if (arr.size() != static_cast<std::size_t>(RimClass::kCount))
    line_error(origin, lineno,
               "expected " + std::to_string(RimClass::kCount) + " scores, got " + std::to_string(arr.size()));
  std::vector<double> scores;
  for (const json& v : arr) {
    if (!v.is_number() || !std::isfinite(v.get<double>())) line_error(origin, lineno, "scores must be finite numbers");
    scores.push_back(v.get<double>());
  }
  return scores;
}

}  // namespace

std::vector<Detection> detect_wheels(const Image& frame, const WheelHoughParams& params, int frame_index) {
  const Image pre = preprocess_for_hough(frame, params.downscale, params.blur_sigma);
  const std::vector<Circle> circles = detect_circles(pre, params.hough);
  std::vector<Detection> out;
  for (const Circle& c : circles) {
    const bool nested = std::any_of(circles.begin(), circles.end(), [&](const Circle& o) {
      return o.r > c.r && std::hypot(o.cx - c.cx, o.cy - c.cy) < 0.5 * o.r;
    });
    if (!nested) out.push_back(circle_to_detection(c, params.downscale, frame_index));
  }
  return out;
}

std::vector<Detection> HoughDetectionSource::detect(int frame, const Image* image, Label wanted) const {
  if (wanted != Label::wheel) return {};
  if (!image) throw InvalidArgument("hough_internal needs the frame image");
  return detect_wheels(*image, params_, frame);
}

ExternalDetections ExternalDetections::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open detections file " + path.string());
  return parse(in, path.string());
}

ExternalDetections ExternalDetections::parse(std::istream& in, const std::string& origin) {
  ExternalDetections src;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      line_error(origin, lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) line_error(origin, lineno, "expected a JSON object");
    check_schema(j, kDetectionSchema, origin, lineno);
    if (!j.contains("label")) {
      if (j.contains("skipped")) {
        if (!j.contains("frame") || !j["frame"].is_number_integer() || j["frame"].get<long long>() < 0)
          line_error(origin, lineno, "skip record needs a non-negative integer \"frame\"");
        src.skipped_.insert(j["frame"].get<int>());
        src.header_frames_ = std::max(src.header_frames_.value_or(0), j["frame"].get<int>() + 1);
      }
      if (j.contains("width")) {
        if (!j["width"].is_number_integer() || j["width"].get<int>() <= 0)
          line_error(origin, lineno, "\"width\" must be a positive integer");
        src.width_ = j["width"].get<int>();
      }
      if (j.contains("frames")) {
        if (!j["frames"].is_number_integer() || j["frames"].get<int>() < 0)
          line_error(origin, lineno, "\"frames\" must be a non-negative integer");
        src.header_frames_ = std::max(src.header_frames_.value_or(0), j["frames"].get<int>());
      }
      continue;
    }
    Detection d;
    if (!j.contains("frame") || !j["frame"].is_number_integer() || j["frame"].get<long long>() < 0)
      line_error(origin, lineno, "\"frame\" must be a non-negative integer");
    d.frame = j["frame"].get<int>();
    if (!j["label"].is_string()) line_error(origin, lineno, "\"label\" must be a string");
    const auto label = parse_label(j["label"].get<std::string>());
    if (!label) line_error(origin, lineno, "unknown label \"" + j["label"].get<std::string>() + "\"");
    d.label = *label;
    if (!j.contains("bbox") || !j["bbox"].is_array() || j["bbox"].size() != 4)
      line_error(origin, lineno, "\"bbox\" must be [x, y, w, h]");
    double b[4];
    for (int i = 0; i < 4; ++i) {
      if (!j["bbox"][i].is_number()) line_error(origin, lineno, "\"bbox\" entries must be numbers");
      b[i] = j["bbox"][i].get<double>();
    }
    try {
      d.bbox = make_bbox(b[0], b[1], b[2], b[3]);
    } catch (const InvalidArgument& e) {
      line_error(origin, lineno, e.what());
    }
    if (!j.contains("score") || !j["score"].is_number()) line_error(origin, lineno, "\"score\" must be a number");
    d.score = j["score"].get<double>();
    if (!(d.score >= 0 && d.score <= 1)) line_error(origin, lineno, "\"score\" must lie in [0, 1]");
    src.index_[key_of(d.frame, d.label)].push_back(src.all_.size());
    src.all_.push_back(d);
  }
  return src;
}

std::vector<Detection> ExternalDetections::detect(int frame, const Image*, Label wanted) const {
  std::vector<Detection> out;
  if (auto it = index_.find(key_of(frame, wanted)); it != index_.end())
    for (std::size_t i : it->second) out.push_back(all_[i]);
  return out;
}

int ExternalDetections::frame_count() const {
  int n = header_frames_.value_or(0);
  for (const Detection& d : all_) n = std::max(n, d.frame + 1);
  return n;
}

std::string detection_header_line(int frames, std::string_view source, int width, int height) {
  ordered_json j;
  j["schema"] = kDetectionSchema;
  j["frames"] = frames;
  j["width"] = width;
  j["height"] = height;
  j["source"] = source;
  return j.dump();
}

std::string skipped_frame_line(int frame, const std::string& reason) {
  ordered_json j;
  j["frame"] = frame;
  j["skipped"] = reason;
  return j.dump();
}

std::string detection_line(const Detection& d) {
  ordered_json j;
  j["frame"] = d.frame;
  j["label"] = to_string(d.label);
  j["bbox"] = {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h};
  j["score"] = d.score;
  return j.dump();
}

SvmClassSource::SvmClassSource(SvmModel model) : model_(std::move(model)) { model_.validate(); }

std::optional<std::vector<double>> SvmClassSource::scores(int, int, const Image* crop, const std::string&) const {
  if (!crop) throw InvalidArgument("hog_svm_internal needs the wheel crop");
  if (crop->width != model_.side || crop->height != model_.side)
    throw InvalidArgument("hog_svm_internal: crop is " + std::to_string(crop->width) + "x" +
                          std::to_string(crop->height) + ", model expects " + std::to_string(model_.side));
  const std::vector<double> feat = hog_features(to_grayscale(*crop), model_.hog);
  return margins_to_scores(model_, svm_predict(model_, feat).margins);
}

ExternalClasses ExternalClasses::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open class scores file " + path.string());
  return parse(in, path.string());
}

ExternalClasses ExternalClasses::parse(std::istream& in, const std::string& origin) {
  ExternalClasses src;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      line_error(origin, lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) line_error(origin, lineno, "expected a JSON object");
    check_schema(j, kClassSchema, origin, lineno);
    if (!j.contains("scores") && !j.contains("frame") && !j.contains("crop")) continue;  // header
    std::vector<double> scores = read_scores(j, origin, lineno);
    bool replaced = false;
    if (j.contains("crop")) {
      if (!j["crop"].is_string()) line_error(origin, lineno, "\"crop\" must be a string");
      replaced = !src.by_crop_.insert_or_assign(j["crop"].get<std::string>(), std::move(scores)).second;
    } else {
      if (!j.contains("frame") || !j["frame"].is_number_integer() || !j.contains("track") ||
          !j["track"].is_number_integer())
        line_error(origin, lineno, "need integer \"frame\" and \"track\", or \"crop\"");
      replaced = !src.by_track_
                      .insert_or_assign(std::pair{j["frame"].get<int>(), j["track"].get<int>()}, std::move(scores))
                      .second;
    }
    if (replaced) ++src.duplicates_;
  }
  return src;
}

std::optional<std::vector<double>> ExternalClasses::scores(int frame, int track, const Image*,
                                                           const std::string& crop_name) const {
  if (auto it = by_track_.find({frame, track}); it != by_track_.end()) return it->second;
  if (!crop_name.empty())
    if (auto it = by_crop_.find(crop_name); it != by_crop_.end()) return it->second;
  return std::nullopt;
}

std::string class_line(int frame, int track, std::span<const double> scores) {
  ordered_json j;
  j["frame"] = frame;
  j["track"] = track;
  j["scores"] = std::vector<double>(scores.begin(), scores.end());
  return j.dump();
}

RimClass class_from_scores(std::span<const double> scores) {
  if (scores.size() != static_cast<std::size_t>(RimClass::kCount))
    throw InvalidArgument("class scores: expected " + std::to_string(RimClass::kCount) + " values");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return RimClass(static_cast<int>(best));
}

}  // namespace rim
