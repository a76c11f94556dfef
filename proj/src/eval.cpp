#include "rim/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rim/errors.hpp"
#include "rim/image_io.hpp"

namespace rim {

MatchResult match_detections(std::span<const Detection> dets, std::span<const GroundTruth> gts, double iou_t) {
  MatchResult out;
  out.n_gt = static_cast<int>(gts.size());
  out.order.resize(dets.size());
  std::iota(out.order.begin(), out.order.end(), std::size_t{0});
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  std::vector<bool> taken(gts.size(), false);
  int matched = 0;
  for (std::size_t i : out.order) {
    const Detection& d = dets[i];
    int best = -1;
    double best_iou = 0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || gts[g].frame != d.frame || gts[g].label != d.label) continue;
      const double v = iou(d.bbox, gts[g].bbox);
      if (v >= iou_t && (best < 0 || v > best_iou)) {
        best = static_cast<int>(g);
        best_iou = v;
      }
    }
    if (best >= 0) {
      taken[best] = true;
      ++matched;
    }
    out.scores.push_back(d.score);
    out.tp.push_back(best >= 0);
  }
  out.fn = out.n_gt - matched;
  return out;
}

PrCurve average_precision(const std::vector<bool>& tp, int n_gt, ApInterpolation interp) {
  if (n_gt < 0) throw InvalidArgument("average_precision: negative ground-truth count");
  PrCurve c;
  int ctp = 0;
  for (std::size_t i = 0; i < tp.size(); ++i) {
    ctp += tp[i] ? 1 : 0;
    c.recall.push_back(n_gt ? static_cast<double>(ctp) / n_gt : 0.0);
    c.precision.push_back(static_cast<double>(ctp) / static_cast<double>(i + 1));
  }
  if (n_gt == 0) {
    c.defined = false;
    return c;
  }
  if (interp == ApInterpolation::all_point) {
    std::vector<double> env = c.precision;
    for (std::size_t i = env.size(); i-- > 1;) env[i - 1] = std::max(env[i - 1], env[i]);
    double prev = 0;
    for (std::size_t i = 0; i < env.size(); ++i) {
      c.ap += (c.recall[i] - prev) * env[i];
      prev = c.recall[i];
    }
  } else {
    for (int t = 0; t <= 10; ++t) {
      const double r = t / 10.0;
      double p = 0;
      for (std::size_t i = 0; i < c.recall.size(); ++i)
        if (c.recall[i] >= r) p = std::max(p, c.precision[i]);
      c.ap += p / 11;
    }
  }
  return c;
}

MapResult map_range(std::span<const Detection> dets, std::span<const GroundTruth> gts, double t_lo, double t_hi,
                    double step, ApInterpolation interp) {
  if (!(t_lo <= t_hi) || !(step > 0)) throw InvalidArgument("map_range: need t_lo <= t_hi and step > 0");
  MapResult out;
  for (int i = 0;; ++i) {
    const double t = std::round((t_lo + i * step) * 1e6) / 1e6;
    if (t > t_hi + 1e-9) break;
    out.thresholds.push_back(t);
    const MatchResult m = match_detections(dets, gts, t);
    const PrCurve c = average_precision(m.tp, m.n_gt, interp);
    out.aps.push_back(c.ap);
    out.defined = c.defined;
  }
  out.mean = std::accumulate(out.aps.begin(), out.aps.end(), 0.0) / static_cast<double>(out.aps.size());
  return out;
}

OperatingPoint best_f1(const MatchResult& m) {
  OperatingPoint best;
  int ctp = 0;
  for (std::size_t i = 0; i < m.tp.size(); ++i) {
    ctp += m.tp[i] ? 1 : 0;
    if (i + 1 < m.tp.size() && m.scores[i + 1] == m.scores[i]) continue;
    OperatingPoint op;
    op.precision = static_cast<double>(ctp) / static_cast<double>(i + 1);
    op.recall = m.n_gt ? static_cast<double>(ctp) / m.n_gt : 0.0;
    op.f1 = op.precision + op.recall > 0 ? 2 * op.precision * op.recall / (op.precision + op.recall) : 0.0;
    op.score_threshold = m.scores[i];
    if (!best.score_threshold || op.f1 > best.f1) best = op;
  }
  return best;
}

ConfusionMatrix confusion_matrix(std::span<const RimClass> pred, std::span<const RimClass> truth) {
  if (pred.size() != truth.size())
    throw InvalidArgument("confusion_matrix: " + std::to_string(pred.size()) + " predictions for " +
                          std::to_string(truth.size()) + " labels");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++cm.counts[truth[i].id()][pred[i].id()];
    cm.correct += pred[i] == truth[i] ? 1 : 0;
  }
  cm.total = static_cast<long>(pred.size());
  return cm;
}

std::string format_accuracy(long correct, long total) {
  if (total <= 0) return "n/a";
  const long hundredths = correct * 10000 / total;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%ld.%02ld%%", hundredths / 100, hundredths % 100);
  return buf;
}

std::vector<LabelReport> evaluate_detections(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                                             std::optional<Label> only, ApInterpolation interp) {
  std::set<Label> labels;
  for (const auto& g : gts) labels.insert(g.label);
  for (const auto& d : dets) labels.insert(d.label);
  if (only) labels = {*only};

  std::vector<LabelReport> out;
  for (Label label : labels) {
    std::vector<Detection> ld;
    std::vector<GroundTruth> lg;
    for (const auto& d : dets)
      if (d.label == label) ld.push_back(d);
    for (const auto& g : gts)
      if (g.label == label) lg.push_back(g);
    LabelReport r;
    r.label = label;
    r.n_gt = static_cast<int>(lg.size());
    r.n_det = static_cast<int>(ld.size());
    const MatchResult m = match_detections(ld, lg, 0.5);
    r.op = best_f1(m);
    r.curve = average_precision(m.tp, m.n_gt, interp);
    r.map50 = r.curve.ap;
    r.map50_95 = map_range(ld, lg, 0.5, 0.95, 0.05, interp);
    out.push_back(std::move(r));
  }
  return out;
}

std::string eval_report_json(const std::vector<LabelReport>& reports, ApInterpolation interp) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["interpolation"] = interp == ApInterpolation::all_point ? "all_point" : "eleven_point";
  doc["operating_point"] = "score threshold maximizing F1 at IoU 0.5";
  ordered_json labels = ordered_json::array();
  double sp = 0, sr = 0, s50 = 0, s5095 = 0;
  int n = 0;
  for (const LabelReport& r : reports) {
    ordered_json j;
    j["label"] = std::string(to_string(r.label));
    j["n_gt"] = r.n_gt;
    j["n_det"] = r.n_det;
    j["precision"] = r.op.precision;
    j["recall"] = r.op.recall;
    j["f1"] = r.op.f1;
    j["score_threshold"] = r.op.score_threshold ? ordered_json(*r.op.score_threshold) : ordered_json(nullptr);
    j["ap_defined"] = r.curve.defined;
    j["map50"] = r.map50;
    j["map50_95"] = r.map50_95.mean;
    ordered_json per = ordered_json::array();
    for (std::size_t i = 0; i < r.map50_95.thresholds.size(); ++i)
      per.push_back({{"iou", r.map50_95.thresholds[i]}, {"ap", r.map50_95.aps[i]}});
    j["ap_per_threshold"] = per;
    j["curve"] = {{"recall", r.curve.recall}, {"precision", r.curve.precision}};
    labels.push_back(j);
    if (r.curve.defined) {
      sp += r.op.precision;
      sr += r.op.recall;
      s50 += r.map50;
      s5095 += r.map50_95.mean;
      ++n;
    }
  }
  doc["labels"] = labels;
  if (n > 0) {
    doc["mean"] = {{"precision", sp / n}, {"recall", sr / n}, {"map50", s50 / n}, {"map50_95", s5095 / n}};
  } else {
    doc["mean"] = nullptr;
  }
  return doc.dump(2) + "\n";
}

std::vector<GroundTruth> parse_yolo_labels(const std::string& text, int frame, int image_width, int image_height,
                                           const std::map<int, Label>& class_map) {
  if (image_width <= 0 || image_height <= 0) throw InvalidArgument("yolo labels: image size must be positive");
  std::vector<GroundTruth> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    int cls;
    double cx, cy, w, h;
    std::string extra;
    if (!(ls >> cls >> cx >> cy >> w >> h) || (ls >> extra))
      throw DataError("yolo labels: line " + std::to_string(lineno) + ": expected 'class cx cy w h'");
    if (w <= 0 || h <= 0)
      throw DataError("yolo labels: line " + std::to_string(lineno) + ": non-positive box size");
    auto it = class_map.find(cls);
    if (it == class_map.end()) continue;
    out.push_back({frame, it->second,
                   make_bbox((cx - w / 2) * image_width, (cy - h / 2) * image_height, w * image_width,
                             h * image_height)});
  }
  return out;
}

std::vector<GroundTruth> load_yolo_dir(const std::filesystem::path& dir, const std::map<int, Label>& class_map,
                                       std::optional<std::pair<int, int>> fallback_size) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("ground truth: not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("ground truth: no .txt files in " + dir.string());

  std::vector<GroundTruth> out;
  for (std::size_t k = 0; k < files.size(); ++k) {
    std::optional<std::pair<int, int>> size;
    for (const char* ext : {".png", ".jpg", ".jpeg", ".pgm"}) {
      fs::path img = files[k];
      img.replace_extension(ext);
      if (fs::exists(img)) {
        const Image im = read_image(img);
        size = {im.width, im.height};
        break;
      }
    }
    if (!size) size = fallback_size;
    if (!size) throw DataError("ground truth: no image next to " + files[k].string() + " and no size given");
    std::ifstream f(files[k]);
    std::stringstream ss;
    ss << f.rdbuf();
    try {
      auto gts = parse_yolo_labels(ss.str(), static_cast<int>(k), size->first, size->second, class_map);
      out.insert(out.end(), gts.begin(), gts.end());
    } catch (const DataError& e) {
      throw DataError(files[k].string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace rim
