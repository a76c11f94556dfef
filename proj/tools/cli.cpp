#include "cli.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rim/config.hpp"
#include "rim/errors.hpp"
#include "rim/eval.hpp"
#include "rim/image_io.hpp"
#include "rim/imgproc.hpp"
#include "rim/pipeline.hpp"
#include "rim/synth.hpp"

namespace rim {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Writes to a file, or to the fallback stream when the path is empty or "-".
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      stream_ = &fallback;
    } else {
      if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw DataError("cannot write " + path);
      stream_ = file_.get();
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
}

std::map<int, Label> parse_class_map(const std::string& spec) {
  std::map<int, Label> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw InvalidArgument("class map entries look like 1:wheel, got \"" + item + "\"");
    const auto label = parse_label(item.substr(colon + 1));
    if (!label) throw InvalidArgument("class map: unknown label \"" + item.substr(colon + 1) + "\"");
    try {
      out[std::stoi(item.substr(0, colon))] = *label;
    } catch (const std::exception&) {
      throw InvalidArgument("class map: bad class index in \"" + item + "\"");
    }
  }
  return out;
}

// Class id from a dataset directory name: the trailing number (C07, 07, wheel_7).
std::optional<int> class_from_dirname(const std::string& name) {
  std::size_t end = name.size(), begin = end;
  while (begin > 0 && std::isdigit(static_cast<unsigned char>(name[begin - 1]))) --begin;
  if (begin == end) return std::nullopt;
  const int id = std::stoi(name.substr(begin));
  if (id < 0 || id >= RimClass::kCount) return std::nullopt;
  return id;
}

struct Sample {
  std::vector<double> features;
  int label = 0;
};

// Classifier benchmark: per-class 4:1:1 train/val/test split (100/25/25 for 150
// images), report validation and test accuracy.
ordered_json train_svm_command(const fs::path& dataset, const HogConfig& hog, const SvmTrainParams& params,
                               int side, const fs::path& model_out, std::ostream& out) {
  if (!fs::is_directory(dataset)) throw DataError("train-svm: not a directory: " + dataset.string());
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(dataset))
    if (e.is_directory()) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  std::vector<std::pair<int, fs::path>> classes;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const auto id = class_from_dirname(dirs[i].filename().string());
    classes.push_back({id.value_or(static_cast<int>(i) + 1), dirs[i]});
  }
  if (classes.size() < 2) throw DataError("train-svm: need at least 2 class directories");

  std::mt19937_64 rng(params.seed);
  std::vector<Sample> train, val, test;
  for (const auto& [id, dir] : classes) {
    std::vector<Sample> samples;
    for (const fs::path& p : list_frames(dir)) {
      const Image gray = to_grayscale(read_image(p));
      const Image sq = gray.width == side && gray.height == side
                           ? gray
                           : crop_square(gray, make_bbox(0, 0, gray.width, gray.height), side);
      samples.push_back({hog_features(sq, hog), id});
    }
    if (samples.size() < 3)
      throw DataError("train-svm: class directory " + dir.string() + " has fewer than 3 images");
    std::shuffle(samples.begin(), samples.end(), rng);
    const std::size_t n = samples.size();
    const std::size_t n_test = std::max<std::size_t>(1, n / 6), n_val = std::max<std::size_t>(1, n / 6);
    for (std::size_t i = 0; i < n; ++i) {
      auto& dst = i < n_test ? test : i < n_test + n_val ? val : train;
      dst.push_back(std::move(samples[i]));
    }
  }
  std::vector<std::vector<double>> feats;
  std::vector<int> labels;
  for (Sample& s : train) {
    feats.push_back(std::move(s.features));
    labels.push_back(s.label);
  }
  const SvmModel model = svm_train(feats, labels, params, hog, side);
  if (!model_out.empty()) save_model(model_out, model);

  auto accuracy = [&](const std::vector<Sample>& set) {
    std::vector<RimClass> pred, truth;
    for (const Sample& s : set) {
      pred.push_back(svm_predict(model, s.features).cls);
      truth.push_back(RimClass(s.label));
    }
    return confusion_matrix(pred, truth);
  };
  const ConfusionMatrix cv = accuracy(val), ct = accuracy(test);
  ordered_json row;
  row["orientations"] = hog.orientations;
  row["pixels_per_cell"] = hog.cell;
  row["block"] = hog.block;
  row["features"] = hog_dims(hog, side);
  row["val_accuracy"] = cv.accuracy();
  row["test_accuracy"] = ct.accuracy();
  row["train_samples"] = train.size();
  row["val_samples"] = val.size();
  row["test_samples"] = test.size();
  row["classes"] = classes.size();
  out << "orientation  pixels_per_cell  val_accuracy  test_accuracy  features\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "%11d  %15d  %12s  %13s  %8zu\n", hog.orientations, hog.cell,
                format_accuracy(cv.correct, cv.total).c_str(), format_accuracy(ct.correct, ct.total).c_str(),
                hog_dims(hog, side));
  out << buf;
  return row;
}

ordered_json ellipse_json(const Ellipse& e) {
  return {{"cx", e.cx}, {"cy", e.cy}, {"a", e.a}, {"b", e.b}, {"theta", e.theta}};
}

ordered_json box_json(const BBox& b) { return {b.x, b.y, b.w, b.h}; }

std::string frame_file(int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04d.png", k);
  return buf;
}

struct SynthOptions {
  std::string kind = "car";
  std::string out;
  int count = 10;
  int frames = 30;
  double tilt = 20;
  int spokes = 5;
  double rim_mm = 432;
  double noise = 4;
  int rr_spokes = -1;
  bool no_camera_b = false;
};

void synth_command(const SynthOptions& o, std::uint64_t seed, std::ostream& out) {
  if (o.out.empty()) throw InvalidArgument("synth: --out is required");
  const fs::path dir = o.out;
  fs::create_directories(dir);
  if (o.kind == "wheel") {
    SceneSpec s{640, 640, 0.8, 0, {}, {}, o.noise, seed};
    WheelSpec w;
    w.center = {320, 320};
    w.tilt_deg = o.tilt;
    w.spokes = o.spokes;
    w.rim_mm = o.rim_mm;
    s.wheels.push_back(w);
    auto [img, truth] = render_wheel(s);
    write_png(dir / "wheel.png", img);
    const WheelTruth& t = truth.wheels.front();
    ordered_json j;
    j["box"] = box_json(t.box);
    j["class"] = t.class_id;
    j["rim"] = ellipse_json(t.rim);
    j["pitch"] = ellipse_json(t.pitch);
    j["tyre"] = ellipse_json(t.tyre);
    ordered_json bolts = ordered_json::array();
    for (const BBox& b : t.bolt_boxes) bolts.push_back(box_json(b));
    j["bolts"] = bolts;
    j["rim_mm"] = o.rim_mm;
    j["pitch_mm"] = w.pitch_mm;
    write_text(dir / "truth.json", j.dump(2) + "\n");
    // The bolt boxes double as an external bolt detection file.
    std::ostringstream bl;
    bl << detection_header_line(1, "synth", img.width, img.height) << '\n';
    for (const BBox& b : t.bolt_boxes) bl << detection_line({0, Label::bolt, b, 1.0}) << '\n';
    write_text(dir / "bolts.jsonl", bl.str());
  } else if (o.kind == "rings") {
    ordered_json all = ordered_json::array();
    for (int i = 0; i < o.count; ++i) {
      RingSceneSpec rs;
      rs.noise_sigma = o.noise;
      const RingScene sc = make_ring_scene(rs, seed + static_cast<std::uint64_t>(i));
      char name[32];
      std::snprintf(name, sizeof name, "scene_%04d", i);
      write_png(dir / (std::string(name) + ".png"), sc.image);
      std::ostringstream yolo;
      ordered_json circles = ordered_json::array();
      for (const Circle& c : sc.truth) {
        char line[128];
        std::snprintf(line, sizeof line, "1 %.9f %.9f %.9f %.9f\n", c.cx / rs.width, c.cy / rs.height,
                      2 * c.r / rs.width, 2 * c.r / rs.height);
        yolo << line;
        circles.push_back({{"cx", c.cx}, {"cy", c.cy}, {"r", c.r}});
      }
      write_text(dir / (std::string(name) + ".txt"), yolo.str());
      all.push_back({{"image", std::string(name) + ".png"}, {"circles", circles}});
    }
    write_text(dir / "truth.json", all.dump(2) + "\n");
  } else if (o.kind == "car") {
    CarSequenceSpec spec;
    spec.frames = o.frames;
    spec.seed = seed;
    spec.noise_sigma = o.noise;
    if (o.rr_spokes >= 0) spec.cars.front().spokes[WheelPosition::RR] = o.rr_spokes;
    const CarSequence seq = make_car_sequence(spec);
    fs::create_directories(dir / "a");
    if (!o.no_camera_b) fs::create_directories(dir / "b");
    std::ostringstream cars, truth;
    cars << detection_header_line(spec.frames, "synth", spec.width, spec.height) << '\n';
    for (int k = 0; k < spec.frames; ++k) {
      write_png(dir / "a" / frame_file(k), seq.camera_a[k]);
      if (!o.no_camera_b) write_png(dir / "b" / frame_file(k), seq.camera_b[k]);
      for (const Detection& d : seq.cars[k]) cars << detection_line(d) << '\n';
      for (const auto* side : {&seq.wheels_a[k], &seq.wheels_b[k]}) {
        for (const TruthWheel& w : *side) {
          ordered_json j;
          j["frame"] = k;
          j["camera"] = side == &seq.wheels_a[k] ? "a" : "b";
          j["position"] = to_string(w.position);
          j["car"] = w.car;
          j["class"] = w.class_id;
          j["rim_mm"] = w.rim_mm;
          j["bbox"] = box_json(w.box);
          truth << j.dump() << '\n';
        }
      }
    }
    write_text(dir / "cars.jsonl", cars.str());
    write_text(dir / "truth.jsonl", truth.str());
  } else if (o.kind == "dataset") {
    write_rim_dataset(dir, o.count, seed);
  } else {
    throw InvalidArgument("synth: unknown kind \"" + o.kind + "\" (wheel, rings, car, dataset)");
  }
  out << "wrote " << o.kind << " artifacts to " << dir.string() << '\n';
}

std::unique_ptr<ClassSource> make_class_source(const PipelineConfig& cfg, std::ostream& err) {
  if (cfg.class_source == "hog_svm_internal") {
    if (cfg.model.empty()) throw InvalidArgument("hog_svm_internal needs --model");
    return std::make_unique<SvmClassSource>(load_model(cfg.model));
  }
  if (cfg.classes.empty()) throw InvalidArgument("external class source needs --classes");
  auto src = std::make_unique<ExternalClasses>(ExternalClasses::load(cfg.classes));
  if (src->duplicate_warnings() > 0)
    err << "warning: " << src->duplicate_warnings() << " repeated class-score keys, later lines win\n";
  return src;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Car-wheel rim inspection: detection, classification, size estimation, tracking"};
  app.name("rim-inspect");
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, overlay;
  std::uint64_t seed = 42;
  app.add_option("--config", config_path, "TOML-style config file")->check(CLI::ExistingFile);
  CLI::Option* seed_opt = app.add_option("--seed", seed, "seed for synthetic data and SVM training");
  CLI::Option* overlay_opt = app.add_option("--debug-overlay", overlay, "directory for annotated wheel crops");

  // Every flag overrides the matching config key; applied after the config file.
  std::vector<std::function<void(PipelineConfig&)>> overrides;
  auto path_opt = [&](CLI::App* sub, const std::string& name, fs::path PipelineConfig::*field,
                      const std::string& help) {
    auto value = std::make_shared<std::string>();
    CLI::Option* opt = sub->add_option(name, *value, help);
    overrides.push_back([opt, value, field](PipelineConfig& c) {
      if (opt->count() > 0) c.*field = *value;
    });
  };
  auto text_opt = [&](CLI::App* sub, const std::string& name, std::string PipelineConfig::*field,
                      const std::string& help) {
    auto value = std::make_shared<std::string>();
    CLI::Option* opt = sub->add_option(name, *value, help);
    overrides.push_back([opt, value, field](PipelineConfig& c) {
      if (opt->count() > 0) c.*field = *value;
    });
  };

  CLI::App* inspect = app.add_subcommand("inspect", "run the full pipeline and write verdicts");
  path_opt(inspect, "--camera-a", &PipelineConfig::camera_a, "camera A frame directory");
  path_opt(inspect, "--camera-b", &PipelineConfig::camera_b, "camera B frame directory");
  path_opt(inspect, "--cars", &PipelineConfig::cars, "car detections (JSONL)");
  text_opt(inspect, "--wheel-source", &PipelineConfig::wheel_source, "hough_internal or external_file");
  path_opt(inspect, "--wheels-a", &PipelineConfig::wheels_a, "external camera A wheel detections");
  path_opt(inspect, "--wheels-b", &PipelineConfig::wheels_b, "external camera B wheel detections");
  text_opt(inspect, "--class-source", &PipelineConfig::class_source, "hog_svm_internal or external_file");
  path_opt(inspect, "--model", &PipelineConfig::model, "SVM model file");
  path_opt(inspect, "--classes", &PipelineConfig::classes, "external class scores (JSONL)");
  text_opt(inspect, "--bolt-source", &PipelineConfig::bolt_source, "hough_internal or external_file");
  path_opt(inspect, "--bolts-a", &PipelineConfig::bolts_a, "external camera A bolt detections");
  path_opt(inspect, "--bolts-b", &PipelineConfig::bolts_b, "external camera B bolt detections");
  path_opt(inspect, "--verdicts", &PipelineConfig::verdicts, "verdict JSONL output (default stdout)");
  path_opt(inspect, "--summary", &PipelineConfig::summary, "run summary JSON output");
  path_opt(inspect, "--tracks", &PipelineConfig::tracks, "tracked observations JSONL output");

  CLI::App* detect = app.add_subcommand("detect", "Hough wheel detection over a frame directory");
  std::string detect_frames, detect_out;
  detect->add_option("--frames", detect_frames, "frame directory")->required();
  detect->add_option("--out", detect_out, "detections JSONL (default stdout)");

  CLI::App* track = app.add_subcommand("track", "associate detections into tracks; verdicts when evidence given");
  std::string track_cars, track_a, track_b, track_classes, track_sizes, track_out, track_verdicts;
  int frame_width = 0;
  track->add_option("--cars", track_cars, "car detections")->required();
  track->add_option("--wheels-a", track_a, "camera A wheel detections")->required();
  track->add_option("--wheels-b", track_b, "camera B wheel detections");
  track->add_option("--classes", track_classes, "class scores from classify");
  track->add_option("--sizes", track_sizes, "size estimates from fit");
  track->add_option("--frame-width", frame_width, "frame width in pixels (default from the detections header)");
  track->add_option("--out", track_out, "tracked observations JSONL (default stdout)");
  track->add_option("--verdicts", track_verdicts, "verdict JSONL output");

  CLI::App* classify = app.add_subcommand("classify", "class scores for every tracked wheel");
  std::string classify_tracks, classify_out;
  classify->add_option("--tracks", classify_tracks, "tracked observations from track")->required();
  classify->add_option("--out", classify_out, "class scores JSONL (default stdout)");
  path_opt(classify, "--camera-a", &PipelineConfig::camera_a, "camera A frame directory");
  path_opt(classify, "--camera-b", &PipelineConfig::camera_b, "camera B frame directory");
  text_opt(classify, "--class-source", &PipelineConfig::class_source, "hog_svm_internal or external_file");
  path_opt(classify, "--model", &PipelineConfig::model, "SVM model file");
  path_opt(classify, "--classes", &PipelineConfig::classes, "external class scores (JSONL)");

  CLI::App* fit = app.add_subcommand("fit", "rim and pitch ellipses and diameter for every tracked wheel");
  std::string fit_tracks, fit_out;
  fit->add_option("--tracks", fit_tracks, "tracked observations from track")->required();
  fit->add_option("--out", fit_out, "size JSONL (default stdout)");
  path_opt(fit, "--camera-a", &PipelineConfig::camera_a, "camera A frame directory");
  path_opt(fit, "--camera-b", &PipelineConfig::camera_b, "camera B frame directory");
  text_opt(fit, "--bolt-source", &PipelineConfig::bolt_source, "hough_internal or external_file");
  path_opt(fit, "--bolts-a", &PipelineConfig::bolts_a, "external camera A bolt detections");
  path_opt(fit, "--bolts-b", &PipelineConfig::bolts_b, "external camera B bolt detections");

  CLI::App* eval = app.add_subcommand("eval", "detection metrics against YOLO ground truth");
  std::string eval_dets, eval_gt, eval_label, eval_map = "0:car,1:wheel,2:bolt,3:rim", eval_out;
  int eval_w = 0, eval_h = 0;
  bool eleven = false;
  eval->add_option("--dets", eval_dets, "detections JSONL")->required();
  eval->add_option("--gt", eval_gt, "directory of YOLO label files")->required();
  eval->add_option("--label", eval_label, "evaluate a single label");
  eval->add_option("--class-map", eval_map, "YOLO class index to label, e.g. 0:car,1:wheel");
  eval->add_option("--width", eval_w, "image width when no image sits next to a label file");
  eval->add_option("--height", eval_h, "image height when no image sits next to a label file");
  eval->add_flag("--eleven-point", eleven, "11-point interpolated AP instead of all-point");
  eval->add_option("--out", eval_out, "report JSON (default stdout)");

  CLI::App* train = app.add_subcommand("train-svm", "train HOG + linear SVM on class-named image folders");
  std::string train_dataset, train_model, train_report;
  int train_side = 256;
  train->add_option("--dataset", train_dataset, "directory of class subdirectories")->required();
  train->add_option("--out", train_model, "model file")->required();
  train->add_option("--report", train_report, "accuracy report JSON");
  train->add_option("--side", train_side, "crop side in pixels");
  auto hog_orient = std::make_shared<int>(), hog_cell = std::make_shared<int>();
  auto svm_c = std::make_shared<double>();
  auto svm_epochs = std::make_shared<int>();
  CLI::Option* o_orient = train->add_option("--orientations", *hog_orient, "HOG orientation bins");
  CLI::Option* o_cell = train->add_option("--cell", *hog_cell, "HOG pixels per cell");
  CLI::Option* o_c = train->add_option("--c", *svm_c, "SVM regularization");
  CLI::Option* o_epochs = train->add_option("--epochs", *svm_epochs, "SVM epochs");
  overrides.push_back([=](PipelineConfig& c) {
    if (o_orient->count()) c.hog.orientations = *hog_orient;
    if (o_cell->count()) c.hog.cell = *hog_cell;
    if (o_c->count()) c.svm.c = *svm_c;
    if (o_epochs->count()) c.svm.epochs = *svm_epochs;
  });

  CLI::App* synth = app.add_subcommand("synth", "write synthetic scenes with ground truth");
  SynthOptions so;
  synth->add_option("--kind", so.kind, "wheel, rings, car or dataset");
  synth->add_option("--out", so.out, "output directory")->required();
  synth->add_option("--count", so.count, "ring scenes, or images per class for dataset");
  synth->add_option("--frames", so.frames, "frames of the car sequence");
  synth->add_option("--tilt", so.tilt, "wheel tilt in degrees");
  synth->add_option("--spokes", so.spokes, "spoke count (0, 3, 5, 7, 10)");
  synth->add_option("--rim-mm", so.rim_mm, "rim diameter in millimeters");
  synth->add_option("--noise", so.noise, "pixel noise sigma");
  synth->add_option("--rr-spokes", so.rr_spokes, "car: different spoke count on the rear-right wheel");
  synth->add_flag("--no-camera-b", so.no_camera_b, "car: skip camera B frames");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : 1;
  }

  std::string stage = "rim-inspect";
  try {
    PipelineConfig cfg;
    if (!config_path.empty()) apply_config(load_config(config_path), cfg);
    for (auto& apply : overrides) apply(cfg);
    if (overlay_opt->count()) cfg.debug_overlay = overlay;
    if (seed_opt->count()) cfg.svm.seed = seed;
    cfg.validate();

    if (inspect->parsed()) {
      stage = "inspect";
      Sink verdicts(cfg.verdicts.string(), out);
      std::unique_ptr<Sink> tracks;
      if (!cfg.tracks.empty()) tracks = std::make_unique<Sink>(cfg.tracks.string(), out);
      const RunSummary s = run_pipeline(cfg, *verdicts, tracks ? &**tracks : nullptr);
      if (!cfg.summary.empty()) write_text(cfg.summary, summary_json(s));
      err << s.cars << " cars: " << (s.counts.count(Verdict::pass) ? s.counts.at(Verdict::pass) : 0) << " pass, "
          << (s.counts.count(Verdict::fail) ? s.counts.at(Verdict::fail) : 0) << " fail, "
          << (s.counts.count(Verdict::inconclusive) ? s.counts.at(Verdict::inconclusive) : 0) << " inconclusive\n";
    } else if (detect->parsed()) {
      stage = "detect";
      Sink sink(detect_out, out);
      run_detect(detect_frames, cfg.wheels, *sink);
    } else if (track->parsed()) {
      stage = "track";
      const ExternalDetections cars = ExternalDetections::load(track_cars);
      const ExternalDetections wa = ExternalDetections::load(track_a);
      std::optional<ExternalDetections> wb;
      std::optional<ExternalClasses> classes;
      std::optional<SizeTable> sizes;
      if (!track_b.empty()) wb = ExternalDetections::load(track_b);
      if (!track_classes.empty()) {
        classes = ExternalClasses::load(track_classes);
        if (classes->duplicate_warnings() > 0)
          err << "warning: " << classes->duplicate_warnings() << " repeated class-score keys, later lines win\n";
      }
      if (!track_sizes.empty()) sizes = load_sizes(track_sizes);
      TrackInputs in;
      in.cars = &cars;
      in.wheels_a = &wa;
      in.wheels_b = wb ? &*wb : nullptr;
      in.classes = classes ? &*classes : nullptr;
      in.sizes = sizes ? &*sizes : nullptr;
      in.frame_width = frame_width;
      Sink tracks(track_out, out);
      std::unique_ptr<Sink> verdicts;
      if (!track_verdicts.empty()) verdicts = std::make_unique<Sink>(track_verdicts, out);
      run_track(in, cfg.tracker, &*tracks, verdicts ? &**verdicts : nullptr);
    } else if (classify->parsed()) {
      stage = "classify";
      const auto source = make_class_source(cfg, err);
      Sink sink(classify_out, out);
      run_classify(cfg, load_observations(classify_tracks), *source, *sink);
    } else if (fit->parsed()) {
      stage = "fit";
      Sink sink(fit_out, out);
      run_fit(cfg, load_observations(fit_tracks), *sink);
    } else if (eval->parsed()) {
      stage = "eval";
      std::optional<std::pair<int, int>> fallback;
      if (eval_w > 0 && eval_h > 0) fallback = std::pair{eval_w, eval_h};
      const auto gts = load_yolo_dir(eval_gt, parse_class_map(eval_map), fallback);
      const auto dets = ExternalDetections::load(eval_dets);
      std::optional<Label> only;
      if (!eval_label.empty()) {
        only = parse_label(eval_label);
        if (!only) throw InvalidArgument("unknown label \"" + eval_label + "\"");
      }
      const auto interp = eleven ? ApInterpolation::eleven_point : ApInterpolation::all_point;
      Sink sink(eval_out, out);
      *sink << eval_report_json(evaluate_detections(dets.all(), gts, only, interp), interp);
    } else if (train->parsed()) {
      stage = "train-svm";
      const ordered_json row = train_svm_command(train_dataset, cfg.hog, cfg.svm, train_side, train_model, out);
      if (!train_report.empty()) write_text(train_report, row.dump(2) + "\n");
    } else if (synth->parsed()) {
      stage = "synth";
      synth_command(so, seed, out);
    }
  } catch (const InvalidArgument& e) {
    err << stage << ": error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    err << stage << ": data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << stage << ": internal error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace rim
