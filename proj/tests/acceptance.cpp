// Acceptance run: one PASS/FAIL line per criterion, exit code 1 on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rim/ellipsefit.hpp"
#include "rim/errors.hpp"
#include "rim/eval.hpp"
#include "rim/hog.hpp"
#include "rim/hough.hpp"
#include "rim/imgproc.hpp"
#include "rim/pipeline.hpp"
#include "rim/svm.hpp"
#include "rim/synth.hpp"
#include "rim/tracking.hpp"

using namespace rim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double angle_gap(double a, double b) {
  double d = std::fmod(std::abs(a - b), kPi);
  return std::min(d, kPi - d);
}

// 1. Ellipse fit
Outcome ellipse_fit() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> pos(0, 500), major(50, 150), ratio(1, 20), ang(0, kPi),
      jitter(-0.3, 0.3), param(0, 2 * kPi);
  std::normal_distribution<double> noise(0, 0.5);
  double worst_exact = 0;
  std::vector<double> center_err, axis_err;
  int failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const double a = major(rng);
    const Ellipse truth = canonical({pos(rng), pos(rng), a, a / ratio(rng), ang(rng)});

    std::vector<Point2> five;
    for (int k = 0; k < 5; ++k) five.push_back(truth.point_at(2 * kPi * k / 5 + jitter(rng)));
    try {
      const Ellipse e = conic_to_parametric(fit_ellipse_direct(five));
      const double rel = std::max({std::abs(e.cx - truth.cx) / truth.a, std::abs(e.cy - truth.cy) / truth.a,
                                   std::abs(e.a - truth.a) / truth.a, std::abs(e.b - truth.b) / truth.b,
                                   angle_gap(e.theta, truth.theta) / kPi});
      worst_exact = std::max(worst_exact, rel);
    } catch (const Error&) {
      ++failures;
    }

    std::vector<Point2> pts;
    for (int k = 0; k < 100; ++k) {
      const Point2 p = truth.point_at(param(rng));
      pts.push_back({p.x + noise(rng), p.y + noise(rng)});
    }
    try {
      const Ellipse e = conic_to_parametric(fit_ellipse_direct(pts));
      center_err.push_back(std::hypot(e.cx - truth.cx, e.cy - truth.cy));
      axis_err.push_back(std::max(std::abs(e.a - truth.a) / truth.a, std::abs(e.b - truth.b) / truth.b));
    } catch (const Error&) {
      ++failures;
    }
  }
  const double secs = seconds_since(t0);
  o.check(failures == 0, std::to_string(failures) + " fits threw");
  o.check(worst_exact <= 1e-6, "5-point relative error " + fmt("%.2e", worst_exact));
  o.note("5-point worst rel " + fmt("%.1e", worst_exact));
  const double mc = median(center_err), ma = median(axis_err);
  o.check(mc < 0.3, "median center error " + fmt("%.3f px", mc));
  o.check(ma < 0.01, "median axis error " + fmt("%.3f%%", 100 * ma));
  o.note("noisy median center " + fmt("%.3f px", mc) + ", axis " + fmt("%.3f%%", 100 * ma));
  o.check(secs < 5, "runtime " + fmt("%.2f s", secs));
  return o;
}

// 2. Otsu
Outcome otsu() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(7);
  int compared = 0, mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Histogram256 h{};
    const int occupied = 2 + static_cast<int>(rng() % 60);
    for (int k = 0; k < occupied; ++k) h[rng() % 256] += 1 + rng() % 100000;
    const auto expect = oracle::otsu_brute(h);
    if (!expect) continue;
    ++compared;
    if (otsu_from_histogram(h).threshold != *expect) ++mismatches;
  }
  const double secs = seconds_since(t0);
  o.check(mismatches == 0, std::to_string(mismatches) + " mismatches");
  o.check(compared == 200, "only " + std::to_string(compared) + " histograms had a valid split");
  o.note(std::to_string(compared) + " histograms, brute force included in timing");
  o.check(secs < 1, "runtime " + fmt("%.2f s", secs));
  return o;
}

// 3. Size estimation across tilt
Outcome size_invariance() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  double worst_clean = 0, worst_noisy = 0;
  int errors = 0;
  for (double tilt : {0.0, 10.0, 20.0, 30.0, 40.0}) {
    for (int rep = 0; rep < 5; ++rep) {
      for (double noise : {0.0, 8.0}) {
        if (noise > 0 && tilt > 30) continue;
        SceneSpec s{640, 640, 0.8, 0, {}, {}, noise, 100 + static_cast<std::uint64_t>(rep)};
        WheelSpec w;
        w.center = {320.3 + rep, 319.7 - rep};
        w.tilt_deg = tilt;
        w.rim_mm = 380 + 15 * rep;
        w.spin_deg = 17 * rep;
        w.spokes = kSpokePatterns[rep];
        s.wheels.push_back(w);
        auto [img, truth] = render_wheel(s);
        const WheelTruth& t = truth.wheels[0];
        std::vector<Detection> bolts;
        for (const BBox& b : t.bolt_boxes) bolts.push_back({0, Label::bolt, b, 1});
        // noiseless: anchor on the rendered bolt positions; noisy: bolts found by the Hough preset
        const SizeResult r = estimate_wheel_size(img, t.box, noise == 0 ? &bolts : nullptr, PipelineConfig{});
        if (!r.estimate) {
          ++errors;
          continue;
        }
        const double err = std::abs(r.estimate->diameter_mm / w.rim_mm - 1);
        (noise == 0 ? worst_clean : worst_noisy) = std::max(noise == 0 ? worst_clean : worst_noisy, err);
      }
    }
  }
  const double secs = seconds_since(t0);
  o.check(errors == 0, std::to_string(errors) + " estimates failed");
  o.check(worst_clean <= 0.005, "noiseless worst " + fmt("%.3f%%", 100 * worst_clean));
  o.check(worst_noisy <= 0.03, "sigma 8 worst " + fmt("%.3f%%", 100 * worst_noisy));
  o.note("noiseless tilt 0-40 worst " + fmt("%.3f%%", 100 * worst_clean) + ", sigma 8 tilt 0-30 worst " +
         fmt("%.3f%%", 100 * worst_noisy));
  o.check(secs < 30, "runtime " + fmt("%.2f s", secs));
  return o;
}

// 4. Hough detector
Outcome hough() {
  Outcome o;
  HoughConfig hc;
  hc.r_min = 15;
  hc.r_max = 110;
  std::vector<Detection> dets;
  std::vector<GroundTruth> gts;
  double worst_ms = 0;
  std::size_t peak = 0;
  for (int i = 0; i < 100; ++i) {
    const RingScene sc = make_ring_scene(RingSceneSpec{}, 1000 + static_cast<std::uint64_t>(i));
    const Image g = gaussian_blur(sc.image, 1.5);
    HoughDiagnostics diag;
    const auto t0 = std::chrono::steady_clock::now();
    const auto circles = detect_circles(g, hc, &diag);
    worst_ms = std::max(worst_ms, 1000 * seconds_since(t0));
    peak = std::max(peak, diag.accumulator_peak_bytes);
    for (const Circle& c : circles) dets.push_back(circle_to_detection(c, 1, i));
    for (const Circle& c : sc.truth)
      gts.push_back({i, Label::wheel, make_bbox(c.cx - c.r, c.cy - c.r, 2 * c.r, 2 * c.r)});
  }
  const MatchResult m = match_detections(dets, gts, 0.5);
  const long tp = std::count(m.tp.begin(), m.tp.end(), true);
  const double precision = dets.empty() ? 0 : static_cast<double>(tp) / dets.size();
  const double recall = static_cast<double>(tp) / gts.size();
  o.check(precision >= 0.95, "precision " + fmt("%.3f", precision));
  o.check(recall >= 0.95, "recall " + fmt("%.3f", recall));
  o.note("P " + fmt("%.3f", precision) + " R " + fmt("%.3f", recall) + " over " + std::to_string(gts.size()) +
         " rings");

  // memory: one W*H plane of 16-bit counters whatever the radius range
  const RingScene sc = make_ring_scene(RingSceneSpec{}, 5);
  HoughDiagnostics narrow, wide;
  HoughConfig n = hc;
  n.r_max = 30;
  detect_circles(sc.image, n, &narrow);
  detect_circles(sc.image, hc, &wide);
  const std::size_t plane = static_cast<std::size_t>(sc.image.width) * sc.image.height * sizeof(std::uint16_t);
  o.check(peak <= plane, "accumulator " + std::to_string(peak) + " bytes > W*H*2");
  o.check(narrow.accumulator_peak_bytes == wide.accumulator_peak_bytes, "accumulator grows with radius range");
  o.note("accumulator " + std::to_string(peak) + " B for 480x270");
  o.check(worst_ms <= 50, "slowest frame " + fmt("%.1f ms", worst_ms));
  o.note("slowest frame " + fmt("%.1f ms", worst_ms));
  return o;
}

// 5. HOG dimensions
Outcome hog_dimensions() {
  Outcome o;
  const std::pair<HogConfig, std::size_t> rows[] = {
      {{9, 8, 3, 1, false}, 72900}, {{13, 24, 3, 1, false}, 7488}, {{16, 24, 3, 1, false}, 9216}};
  for (const auto& [cfg, expect] : rows) {
    const std::size_t got = hog_dims(cfg, 256);
    const std::size_t real = hog_features(Image(256, 256, 1, 0), cfg).size();
    o.check(got == expect && real == expect, "orientations " + std::to_string(cfg.orientations) + " cell " +
                                                 std::to_string(cfg.cell) + ": " + std::to_string(got));
    o.note(std::to_string(got));
  }
  return o;
}

// 6. HOG + SVM on the synthetic rim set
Outcome classifier(SvmModel* trained) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const int per_class = 300;
  const fixture::Dataset all = fixture::rim_dataset(per_class, 11);
  // per class: 200 train, 50 validation, 50 test
  std::vector<std::vector<double>> train_x, val_x, test_x;
  std::vector<int> train_y, val_y, test_y;
  for (std::size_t i = 0; i < all.features.size(); ++i) {
    const int k = static_cast<int>(i) % per_class;
    auto& x = k < 200 ? train_x : k < 250 ? val_x : test_x;
    auto& y = k < 200 ? train_y : k < 250 ? val_y : test_y;
    x.push_back(all.features[i]);
    y.push_back(all.labels[i]);
  }
  const SvmTrainParams params;
  const SvmModel model = svm_train(train_x, train_y, params);
  auto accuracy = [&](const auto& x, const auto& y) {
    int ok = 0;
    for (std::size_t i = 0; i < x.size(); ++i) ok += svm_predict(model, x[i]).cls.id() == y[i];
    return static_cast<double>(ok) / x.size();
  };
  const double val = accuracy(val_x, val_y), test = accuracy(test_x, test_y);
  const SvmModel again = svm_train(train_x, train_y, params);
  const bool identical = again.weights == model.weights && again.biases == model.biases;
  const double secs = seconds_since(t0);
  o.check(test >= 0.90, "test accuracy " + fmt("%.3f", test));
  o.check(identical, "retraining changed the weights");
  o.note("val " + fmt("%.3f", val) + " test " + fmt("%.3f", test) + ", retrain bit-identical");
  o.check(secs < 60, "runtime " + fmt("%.2f s", secs));
  *trained = model;
  return o;
}

// 7. Tracking and class aggregation
int identity_switches(std::uint64_t seed, int* objects_out) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  struct Obj {
    Label label;
    double x, y, s, vx;
    int start, end;
  };
  std::vector<Obj> objs;
  const int lanes = 2 + static_cast<int>(rng() % 4);
  for (int lane = 0; lane < lanes; ++lane) {
    // objects sharing a lane move together and keep a gap of at least one box
    const double s = 60 + 60 * u(rng), vx = (u(rng) - 0.5) * 0.4 * s;
    const int count = 1 + static_cast<int>(rng() % 3);
    const Label label = rng() % 2 ? Label::car : Label::wheel;
    double x = 200 * u(rng);
    for (int k = 0; k < count; ++k) {
      const int start = static_cast<int>(rng() % 10);
      objs.push_back({label, x, 50.0 + 150.0 * lane, s, vx, start, start + 10 + static_cast<int>(rng() % 30)});
      x += s * (2.2 + u(rng));
    }
  }
  *objects_out = static_cast<int>(objs.size());
  Tracker tr;
  std::vector<std::map<int, int>> seen(objs.size());  // frame -> track id
  std::map<int, std::set<int>> owners;                // track id -> objects
  int last_drop = -10;
  for (int f = 0; f < 50; ++f) {
    std::vector<Detection> cars, wheels;
    std::vector<int> car_obj, wheel_obj;
    std::vector<int> order(objs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::shuffle(order.begin(), order.end(), rng);
    for (int i : order) {
      const Obj& ob = objs[i];
      if (f < ob.start || f > ob.end) continue;
      // occasional single-frame misses once the track is established
      if (f > ob.start + 3 && f < ob.end && f - last_drop > 1 && u(rng) < 0.05) {
        last_drop = f;
        continue;
      }
      const double t = f - ob.start;
      const Detection d{f, ob.label, make_bbox(ob.x + ob.vx * t + u(rng) * 2 - 1, ob.y + u(rng) * 2 - 1, ob.s, ob.s),
                        0.5 + 0.5 * u(rng)};
      (ob.label == Label::car ? cars : wheels).push_back(d);
      (ob.label == Label::car ? car_obj : wheel_obj).push_back(i);
    }
    const FrameAssignments fa = tr.update(f, cars, wheels);
    for (std::size_t k = 0; k < cars.size(); ++k) seen[car_obj[k]][f] = fa.car_tracks[k];
    for (std::size_t k = 0; k < wheels.size(); ++k) seen[wheel_obj[k]][f] = fa.wheel_tracks[k];
  }
  int switches = 0;
  for (std::size_t i = 0; i < objs.size(); ++i) {
    int prev = -1;
    for (const auto& [f, id] : seen[i]) {
      if (prev >= 0 && id != prev) ++switches;
      prev = id;
      owners[id].insert(static_cast<int>(i));
    }
  }
  for (const auto& [id, set] : owners) switches += static_cast<int>(set.size()) - 1;
  return switches;
}

Track classified_track(const std::vector<int>& classes) {
  Track t;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    TrackEntry e;
    e.frame = static_cast<int>(i);
    e.bbox = make_bbox(0, 0, 1, 1);
    e.cls = RimClass(classes[i]);
    t.entries.push_back(e);
  }
  return t;
}

Outcome tracking() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  int switches = 0, objects = 0;
  for (std::uint64_t seq = 0; seq < 50; ++seq) {
    int n = 0;
    switches += identity_switches(500 + seq, &n);
    objects += n;
  }
  o.check(switches == 0, std::to_string(switches) + " identity switches");
  o.note("50 sequences, " + std::to_string(objects) + " objects, " + std::to_string(switches) + " switches");

  std::mt19937_64 rng(77);
  int majority_failures = 0;
  for (int trial = 0; trial < 5000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 21);
    const int major = 1 + static_cast<int>(rng() % 21);
    const int k = n / 2 + 1 + static_cast<int>(rng() % (n - n / 2));
    std::vector<int> c(k, major);
    while (static_cast<int>(c.size()) < n) c.push_back(1 + static_cast<int>(rng() % 21));
    std::shuffle(c.begin(), c.end(), rng);
    const Track t = classified_track(c);
    if (aggregate_class(t, ClassVote::median)->id() != major) ++majority_failures;
    if (aggregate_class(t, ClassVote::mode)->id() != major) ++majority_failures;
  }
  o.check(majority_failures == 0, std::to_string(majority_failures) + " majority violations");

  // per-frame accuracy 0.9, 11 frames; wrong frames pick one of the other 21 classes
  std::uniform_real_distribution<double> u(0, 1);
  const int tracks = 100000;
  int correct_median = 0, correct_mode = 0;
  std::vector<int> c(11);
  for (int t = 0; t < tracks; ++t) {
    const int truth = 1 + static_cast<int>(rng() % 21);
    for (int& v : c) {
      if (u(rng) < 0.9) {
        v = truth;
      } else {
        v = 1 + static_cast<int>(rng() % 20);
        if (v >= truth) ++v;
        if (v == 22) v = 0;  // the occluded class counts as a wrong frame too
      }
    }
    const Track tr = classified_track(c);
    const auto med = aggregate_class(tr, ClassVote::median), mode = aggregate_class(tr, ClassVote::mode);
    correct_median += med && med->id() == truth;
    correct_mode += mode && mode->id() == truth;
  }
  const double acc_med = static_cast<double>(correct_median) / tracks;
  const double acc_mode = static_cast<double>(correct_mode) / tracks;
  const double exact = oracle::binomial_tail(11, 6, 0.9);
  o.check(acc_med > 0.999, "median track accuracy " + fmt("%.5f", acc_med));
  o.check(acc_mode > 0.999, "mode track accuracy " + fmt("%.5f", acc_mode));
  o.note("track accuracy median " + fmt("%.5f", acc_med) + " mode " + fmt("%.5f", acc_mode) +
         ", exact P(>=6 of 11) " + fmt("%.10f", exact));
  const double secs = seconds_since(t0);
  o.check(secs < 30, "runtime " + fmt("%.2f s", secs));
  return o;
}

// 8. Verdict logic
Track sized_wheel(int id, int cls, std::optional<double> d) {
  Track t;
  t.id = id;
  for (int i = 0; i < 5; ++i) {
    TrackEntry e;
    e.frame = i;
    e.bbox = make_bbox(0, 0, 1, 1);
    e.cls = RimClass(cls);
    if (d) {
      SizeEstimate s;
      s.diameter_mm = *d;
      e.size = s;
    }
    t.entries.push_back(e);
  }
  return t;
}

CarRecord car_of(std::array<int, 4> cls, std::array<double, 4> d) {
  CarRecord c;
  c.car_track_id = 1;
  const WheelPosition pos[] = {WheelPosition::FL, WheelPosition::FR, WheelPosition::RL, WheelPosition::RR};
  for (int i = 0; i < 4; ++i) c.wheels[pos[i]] = sized_wheel(10 + i, cls[i], d[i]);
  return c;
}

Outcome verdicts() {
  Outcome o;
  const TrackerConfig cfg;
  const InspectionVerdict pass = inspect_car(car_of({5, 5, 5, 5}, {447, 449, 450, 452}), cfg);
  o.check(pass.verdict == Verdict::pass && pass.reasons.empty(), "pass example");

  const InspectionVerdict mismatch = inspect_car(car_of({5, 5, 5, 9}, {447, 449, 450, 452}), cfg);
  o.check(mismatch.verdict == Verdict::fail && mismatch.reasons.size() == 1 &&
              mismatch.reasons[0].code == "class_mismatch" &&
              mismatch.reasons[0].positions == std::vector<WheelPosition>{WheelPosition::RR},
          "class_mismatch example");

  CarRecord three = car_of({5, 5, 5, 5}, {447, 449, 450, 452});
  three.wheels.erase(WheelPosition::RL);
  const InspectionVerdict missing = inspect_car(three, cfg);
  o.check(missing.verdict == Verdict::inconclusive && missing.reasons.size() == 1 &&
              missing.reasons[0].code == "wheels_missing",
          "inconclusive example");

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> base(380, 480), scale(0.2, 5), u(0, 1);
  std::normal_distribution<double> spread(0, 0.03);
  std::uniform_int_distribution<int> cls(1, 3);
  int differ = 0;
  std::map<Verdict, int> seen;
  for (int trial = 0; trial < 1000; ++trial) {
    // a mix of matching sets, odd classes and odd sizes
    const int common = cls(rng);
    std::array<int, 4> c{common, common, common, common};
    if (u(rng) < 0.3) c[rng() % 4] = cls(rng);
    const double b0 = base(rng);
    std::array<double, 4> d;
    for (double& x : d) x = b0 * (1 + spread(rng));
    const double k = scale(rng);
    const InspectionVerdict a = inspect_car(car_of(c, d), cfg);
    const InspectionVerdict b = inspect_car(car_of(c, {d[0] * k, d[1] * k, d[2] * k, d[3] * k}), cfg);
    bool same = a.verdict == b.verdict && a.reasons.size() == b.reasons.size();
    for (std::size_t i = 0; same && i < a.reasons.size(); ++i)
      same = a.reasons[i].code == b.reasons[i].code && a.reasons[i].positions == b.reasons[i].positions;
    differ += !same;
    ++seen[a.verdict];
  }
  o.check(differ == 0, std::to_string(differ) + " of 1000 quadruples changed verdict under scaling");
  o.check(seen[Verdict::pass] > 0 && seen[Verdict::fail] > 0, "quadruples cover a single verdict");
  o.note("1000 quadruples: " + std::to_string(seen[Verdict::pass]) + " pass, " + std::to_string(seen[Verdict::fail]) +
         " fail");
  return o;
}

// 9. Evaluation engine
Outcome evaluation() {
  Outcome o;
  const double ap1 = average_precision({true, false}, 1).ap, ap2 = average_precision({false, true}, 1).ap;
  o.check(ap1 == 1.0, "[TP,FP] AP " + fmt("%.6f", ap1));
  o.check(ap2 == 0.5, "[FP,TP] AP " + fmt("%.6f", ap2));

  // IoU exactly 0.7 against every ground truth box
  std::vector<Detection> dets;
  std::vector<GroundTruth> gts;
  for (int f = 0; f < 4; ++f) {
    gts.push_back({f, Label::wheel, make_bbox(0, 0, 10, 10)});
    dets.push_back({f, Label::wheel, make_bbox(0, 0, 10, 7), 0.9});
  }
  const MapResult mr = map_range(dets, gts);
  o.check(mr.mean == 0.5, "IoU 0.7 mAP@.5:.95 " + fmt("%.6f", mr.mean));

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  int changed = 0;
  for (int set = 0; set < 100; ++set) {
    std::vector<Detection> d;
    std::vector<GroundTruth> g;
    const int frames = 1 + static_cast<int>(rng() % 5);
    for (int f = 0; f < frames; ++f) {
      const int n_gt = static_cast<int>(rng() % 4);
      for (int k = 0; k < n_gt; ++k) {
        const BBox b = make_bbox(100 * k + 10 * u(rng), 10 * u(rng), 40 + 20 * u(rng), 40 + 20 * u(rng));
        g.push_back({f, Label::wheel, b});
        if (u(rng) < 0.8)
          d.push_back({f, Label::wheel, make_bbox(b.x + 15 * (u(rng) - 0.5), b.y + 15 * (u(rng) - 0.5), b.w, b.h),
                       u(rng)});
      }
      const int fp = static_cast<int>(rng() % 3);
      for (int k = 0; k < fp; ++k)
        d.push_back({f, Label::wheel, make_bbox(400 * u(rng), 200 * u(rng), 50, 50), u(rng)});
    }
    const double k = 0.01 + 100 * u(rng);
    std::vector<Detection> scaled = d;
    for (Detection& x : scaled) x.score *= k;
    const MapResult a = map_range(d, g), b = map_range(scaled, g);
    if (a.aps != b.aps || a.mean != b.mean) ++changed;
  }
  o.check(changed == 0, std::to_string(changed) + " of 100 sets changed under score rescaling");
  o.note("AP 1.0 / 0.5, mAP " + fmt("%.2f", mr.mean) + ", rescaling stable over 100 sets");
  return o;
}

// 10. End-to-end determinism and staged equivalence
Outcome end_to_end(const SvmModel& model) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path root = fixture::scratch("acceptance");
  CarSequenceSpec spec;
  spec.frames = 30;
  fixture::write_car(root / "car", spec);
  save_model(root / "model.bin", model);

  PipelineConfig cfg;
  cfg.camera_a = root / "car" / "a";
  cfg.camera_b = root / "car" / "b";
  cfg.cars = root / "car" / "cars.jsonl";
  cfg.model = root / "model.bin";

  auto run = [&](std::string* tracks) {
    std::ostringstream v, t;
    run_pipeline(cfg, v, &t);
    if (tracks) *tracks = t.str();
    return v.str();
  };
  std::string tracks_whole;
  const std::string first = run(&tracks_whole), second = run(nullptr);
  o.check(!first.empty(), "no verdicts");
  o.check(first == second, "verdicts differ between runs");

  // detect -> track -> classify + fit -> track, each stage through a file
  for (const char* cam : {"a", "b"}) {
    std::ofstream out(root / (std::string("wheels_") + cam + ".jsonl"));
    run_detect(root / "car" / cam, cfg.wheels, out);
  }
  const ExternalDetections cars = ExternalDetections::load(cfg.cars);
  const ExternalDetections wa = ExternalDetections::load(root / "wheels_a.jsonl");
  const ExternalDetections wb = ExternalDetections::load(root / "wheels_b.jsonl");
  TrackInputs in;
  in.cars = &cars;
  in.wheels_a = &wa;
  in.wheels_b = &wb;
  {
    std::ofstream t(root / "tracks.jsonl");
    run_track(in, cfg.tracker, &t, nullptr);
  }
  const auto obs = load_observations(root / "tracks.jsonl");
  {
    std::ofstream c(root / "classes.jsonl"), s(root / "sizes.jsonl");
    run_classify(cfg, obs, SvmClassSource(load_model(cfg.model)), c);
    run_fit(cfg, obs, s);
  }
  const ExternalClasses classes = ExternalClasses::load(root / "classes.jsonl");
  const SizeTable sizes = load_sizes(root / "sizes.jsonl");
  in.classes = &classes;
  in.sizes = &sizes;
  std::ostringstream staged_verdicts, staged_tracks;
  run_track(in, cfg.tracker, &staged_tracks, &staged_verdicts);
  o.check(fixture::slurp(root / "tracks.jsonl") == tracks_whole, "staged tracks differ");
  o.check(staged_verdicts.str() == first, "staged verdicts differ");

  const bool passed = first.find("\"verdict\":\"pass\"") != std::string::npos;
  o.note(std::string("verdict ") + (passed ? "pass" : "not pass") + ", two runs identical, staged identical");
  o.note("took " + fmt("%.1f s", seconds_since(t0)));
  fs::remove_all(root);
  return o;
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("%s %2d %-28s %7.2f s  %s\n", o.pass ? "PASS" : "FAIL", id, name, seconds_since(t0), o.detail.c_str());
    std::fflush(stdout);
  };
  SvmModel model;
  report(1, "ellipse fit", ellipse_fit);
  report(2, "otsu oracle", otsu);
  report(3, "size invariance", size_invariance);
  report(4, "hough detector", hough);
  report(5, "hog dimensions", hog_dimensions);
  report(6, "hog+svm classifier", [&] { return classifier(&model); });
  report(7, "tracking and aggregation", tracking);
  report(8, "verdict logic", verdicts);
  report(9, "evaluation engine", evaluation);
  report(10, "end-to-end determinism", [&] { return end_to_end(model); });
  std::printf("SKIP 11 %-28s %7s    public datasets not present; run manually with the eval and train-svm commands\n",
              "dataset reproduction", "-");
  return failed ? 1 : 0;
}
