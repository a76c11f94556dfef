#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

#include "oracles.hpp"
#include "rim/errors.hpp"
#include "rim/synth.hpp"
#include "rim/tracking.hpp"

using namespace rim;

namespace {

Detection det(Label l, double x, double y, double w, double h, int frame = 0) {
  return {frame, l, make_bbox(x, y, w, h), 1.0};
}

Track track_with(const std::vector<int>& classes, const std::vector<std::vector<double>>& scores = {}) {
  Track t;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    TrackEntry e;
    e.frame = static_cast<int>(i);
    e.bbox = make_bbox(0, 0, 1, 1);
    e.cls = RimClass(classes[i]);
    if (i < scores.size()) e.scores = scores[i];
    t.entries.push_back(e);
  }
  return t;
}

Track wheel(int id, int cls, std::optional<double> diameter, int n = 5) {
  Track t;
  t.id = id;
  for (int i = 0; i < n; ++i) {
    TrackEntry e;
    e.frame = i;
    e.bbox = make_bbox(0, 0, 1, 1);
    e.cls = RimClass(cls);
    if (diameter) {
      SizeEstimate s;
      s.diameter_mm = *diameter;
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
  for (int i = 0; i < 4; ++i) c.wheels[pos[i]] = wheel(10 + i, cls[i], d[i]);
  return c;
}

}  // namespace

TEST(GreedyMatch, DescendingIouEachSideOnce) {
  const std::vector<BBox> tracks{make_bbox(0, 0, 10, 10), make_bbox(4, 0, 10, 10)};
  const std::vector<BBox> dets{make_bbox(3, 0, 10, 10), make_bbox(50, 50, 5, 5)};
  const auto m = greedy_iou_match(tracks, dets, 0.3);
  EXPECT_EQ(m[0], 1);  // IoU 9/11 beats 7/13
  EXPECT_EQ(m[1], -1);
  // equal IoU: the lower track index wins
  const std::vector<BBox> twins{make_bbox(0, 0, 10, 10), make_bbox(0, 0, 10, 10)};
  EXPECT_EQ(greedy_iou_match(twins, std::vector<BBox>{make_bbox(0, 0, 10, 10)}, 0.3)[0], 0);
}

TEST(Tracker, LinearMotionSingleTrack) {
  Tracker tr;
  int id = -1;
  for (int f = 0; f < 20; ++f) {
    const std::vector<Detection> w{det(Label::wheel, 100 + 10.0 * f, 300, 160, 160, f)};
    const auto a = tr.update(f, {}, w);
    if (f == 0) id = a.wheel_tracks[0];
    EXPECT_EQ(a.wheel_tracks[0], id);
  }
  EXPECT_EQ(tr.find(id)->entries.size(), 20u);
  EXPECT_EQ(tr.find(id)->state, TrackState::confirmed);
}

TEST(Tracker, GapLongerThanMaxMissedStartsNewTrack) {
  TrackerConfig cfg;
  cfg.max_missed = 3;
  Tracker tr(cfg);
  const std::vector<Detection> w{det(Label::wheel, 100, 100, 50, 50)};
  const int first = tr.update(0, {}, w).wheel_tracks[0];
  tr.update(1, {}, w);
  for (int f = 2; f < 2 + cfg.max_missed + 1; ++f) tr.update(f, {}, {});
  EXPECT_EQ(tr.find(first)->state, TrackState::dead);
  EXPECT_NE(tr.update(6, {}, w).wheel_tracks[0], first);

  Tracker tr2(cfg);
  const int id = tr2.update(0, {}, w).wheel_tracks[0];
  for (int f = 1; f <= cfg.max_missed; ++f) tr2.update(f, {}, {});
  EXPECT_EQ(tr2.update(cfg.max_missed + 1, {}, w).wheel_tracks[0], id);
}

TEST(Tracker, TwoCarsPartitionWheels) {
  Tracker tr;
  int car_left = -1, car_right = -1;
  for (int f = 0; f < 8; ++f) {
    const double dx = 15.0 * f;
    const std::vector<Detection> cars{det(Label::car, 0 + dx, 100, 600, 300), det(Label::car, 800 + dx, 100, 600, 300)};
    const std::vector<Detection> wheels{det(Label::wheel, 50 + dx, 300, 90, 90), det(Label::wheel, 450 + dx, 300, 90, 90),
                                        det(Label::wheel, 850 + dx, 300, 90, 90), det(Label::wheel, 1250 + dx, 300, 90, 90)};
    const auto a = tr.update(f, cars, wheels);
    if (f == 0) {
      car_left = a.car_tracks[0];
      car_right = a.car_tracks[1];
    }
    EXPECT_EQ(a.car_tracks[0], car_left);
    EXPECT_EQ(a.car_tracks[1], car_right);
    EXPECT_EQ(a.wheel_cars, (std::vector<int>{car_left, car_left, car_right, car_right}));
  }
  EXPECT_EQ(tr.wheels_of(car_left).size(), 2u);
  EXPECT_EQ(tr.wheels_of(car_right).size(), 2u);
}

TEST(Tracker, CarCompletesWhenItDies) {
  TrackerConfig cfg;
  cfg.max_missed = 1;
  Tracker tr(cfg);
  const std::vector<Detection> c{det(Label::car, 0, 0, 100, 50)};
  const int id = tr.update(0, c, {}).car_tracks[0];
  tr.update(1, c, {});
  EXPECT_TRUE(tr.update(2, {}, {}).completed_cars.empty());
  EXPECT_EQ(tr.update(3, {}, {}).completed_cars, std::vector<int>{id});
  EXPECT_TRUE(tr.finish().empty());
}

TEST(Tracker, FramesMustIncrease) {
  Tracker tr;
  tr.update(5, {}, {});
  EXPECT_THROW(tr.update(5, {}, {}), InvalidArgument);
  EXPECT_THROW(tr.update(2, {}, {}), InvalidArgument);
}

TEST(Tracker, Deterministic) {
  auto run = [] {
    Tracker tr;
    std::mt19937 rng(12);
    std::vector<int> ids;
    for (int f = 0; f < 30; ++f) {
      std::vector<Detection> w;
      for (int k = 0; k < 3; ++k)
        if (rng() % 5) w.push_back(det(Label::wheel, 200.0 * k + 5 * f + rng() % 4, 100, 80, 80, f));
      for (int id : tr.update(f, {}, w).wheel_tracks) ids.push_back(id);
    }
    return ids;
  };
  EXPECT_EQ(run(), run());
}

TEST(Aggregate, Examples) {
  EXPECT_EQ(aggregate_class(track_with({7, 7, 7, 7, 7}), ClassVote::median)->id(), 7);
  const Track t = track_with({3, 3, 7, 3, 9});
  EXPECT_EQ(aggregate_class(t, ClassVote::median)->id(), 3);
  EXPECT_EQ(aggregate_class(t, ClassVote::mode)->id(), 3);
  EXPECT_FALSE(aggregate_class(track_with({0, 0, 0}), ClassVote::median));
  EXPECT_FALSE(aggregate_class(Track{}, ClassVote::mode));
  // occluded entries are dropped before the vote
  EXPECT_EQ(aggregate_class(track_with({0, 0, 0, 4, 6}), ClassVote::median)->id(), 4);
}

TEST(Aggregate, ModeTieGoesToLargerSummedScore) {
  std::vector<double> s1(22, 0), s2(22, 0);
  s1[2] = 0.9;
  s2[8] = 1.4;
  const Track t = track_with({2, 8}, {s1, s2});
  EXPECT_EQ(aggregate_class(t, ClassVote::mode)->id(), 8);
  EXPECT_EQ(aggregate_class(t, ClassVote::median)->id(), 2);
}

TEST(Aggregate, MedianEqualsModeUnderStrictMajority) {
  std::mt19937 rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 15);
    const int major = 1 + static_cast<int>(rng() % 21);
    std::vector<int> c;
    const int k = n / 2 + 1 + static_cast<int>(rng() % (n - n / 2));
    for (int i = 0; i < k; ++i) c.push_back(major);
    while (static_cast<int>(c.size()) < n) c.push_back(1 + static_cast<int>(rng() % 21));
    std::shuffle(c.begin(), c.end(), rng);
    const Track t = track_with(c);
    EXPECT_EQ(aggregate_class(t, ClassVote::median)->id(), major);
    EXPECT_EQ(aggregate_class(t, ClassVote::mode)->id(), major);
  }
}

TEST(Aggregate, BinomialTailReference) {
  const double exact = oracle::binomial_tail(11, 6, 0.9);
  EXPECT_NEAR(exact, 0.9997042939, 1e-9);
  EXPECT_GT(exact, 0.999);
}

TEST(LinkCameraB, Window) {
  const double width = 1920, window = 0.15 * width;
  const std::vector<BBox> a{make_bbox(900, 800, 160, 160)};
  EXPECT_EQ(link_camera_b(a, std::vector<Detection>{det(Label::wheel, 900, 790, 160, 160)}, window)[0], 0u);
  EXPECT_EQ(link_camera_b(a, std::vector<Detection>{det(Label::wheel, 900 + 0.05 * width, 790, 160, 160)}, window)[0], 0u);
  EXPECT_FALSE(link_camera_b(a, std::vector<Detection>{det(Label::wheel, 900 + 0.2 * width, 790, 160, 160)}, window)[0]);
  const std::vector<Detection> two{det(Label::wheel, 900 + 0.09 * width, 790, 160, 160),
                                   det(Label::wheel, 900 - 0.03 * width, 790, 160, 160)};
  EXPECT_EQ(link_camera_b(a, two, window)[0], 1u);
}

TEST(InspectCar, Pass) {
  const InspectionVerdict v = inspect_car(car_of({5, 5, 5, 5}, {447, 449, 450, 452}), TrackerConfig{});
  EXPECT_EQ(v.verdict, Verdict::pass);
  EXPECT_TRUE(v.reasons.empty());
  ASSERT_EQ(v.wheels.size(), 4u);
  EXPECT_EQ(v.wheels[0].position, WheelPosition::FL);
  EXPECT_EQ(v.wheels[3].position, WheelPosition::RR);
  EXPECT_DOUBLE_EQ(*v.wheels[1].diameter_mm, 449);
}

TEST(InspectCar, ClassMismatchAtRearRight) {
  const InspectionVerdict v = inspect_car(car_of({5, 5, 5, 9}, {447, 449, 450, 452}), TrackerConfig{});
  EXPECT_EQ(v.verdict, Verdict::fail);
  ASSERT_EQ(v.reasons.size(), 1u);
  EXPECT_EQ(v.reasons[0].code, "class_mismatch");
  EXPECT_EQ(v.reasons[0].positions, std::vector<WheelPosition>{WheelPosition::RR});
}

TEST(InspectCar, ThreeWheelsInconclusive) {
  CarRecord c = car_of({5, 5, 5, 5}, {447, 449, 450, 452});
  c.wheels.erase(WheelPosition::RL);
  const InspectionVerdict v = inspect_car(c, TrackerConfig{});
  EXPECT_EQ(v.verdict, Verdict::inconclusive);
  ASSERT_EQ(v.reasons.size(), 1u);
  EXPECT_EQ(v.reasons[0].code, "wheels_missing");
  EXPECT_EQ(v.reasons[0].positions, std::vector<WheelPosition>{WheelPosition::RL});
  EXPECT_EQ(v.wheels.size(), 3u);
}

TEST(InspectCar, SizeMismatch) {
  const InspectionVerdict v = inspect_car(car_of({5, 5, 5, 5}, {432, 432, 432, 406}), TrackerConfig{});
  EXPECT_EQ(v.verdict, Verdict::fail);
  ASSERT_EQ(v.reasons.size(), 1u);
  EXPECT_EQ(v.reasons[0].code, "size_mismatch");
  EXPECT_EQ(v.reasons[0].positions, std::vector<WheelPosition>{WheelPosition::RR});
}

TEST(InspectCar, UnclassifiedWheelIsMissing) {
  CarRecord c = car_of({5, 5, 5, 5}, {447, 449, 450, 452});
  c.wheels[WheelPosition::FR] = wheel(11, 0, 449);
  const InspectionVerdict v = inspect_car(c, TrackerConfig{});
  EXPECT_EQ(v.verdict, Verdict::inconclusive);
  EXPECT_EQ(v.reasons[0].positions, std::vector<WheelPosition>{WheelPosition::FR});
}

TEST(InspectCar, NoDiametersIsInconclusive) {
  CarRecord c = car_of({5, 5, 5, 5}, {447, 449, 450, 452});
  c.wheels[WheelPosition::FL] = wheel(10, 5, std::nullopt);
  const InspectionVerdict v = inspect_car(c, TrackerConfig{});
  EXPECT_EQ(v.verdict, Verdict::inconclusive);
  EXPECT_EQ(v.reasons[0].code, "size_unavailable");
}

TEST(InspectCar, InvariantUnderUniformScaling) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(380, 480), s(0.2, 5), coin(0, 1);
  std::normal_distribution<double> spread(0, 0.03);
  std::uniform_int_distribution<int> cls(1, 3);
  std::map<Verdict, int> seen;
  for (int trial = 0; trial < 300; ++trial) {
    const int common = cls(rng);
    std::array<int, 4> c{common, common, common, common};
    if (coin(rng) < 0.3) c[rng() % 4] = cls(rng);
    const double b0 = u(rng);
    std::array<double, 4> d;
    for (double& x : d) x = b0 * (1 + spread(rng));
    const double k = s(rng);
    std::array<double, 4> dk{d[0] * k, d[1] * k, d[2] * k, d[3] * k};
    const InspectionVerdict a = inspect_car(car_of(c, d), TrackerConfig{});
    const InspectionVerdict b = inspect_car(car_of(c, dk), TrackerConfig{});
    EXPECT_EQ(a.verdict, b.verdict);
    ASSERT_EQ(a.reasons.size(), b.reasons.size());
    for (std::size_t i = 0; i < a.reasons.size(); ++i) EXPECT_EQ(a.reasons[i].positions, b.reasons[i].positions);
    ++seen[a.verdict];
  }
  EXPECT_GT(seen[Verdict::pass], 0);
  EXPECT_GT(seen[Verdict::fail], 0);
}

// Truth boxes of the synthetic car sequence fed straight into a session.
TEST(InspectionSession, SyntheticCarPositions) {
  CarSequenceSpec spec;
  spec.frames = 12;
  spec.noise_sigma = 0;
  const CarSequence seq = make_car_sequence(spec);
  InspectionSession session(TrackerConfig{}, spec.width);
  std::map<int, WheelPosition> truth_of_track;
  std::vector<CarRecord> done;
  for (int f = 0; f < spec.frames; ++f) {
    std::vector<Detection> a, b;
    for (const TruthWheel& w : seq.wheels_a[f]) a.push_back({f, Label::wheel, w.box, 1});
    for (const TruthWheel& w : seq.wheels_b[f]) b.push_back({f, Label::wheel, w.box, 1});
    const auto ft = session.process(f, seq.cars[f], a, b);
    for (std::size_t i = 0; i < a.size(); ++i) {
      truth_of_track[ft.a.wheel_tracks[i]] = seq.wheels_a[f][i].position;
      session.annotate(ft.a.wheel_tracks[i], f, RimClass(3), {}, std::nullopt);
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      ASSERT_GE(ft.b_tracks[i], 0);
      truth_of_track[ft.b_tracks[i]] = seq.wheels_b[f][i].position;
      session.annotate(ft.b_tracks[i], f, RimClass(3), {}, std::nullopt);
    }
    for (auto& r : session.collect_completed()) done.push_back(std::move(r));
  }
  for (auto& r : session.finish()) done.push_back(std::move(r));
  ASSERT_EQ(done.size(), 1u);
  const CarRecord& car = done[0];
  EXPECT_TRUE(car.confirmed);
  ASSERT_EQ(car.wheels.size(), 4u);
  for (const auto& [pos, track] : car.wheels) EXPECT_EQ(truth_of_track.at(track.id), pos) << to_string(pos);
  const InspectionVerdict v = inspect_car(car, TrackerConfig{});
  EXPECT_EQ(v.verdict, Verdict::inconclusive);
  EXPECT_EQ(v.reasons[0].code, "size_unavailable");
}
