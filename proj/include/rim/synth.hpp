#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "rim/core.hpp"
#include "rim/tracking.hpp"

namespace rim {

/// Spoke counts of the five synthetic rim designs; 0 is a solid disk.
inline constexpr std::array<int, 5> kSpokePatterns = {0, 3, 5, 7, 10};

/// Class id (1..5) of a spoke count from kSpokePatterns. Throws InvalidArgument otherwise.
int spoke_class(int spokes);
int class_spokes(int class_id);

struct WheelLevels {
  std::uint8_t tyre = 60;
  std::uint8_t flange = 215;  // outer rim ring
  std::uint8_t face = 190;    // spokes or solid face
  std::uint8_t well = 35;     // openings between spokes
  std::uint8_t hub = 165;
  std::uint8_t bolt = 70;
};

struct WheelSpec {
  Point2 center;  // image pixels
  double tyre_mm = 650;
  double rim_mm = 432;
  double pitch_mm = 112;
  double bolt_mm = 30;   // bolt head diameter
  double hub_mm = 180;
  double tilt_deg = 0;   // rotation about the vertical axis; x shrinks by cos(tilt)
  double spin_deg = 0;   // in-plane rotation of spokes and bolts
  int spokes = 5;
  int bolts = 5;
  WheelLevels levels;
};

struct Panel {
  BBox box;
  std::uint8_t level = 110;
};

struct SceneSpec {
  int width = 640;
  int height = 480;
  double px_per_mm = 0.5;
  std::uint8_t background = 0;
  std::vector<Panel> panels;  // drawn under the wheels
  std::vector<WheelSpec> wheels;
  double noise_sigma = 0;
  std::uint64_t seed = 0;
};

struct WheelTruth {
  BBox box;  // tyre bounding box
  Ellipse tyre;
  Ellipse rim;
  Ellipse pitch;
  std::vector<Point2> bolts;
  std::vector<BBox> bolt_boxes;
  int class_id = 0;
};

struct SceneTruth {
  std::vector<WheelTruth> wheels;
};

WheelTruth wheel_truth(const WheelSpec& w, double px_per_mm);

/// 4x4 supersampled rendering plus analytic truth from the same projection.
/// Throws InvalidArgument when a wheel is larger than the image.
std::pair<Image, SceneTruth> render_wheel(const SceneSpec& spec);

struct SequenceFrame {
  Image image;
  SceneTruth truth;
  std::vector<bool> present;  // per wheel: center still inside the image
};

/// Wheels translate by velocity per frame and roll accordingly. Frame k uses
/// noise seed (seed, k).
std::vector<SequenceFrame> render_sequence(const SceneSpec& spec, int frames, Point2 velocity);

struct RingScene {
  Image image;
  std::vector<Circle> truth;
};

struct RingSceneSpec {
  int width = 480;
  int height = 270;
  int min_rings = 1;
  int max_rings = 3;
  double r_min = 20;
  double r_max = 100;
  double thickness = 3;
  std::uint8_t level = 200;
  double noise_sigma = 8;
};

/// Non-overlapping AA rings fully inside the image on black.
RingScene make_ring_scene(const RingSceneSpec& spec, std::uint64_t seed);

struct CarSpec {
  double start_x = 20;  // left edge of the body at frame 0, pixels
  double length_mm = 4300;
  double wheelbase_mm = 2600;
  double front_overhang_mm = 900;
  double tilt_deg = 6;
  std::map<WheelPosition, int> spokes{
      {WheelPosition::FL, 5}, {WheelPosition::FR, 5}, {WheelPosition::RL, 5}, {WheelPosition::RR, 5}};
  std::map<WheelPosition, double> rim_mm{
      {WheelPosition::FL, 432}, {WheelPosition::FR, 432}, {WheelPosition::RL, 432}, {WheelPosition::RR, 432}};
};

struct CarSequenceSpec {
  int width = 1920;
  int height = 1080;
  int frames = 30;
  double velocity = 20;  // pixels per frame toward +x
  double px_per_mm = 0.3;
  double wheel_y = 900;  // wheel center row
  double camera_b_offset = 12;
  double noise_sigma = 4;
  std::uint64_t seed = 1;
  std::vector<CarSpec> cars{CarSpec{}};
};

struct TruthWheel {
  WheelPosition position = WheelPosition::FR;
  int car = 0;
  BBox box;
  int class_id = 0;
  double rim_mm = 0;
};

struct CarSequence {
  std::vector<Image> camera_a;
  std::vector<Image> camera_b;
  std::vector<std::vector<Detection>> cars;  // clipped truth car boxes, score 1
  std::vector<std::vector<TruthWheel>> wheels_a;
  std::vector<std::vector<TruthWheel>> wheels_b;
};

CarSequence make_car_sequence(const CarSequenceSpec& spec);

struct RimSample {
  Image image;  // side x side grayscale
  int class_id = 0;
  Ellipse rim;
};

/// Random wheel filling most of a side x side crop: random spin, tilt up to
/// 25 deg, center jitter, noise up to sigma 8.
RimSample make_rim_sample(int class_id, std::mt19937_64& rng, int side = 256);

/// Writes per_class samples of each class into dir/C01 .. dir/C05 as PNG.
void write_rim_dataset(const std::filesystem::path& dir, int per_class, std::uint64_t seed, int side = 256);

}  // namespace rim
