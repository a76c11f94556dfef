#include "rim/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>

#include "rim/errors.hpp"
#include "rim/image_io.hpp"

namespace rim {

namespace {

constexpr double kDeg = kPi / 180;
constexpr int kSuper = 4;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint8_t clamp_level(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

// Precomputed wheel geometry in wheel-plane millimeters.
struct WheelShape {
  const WheelSpec* spec;
  double sx;  // image px per mm along x (foreshortened)
  double sy;
  double tyre_r2, rim_r, flange_r, hub_r, bolt_r2, half_w;
  std::vector<std::pair<double, double>> spoke_dirs;
  std::vector<std::pair<double, double>> bolt_mm;
  BBox box;

  WheelShape(const WheelSpec& w, double ppm) : spec(&w) {
    sx = ppm * std::cos(w.tilt_deg * kDeg);
    sy = ppm;
    const double tyre_r = w.tyre_mm / 2;
    tyre_r2 = tyre_r * tyre_r;
    rim_r = w.rim_mm / 2;
    flange_r = rim_r * 0.86;
    hub_r = w.hub_mm / 2;
    bolt_r2 = (w.bolt_mm / 2) * (w.bolt_mm / 2);
    half_w = w.spokes > 0 ? 0.45 * kPi * hub_r / w.spokes : 0;
    const double spin = w.spin_deg * kDeg;
    for (int k = 0; k < w.spokes; ++k) {
      const double a = spin + 2 * kPi * k / w.spokes;
      spoke_dirs.emplace_back(std::cos(a), std::sin(a));
    }
    for (int k = 0; k < w.bolts; ++k) {
      const double a = spin + kPi / std::max(w.bolts, 1) + 2 * kPi * k / w.bolts;
      bolt_mm.emplace_back(w.pitch_mm / 2 * std::cos(a), w.pitch_mm / 2 * std::sin(a));
    }
    box = {w.center.x - tyre_r * sx, w.center.y - tyre_r * sy, 2 * tyre_r * sx, 2 * tyre_r * sy};
  }

  std::optional<std::uint8_t> level(double x, double y) const {
    const double u = (x - spec->center.x) / sx;
    const double v = (y - spec->center.y) / sy;
    const double r2 = u * u + v * v;
    if (r2 > tyre_r2) return std::nullopt;
    const WheelLevels& L = spec->levels;
    if (r2 > rim_r * rim_r) return L.tyre;
    if (r2 > flange_r * flange_r) return L.flange;
    if (r2 <= hub_r * hub_r) {
      for (auto [bu, bv] : bolt_mm)
        if ((u - bu) * (u - bu) + (v - bv) * (v - bv) <= bolt_r2) return L.bolt;
      return L.hub;
    }
    if (spec->spokes == 0) return L.face;
    for (auto [c, s] : spoke_dirs) {
      const double along = u * c + v * s;
      if (along > 0 && std::abs(v * c - u * s) <= half_w) return L.face;
    }
    return L.well;
  }
};

void add_noise(Image& img, double sigma, std::uint64_t seed) {
  if (sigma <= 0) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto& p : img.data) p = clamp_level(p + noise(rng));
}

}  // namespace

int spoke_class(int spokes) {
  for (std::size_t i = 0; i < kSpokePatterns.size(); ++i)
    if (kSpokePatterns[i] == spokes) return static_cast<int>(i) + 1;
  throw InvalidArgument("synth: no rim design with " + std::to_string(spokes) + " spokes");
}

int class_spokes(int class_id) {
  if (class_id < 1 || class_id > static_cast<int>(kSpokePatterns.size()))
    throw InvalidArgument("synth: no rim design for class " + std::to_string(class_id));
  return kSpokePatterns[class_id - 1];
}

WheelTruth wheel_truth(const WheelSpec& w, double ppm) {
  const WheelShape shape(w, ppm);
  const double c = std::cos(w.tilt_deg * kDeg);
  auto circle = [&](double diameter_mm) {
    const double r = diameter_mm / 2 * ppm;
    return canonical(Ellipse{w.center.x, w.center.y, r * c, r, 0});
  };
  WheelTruth t;
  t.box = shape.box;
  t.tyre = circle(w.tyre_mm);
  t.rim = circle(w.rim_mm);
  t.pitch = circle(w.pitch_mm);
  const double br = w.bolt_mm / 2;
  for (auto [bu, bv] : shape.bolt_mm) {
    const Point2 p{w.center.x + bu * shape.sx, w.center.y + bv * shape.sy};
    t.bolts.push_back(p);
    t.bolt_boxes.push_back({p.x - br * shape.sx, p.y - br * shape.sy, 2 * br * shape.sx, 2 * br * shape.sy});
  }
  t.class_id = spoke_class(w.spokes);
  return t;
}

std::pair<Image, SceneTruth> render_wheel(const SceneSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0) throw InvalidArgument("synth: image size must be positive");
  if (!(spec.px_per_mm > 0)) throw InvalidArgument("synth: px_per_mm must be positive");
  std::vector<WheelShape> shapes;
  SceneTruth truth;
  for (const WheelSpec& w : spec.wheels) {
    if (w.tilt_deg < 0 || w.tilt_deg > 45) throw InvalidArgument("synth: tilt must lie in [0, 45] degrees");
    if (!(w.tyre_mm > w.rim_mm && w.rim_mm > w.hub_mm && w.hub_mm > w.pitch_mm + w.bolt_mm && w.bolt_mm > 0))
      throw InvalidArgument("synth: wheel diameters must nest tyre > rim > hub > pitch + bolt");
    shapes.emplace_back(w, spec.px_per_mm);
    if (shapes.back().box.w > spec.width || shapes.back().box.h > spec.height)
      throw InvalidArgument("synth: wheel larger than the image");
    truth.wheels.push_back(wheel_truth(w, spec.px_per_mm));
  }

  auto sample = [&](double x, double y) -> std::uint8_t {
    for (auto it = shapes.rbegin(); it != shapes.rend(); ++it)
      if (auto v = it->level(x, y)) return *v;
    for (auto it = spec.panels.rbegin(); it != spec.panels.rend(); ++it)
      if (x >= it->box.x && x < it->box.right() && y >= it->box.y && y < it->box.bottom()) return it->level;
    return spec.background;
  };

  // Only pixels near a shape boundary need supersampling.
  const int W = spec.width, H = spec.height;
  std::vector<std::uint8_t> fine(static_cast<std::size_t>(W) * H, 0);
  auto mark = [&](double x0, double y0, double x1, double y1) {
    const int ix0 = std::max(0, static_cast<int>(std::floor(x0)) - 1);
    const int iy0 = std::max(0, static_cast<int>(std::floor(y0)) - 1);
    const int ix1 = std::min(W - 1, static_cast<int>(std::ceil(x1)) + 1);
    const int iy1 = std::min(H - 1, static_cast<int>(std::ceil(y1)) + 1);
    for (int y = iy0; y <= iy1; ++y)
      for (int x = ix0; x <= ix1; ++x) fine[static_cast<std::size_t>(y) * W + x] = 1;
  };
  for (const WheelShape& s : shapes) mark(s.box.x, s.box.y, s.box.right(), s.box.bottom());
  for (const Panel& p : spec.panels) {
    mark(p.box.x, p.box.y, p.box.right(), p.box.y);
    mark(p.box.x, p.box.bottom(), p.box.right(), p.box.bottom());
    mark(p.box.x, p.box.y, p.box.x, p.box.bottom());
    mark(p.box.right(), p.box.y, p.box.right(), p.box.bottom());
  }

  Image img(W, H, 1, spec.background);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (!fine[static_cast<std::size_t>(y) * W + x]) {
        img.at(x, y) = sample(x + 0.5, y + 0.5);
        continue;
      }
      int sum = 0;
      for (int j = 0; j < kSuper; ++j)
        for (int i = 0; i < kSuper; ++i) sum += sample(x + (i + 0.5) / kSuper, y + (j + 0.5) / kSuper);
      img.at(x, y) = static_cast<std::uint8_t>((sum + kSuper * kSuper / 2) / (kSuper * kSuper));
    }
  }
  add_noise(img, spec.noise_sigma, spec.seed);
  return {std::move(img), std::move(truth)};
}

std::vector<SequenceFrame> render_sequence(const SceneSpec& spec, int frames, Point2 velocity) {
  if (frames < 1) throw InvalidArgument("synth: frames must be >= 1");
  std::vector<SequenceFrame> out;
  for (int k = 0; k < frames; ++k) {
    SceneSpec s = spec;
    s.seed = mix_seed(spec.seed, static_cast<std::uint64_t>(k));
    for (Panel& p : s.panels) {
      p.box.x += k * velocity.x;
      p.box.y += k * velocity.y;
    }
    for (WheelSpec& w : s.wheels) {
      w.center.x += k * velocity.x;
      w.center.y += k * velocity.y;
      const double r_px = w.tyre_mm / 2 * s.px_per_mm;
      w.spin_deg += k * velocity.x / r_px / kDeg;
    }
    auto [img, truth] = render_wheel(s);
    SequenceFrame f{std::move(img), std::move(truth), {}};
    for (const WheelSpec& w : s.wheels)
      f.present.push_back(w.center.x >= 0 && w.center.x < s.width && w.center.y >= 0 && w.center.y < s.height);
    out.push_back(std::move(f));
  }
  return out;
}

RingScene make_ring_scene(const RingSceneSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count(spec.min_rings, spec.max_rings);
  const int n = count(rng);
  RingScene scene;
  const double margin = spec.thickness + 2;
  for (int attempt = 0; attempt < 1000 && static_cast<int>(scene.truth.size()) < n; ++attempt) {
    const double r = std::uniform_real_distribution<double>(spec.r_min, spec.r_max)(rng);
    if (2 * (r + margin) >= std::min(spec.width, spec.height)) continue;
    const double cx = std::uniform_real_distribution<double>(r + margin, spec.width - r - margin)(rng);
    const double cy = std::uniform_real_distribution<double>(r + margin, spec.height - r - margin)(rng);
    bool clear = true;
    for (const Circle& c : scene.truth)
      if (std::hypot(c.cx - cx, c.cy - cy) <= c.r + r + spec.thickness + 4) clear = false;
    if (clear) scene.truth.push_back({cx, cy, r, 1.0});
  }

  Image img(spec.width, spec.height, 1, 0);
  const double half = spec.thickness / 2;
  for (const Circle& c : scene.truth) {
    const int x0 = std::max(0, static_cast<int>(c.cx - c.r - half) - 1);
    const int x1 = std::min(spec.width - 1, static_cast<int>(c.cx + c.r + half) + 1);
    const int y0 = std::max(0, static_cast<int>(c.cy - c.r - half) - 1);
    const int y1 = std::min(spec.height - 1, static_cast<int>(c.cy + c.r + half) + 1);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        int hits = 0;
        for (int j = 0; j < kSuper; ++j) {
          for (int i = 0; i < kSuper; ++i) {
            const double d = std::hypot(x + (i + 0.5) / kSuper - c.cx, y + (j + 0.5) / kSuper - c.cy);
            hits += std::abs(d - c.r) <= half ? 1 : 0;
          }
        }
        if (hits) img.at(x, y) = std::max<std::uint8_t>(img.at(x, y), clamp_level(spec.level * hits / 16.0));
      }
    }
  }
  add_noise(img, spec.noise_sigma, mix_seed(seed, 0));
  scene.image = std::move(img);
  return scene;
}

CarSequence make_car_sequence(const CarSequenceSpec& spec) {
  if (spec.frames < 1) throw InvalidArgument("synth: frames must be >= 1");
  const double ppm = spec.px_per_mm;
  CarSequence seq;
  for (int k = 0; k < spec.frames; ++k) {
    SceneSpec a{spec.width, spec.height, ppm, 0, {}, {}, spec.noise_sigma, mix_seed(spec.seed, 2 * k)};
    SceneSpec b = a;
    b.seed = mix_seed(spec.seed, 2 * k + 1);
    std::vector<Detection> cars;
    std::vector<TruthWheel> ta, tb;
    for (std::size_t ci = 0; ci < spec.cars.size(); ++ci) {
      const CarSpec& car = spec.cars[ci];
      const WheelSpec proto;
      const double tyre_r = proto.tyre_mm / 2 * ppm;
      const double x0 = car.start_x + k * spec.velocity;
      const double len = car.length_mm * ppm;
      const double top = spec.wheel_y + tyre_r - 1450 * ppm;
      const double front_x = x0 + len - car.front_overhang_mm * ppm;
      const double rear_x = front_x - car.wheelbase_mm * ppm;
      const Panel body{{x0, top, len, spec.wheel_y - tyre_r - 15 - top}, 110};
      a.panels.push_back(body);
      b.panels.push_back(body);

      const double cx0 = std::max(0.0, x0), cx1 = std::min<double>(spec.width, x0 + len);
      const double cy0 = std::max(0.0, top), cy1 = std::min<double>(spec.height, spec.wheel_y + tyre_r);
      if (cx1 > cx0 && cy1 > cy0) cars.push_back({k, Label::car, {cx0, cy0, cx1 - cx0, cy1 - cy0}, 1.0});

      auto place = [&](SceneSpec& scene, std::vector<TruthWheel>& truth, WheelPosition pos, double x) {
        WheelSpec w;
        w.center = {x, spec.wheel_y};
        w.tilt_deg = car.tilt_deg;
        w.spokes = car.spokes.at(pos);
        w.rim_mm = car.rim_mm.at(pos);
        w.spin_deg = 23.0 * static_cast<int>(pos) + k * spec.velocity / tyre_r / kDeg;
        scene.wheels.push_back(w);
        const WheelTruth t = wheel_truth(w, ppm);
        if (x >= 0 && x < spec.width) truth.push_back({pos, static_cast<int>(ci), t.box, t.class_id, w.rim_mm});
      };
      place(a, ta, WheelPosition::RR, rear_x);
      place(a, ta, WheelPosition::FR, front_x);
      place(b, tb, WheelPosition::RL, rear_x + spec.camera_b_offset);
      place(b, tb, WheelPosition::FL, front_x + spec.camera_b_offset);
    }
    seq.camera_a.push_back(render_wheel(a).first);
    seq.camera_b.push_back(render_wheel(b).first);
    seq.cars.push_back(std::move(cars));
    seq.wheels_a.push_back(std::move(ta));
    seq.wheels_b.push_back(std::move(tb));
  }
  return seq;
}

RimSample make_rim_sample(int class_id, std::mt19937_64& rng, int side) {
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto jitter = [&](std::uint8_t v) { return clamp_level(v + uni(-15, 15)); };
  WheelSpec w;
  w.spokes = class_spokes(class_id);
  const double diameter = side * uni(0.88, 0.98);
  const double ppm = diameter / w.tyre_mm;
  w.center = {side / 2.0 + uni(-4, 4), side / 2.0 + uni(-4, 4)};
  w.tilt_deg = uni(0, 25);
  w.spin_deg = uni(0, 360);
  w.rim_mm = uni(410, 450);
  WheelLevels& L = w.levels;
  L.tyre = jitter(L.tyre);
  L.flange = jitter(L.flange);
  L.face = jitter(L.face);
  L.well = jitter(L.well);
  L.hub = jitter(L.hub);
  L.bolt = jitter(L.bolt);
  SceneSpec s{side, side, ppm, clamp_level(uni(0, 25)), {}, {w}, uni(0, 8), rng()};
  auto [img, truth] = render_wheel(s);
  return {std::move(img), class_id, truth.wheels.front().rim};
}

void write_rim_dataset(const std::filesystem::path& dir, int per_class, std::uint64_t seed, int side) {
  if (per_class < 1) throw InvalidArgument("synth: per_class must be >= 1");
  std::mt19937_64 rng(seed);
  for (int c = 1; c <= static_cast<int>(kSpokePatterns.size()); ++c) {
    char name[8];
    std::snprintf(name, sizeof name, "C%02d", c);
    const auto sub = dir / name;
    std::filesystem::create_directories(sub);
    for (int i = 0; i < per_class; ++i) {
      char file[16];
      std::snprintf(file, sizeof file, "%04d.png", i);
      write_png(sub / file, make_rim_sample(c, rng, side).image);
    }
  }
}

}  // namespace rim
