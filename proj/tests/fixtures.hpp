#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "rim/hog.hpp"
#include "rim/image_io.hpp"
#include "rim/providers.hpp"
#include "rim/svm.hpp"
#include "rim/synth.hpp"

namespace fixture {

namespace fs = std::filesystem;

// Fresh per-process scratch directory.
inline fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rim_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

struct Dataset {
  std::vector<std::vector<double>> features;
  std::vector<int> labels;
};

inline Dataset rim_dataset(int per_class, std::uint64_t seed, const rim::HogConfig& hog = {}) {
  std::mt19937_64 rng(seed);
  Dataset d;
  for (int c = 1; c <= static_cast<int>(rim::kSpokePatterns.size()); ++c)
    for (int i = 0; i < per_class; ++i) {
      d.features.push_back(rim::hog_features(rim::make_rim_sample(c, rng).image, hog));
      d.labels.push_back(c);
    }
  return d;
}

inline rim::SvmModel rim_model(int per_class, std::uint64_t seed) {
  const Dataset d = rim_dataset(per_class, seed);
  return rim::svm_train(d.features, d.labels, rim::SvmTrainParams{});
}

// Frames under dir/a (and dir/b), car boxes in dir/cars.jsonl.
inline void write_car(const fs::path& dir, const rim::CarSequenceSpec& spec, bool camera_b = true) {
  const rim::CarSequence seq = rim::make_car_sequence(spec);
  fs::create_directories(dir / "a");
  if (camera_b) fs::create_directories(dir / "b");
  std::ostringstream cars;
  cars << rim::detection_header_line(spec.frames, "synth", spec.width, spec.height) << '\n';
  for (int k = 0; k < spec.frames; ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d.png", k);
    rim::write_png(dir / "a" / name, seq.camera_a[k]);
    if (camera_b) rim::write_png(dir / "b" / name, seq.camera_b[k]);
    for (const rim::Detection& d : seq.cars[k]) cars << rim::detection_line(d) << '\n';
  }
  spit(dir / "cars.jsonl", cars.str());
}

}  // namespace fixture
