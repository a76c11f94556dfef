#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rim/core.hpp"
#include "rim/hog.hpp"

namespace rim {

/// One-vs-rest linear SVM over HOG descriptors. Class ids are stored ascending;
/// weights[k] and biases[k] belong to classes[k].
struct SvmModel {
  std::vector<int> classes;
  std::vector<std::vector<double>> weights;
  std::vector<double> biases;
  HogConfig hog;
  int side = 256;  // crop side the descriptor was computed on

  std::size_t dims() const { return weights.empty() ? 0 : weights.front().size(); }
  void validate() const;
};

struct SvmTrainParams {
  double c = 100;         // regularization; lambda = 1 / (c * n)
  int epochs = 100;
  std::uint64_t seed = 42;
};

/// Pegasos-style sub-gradient descent on hinge loss + L2, one machine per
/// class; the returned weights average the epoch-end iterates of the second
/// half of training. Samples are first put into a canonical order (label, then feature
/// values), and every epoch uses a shuffle drawn from a seeded mt19937_64, so
/// the result is bit-for-bit reproducible and independent of input order.
SvmModel svm_train(std::span<const std::vector<double>> features, std::span<const int> labels,
                   const SvmTrainParams& params, const HogConfig& hog = {}, int side = 256);

struct SvmPrediction {
  RimClass cls;
  std::vector<double> margins;  // aligned with model.classes
};

/// argmax over per-class margins; exact ties go to the smaller class id.
SvmPrediction svm_predict(const SvmModel& model, std::span<const double> features);

/// Expands model margins to all RimClass::kCount ids; classes the model does
/// not know get kAbsentScore.
std::vector<double> margins_to_scores(const SvmModel& model, std::span<const double> margins);
inline constexpr double kAbsentScore = -1e6;

/// Binary layout documented in docs/model_format.md.
void save_model(const std::filesystem::path& path, const SvmModel& model);
SvmModel load_model(const std::filesystem::path& path);

}  // namespace rim
