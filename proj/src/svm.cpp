#include "rim/svm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <string>

#include "rim/errors.hpp"

namespace rim {

void SvmModel::validate() const {
  if (classes.empty()) throw InvalidArgument("svm model has no classes");
  if (weights.size() != classes.size() || biases.size() != classes.size())
    throw InvalidArgument("svm model: class/weight/bias counts differ");
  if (!std::is_sorted(classes.begin(), classes.end()) ||
      std::adjacent_find(classes.begin(), classes.end()) != classes.end())
    throw InvalidArgument("svm model: classes must be ascending and distinct");
  const std::size_t d = hog_dims(hog, side);
  for (const auto& w : weights)
    if (w.size() != d) throw InvalidArgument("svm model: weight length does not match hog_dims");
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// One binary Pegasos machine; w = scale * v keeps the shrink step O(1).
void train_binary(const std::vector<const std::vector<double>*>& rows, const std::vector<int>& targets,
                  const std::vector<std::vector<std::size_t>>& schedule, double lambda,
                  std::vector<double>& w_out, double& b_out) {
  const std::size_t d = rows.front()->size();
  std::vector<double> v(d, 0.0);
  double vb = 0;  // bias as an augmented constant feature
  double scale = 1;
  std::uint64_t t = 0;
  // Returned weights average the epoch-end iterates of the second half.
  const std::size_t first_avg = schedule.size() / 2;
  std::vector<double> avg(d, 0.0);
  double avg_b = 0;
  for (std::size_t epoch = 0; epoch < schedule.size(); ++epoch) {
    const auto& order = schedule[epoch];
    for (std::size_t idx : order) {
      ++t;
      const double eta = 1 / (lambda * double(t));
      const std::vector<double>& x = *rows[idx];
      const double y = targets[idx];
      const double margin = y * scale * (dot(v, x) + vb);
      const double shrink = 1 - eta * lambda;
      if (shrink <= 0) {
        std::fill(v.begin(), v.end(), 0.0);
        vb = 0;
        scale = 1;
      } else {
        scale *= shrink;
      }
      if (margin < 1) {
        const double step = eta * y / scale;
        for (std::size_t k = 0; k < d; ++k) v[k] += step * x[k];
        vb += step;
      }
      if (scale < 1e-9) {
        for (double& e : v) e *= scale;
        vb *= scale;
        scale = 1;
      }
    }
    if (epoch >= first_avg) {
      for (std::size_t k = 0; k < d; ++k) avg[k] += scale * v[k];
      avg_b += scale * vb;
    }
  }
  const double m = double(schedule.size() - first_avg);
  w_out.resize(d);
  for (std::size_t k = 0; k < d; ++k) w_out[k] = avg[k] / m;
  b_out = avg_b / m;
}

}  // namespace

SvmModel svm_train(std::span<const std::vector<double>> features, std::span<const int> labels,
                   const SvmTrainParams& params, const HogConfig& hog, int side) {
  if (features.size() != labels.size()) throw InvalidArgument("svm_train: features/labels size mismatch");
  if (features.empty()) throw InvalidArgument("svm_train: no samples");
  if (!(params.c > 0)) throw InvalidArgument("svm_train: c must be positive");
  if (params.epochs < 1) throw InvalidArgument("svm_train: epochs must be >= 1");
  const std::size_t d = features.front().size();
  std::map<int, int> counts;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != d) throw InvalidArgument("svm_train: inconsistent feature lengths");
    for (double v : features[i])
      if (!std::isfinite(v)) throw DataError("svm_train: non-finite feature value");
    RimClass{labels[i]};
    ++counts[labels[i]];
  }
  if (counts.size() < 2) throw InvalidArgument("svm_train: need at least two classes");
  for (auto [cls, n] : counts)
    if (n < 2) throw InvalidArgument("svm_train: class " + std::to_string(cls) + " has fewer than 2 samples");

  const std::size_t n = features.size();
  std::vector<std::size_t> canon(n);
  std::iota(canon.begin(), canon.end(), 0);
  std::sort(canon.begin(), canon.end(), [&](std::size_t a, std::size_t b) {
    if (labels[a] != labels[b]) return labels[a] < labels[b];
    return std::lexicographical_compare(features[a].begin(), features[a].end(), features[b].begin(),
                                        features[b].end());
  });
  std::vector<const std::vector<double>*> rows(n);
  std::vector<int> row_labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i] = &features[canon[i]];
    row_labels[i] = labels[canon[i]];
  }

  std::mt19937_64 rng(params.seed);
  std::vector<std::vector<std::size_t>> schedule(params.epochs);
  for (auto& order : schedule) {
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
  }

  const double lambda = 1 / (params.c * double(n));
  SvmModel model;
  model.hog = hog;
  model.side = side;
  for (auto [cls, count] : counts) {
    (void)count;
    std::vector<int> targets(n);
    for (std::size_t i = 0; i < n; ++i) targets[i] = row_labels[i] == cls ? 1 : -1;
    model.classes.push_back(cls);
    model.weights.emplace_back();
    model.biases.push_back(0);
    train_binary(rows, targets, schedule, lambda, model.weights.back(), model.biases.back());
  }
  return model;
}

SvmPrediction svm_predict(const SvmModel& model, std::span<const double> features) {
  if (model.classes.empty()) throw InvalidArgument("svm_predict: empty model");
  if (features.size() != model.dims())
    throw InvalidArgument("svm_predict: feature length " + std::to_string(features.size()) +
                          " does not match model length " + std::to_string(model.dims()));
  SvmPrediction pred;
  pred.margins.resize(model.classes.size());
  std::size_t best = 0;
  for (std::size_t k = 0; k < model.classes.size(); ++k) {
    pred.margins[k] = dot(model.weights[k], features) + model.biases[k];
    if (pred.margins[k] > pred.margins[best]) best = k;
  }
  pred.cls = RimClass(model.classes[best]);
  return pred;
}

std::vector<double> margins_to_scores(const SvmModel& model, std::span<const double> margins) {
  std::vector<double> scores(RimClass::kCount, kAbsentScore);
  for (std::size_t k = 0; k < model.classes.size(); ++k) scores[model.classes[k]] = margins[k];
  return scores;
}

namespace {

constexpr char kMagic[8] = {'R', 'I', 'M', 'S', 'V', 'M', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

class LeWriter {
 public:
  explicit LeWriter(std::ofstream& out) : out_(out) {}
  void u32(std::uint32_t v) { bytes(v, 4); }
  void i32(std::int32_t v) { bytes(static_cast<std::uint32_t>(v), 4); }
  void u64(std::uint64_t v) { bytes(v, 8); }
  void f64(double v) { bytes(std::bit_cast<std::uint64_t>(v), 8); }

 private:
  void bytes(std::uint64_t v, int n) {
    char buf[8];
    for (int i = 0; i < n; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out_.write(buf, n);
  }
  std::ofstream& out_;
};

class LeReader {
 public:
  LeReader(std::ifstream& in, std::string name) : in_(in), name_(std::move(name)) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(bytes(4)); }
  std::int32_t i32() { return static_cast<std::int32_t>(static_cast<std::uint32_t>(bytes(4))); }
  std::uint64_t u64() { return bytes(8); }
  double f64() { return std::bit_cast<double>(bytes(8)); }

 private:
  std::uint64_t bytes(int n) {
    unsigned char buf[8];
    in_.read(reinterpret_cast<char*>(buf), n);
    if (!in_) throw DataError("truncated model file " + name_);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t(buf[i]) << (8 * i);
    return v;
  }
  std::ifstream& in_;
  std::string name_;
};

}  // namespace

void save_model(const std::filesystem::path& path, const SvmModel& model) {
  model.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model " + path.string());
  out.write(kMagic, sizeof kMagic);
  LeWriter w(out);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(model.hog.orientations));
  w.u32(static_cast<std::uint32_t>(model.hog.cell));
  w.u32(static_cast<std::uint32_t>(model.hog.block));
  w.u32(static_cast<std::uint32_t>(model.hog.block_stride));
  w.u32(model.hog.signed_gradients ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(model.side));
  w.u32(static_cast<std::uint32_t>(model.classes.size()));
  w.u64(model.dims());
  for (int cls : model.classes) w.i32(cls);
  for (const auto& row : model.weights)
    for (double v : row) w.f64(v);
  for (double b : model.biases) w.f64(b);
  if (!out) throw DataError("failed writing model " + path.string());
}

SvmModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw DataError("not a rim SVM model: " + path.string());
  LeReader r(in, path.string());
  if (const auto version = r.u32(); version != kVersion)
    throw DataError("unsupported model version " + std::to_string(version));
  SvmModel m;
  m.hog.orientations = static_cast<int>(r.u32());
  m.hog.cell = static_cast<int>(r.u32());
  m.hog.block = static_cast<int>(r.u32());
  m.hog.block_stride = static_cast<int>(r.u32());
  m.hog.signed_gradients = r.u32() != 0;
  m.side = static_cast<int>(r.u32());
  const std::uint32_t n_classes = r.u32();
  const std::uint64_t dims = r.u64();
  if (n_classes == 0 || n_classes > RimClass::kCount) throw DataError("model class count out of range");
  try {
    // check before allocating anything sized by the file
    if (dims != hog_dims(m.hog, m.side)) throw DataError("model dimension does not match its HOG layout");
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("corrupt model file: ") + e.what());
  }
  for (std::uint32_t k = 0; k < n_classes; ++k) {
    m.classes.push_back(r.i32());
    if (m.classes.back() < 0 || m.classes.back() >= RimClass::kCount) throw DataError("model class id out of range");
  }
  m.weights.assign(n_classes, std::vector<double>(dims));
  for (auto& row : m.weights)
    for (double& v : row) v = r.f64();
  m.biases.resize(n_classes);
  for (double& b : m.biases) b = r.f64();
  for (const auto& row : m.weights)
    if (!std::all_of(row.begin(), row.end(), [](double v) { return std::isfinite(v); }))
      throw DataError("model weights are not finite");
  if (!std::all_of(m.biases.begin(), m.biases.end(), [](double v) { return std::isfinite(v); }))
    throw DataError("model biases are not finite");
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes in model file " + path.string());
  try {
    m.validate();
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("corrupt model file: ") + e.what());
  }
  return m;
}

}  // namespace rim
