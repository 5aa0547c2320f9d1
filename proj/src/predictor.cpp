#include "predictor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include "error.hpp"
#include "rng.hpp"

namespace limevis {

static_assert(std::endian::native == std::endian::little, "model persistence assumes a little-endian host");

int ClassProbabilities::argmax() const noexcept {
  int best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

std::string probability_violation(std::span<const double> probs, std::size_t expected_classes) {
  if (probs.size() != expected_classes)
    return "expected " + std::to_string(expected_classes) + " probabilities, got " + std::to_string(probs.size());
  double sum = 0;
  for (const double p : probs) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) return "probability outside [0, 1]";
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbabilitySumTolerance) return "probabilities sum to " + std::to_string(sum);
  return {};
}

ClassProbabilities softmax(std::span<const double> logits) {
  ClassProbabilities out;
  if (logits.empty()) return out;
  const double peak = *std::max_element(logits.begin(), logits.end());
  out.probs.resize(logits.size());
  double sum = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.probs[i] = std::exp(logits[i] - peak);
    sum += out.probs[i];
  }
  for (auto& p : out.probs) p /= sum;
  return out;
}

// ---------------------------------------------------------------------------
// Builtin model

BuiltinModel BuiltinModel::zeros(int class_count, int feature_dim) {
  BuiltinModel m;
  m.class_count = class_count;
  m.feature_dim = feature_dim;
  m.weights.assign(static_cast<std::size_t>(class_count) * feature_dim, 0.0);
  m.bias.assign(static_cast<std::size_t>(class_count), 0.0);
  for (int c = 0; c < class_count; ++c) m.class_names.push_back("class_" + std::to_string(c));
  return m;
}

std::vector<double> builtin_features(const RgbImage& image) {
  const RgbImage small = resize_bilinear(image, kBuiltinSide, kBuiltinSide);
  std::vector<double> f(small.bytes().size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = small.bytes()[i] / 255.0;
  return f;
}

std::vector<double> logits(const BuiltinModel& model, std::span<const double> features) {
  std::vector<double> z(static_cast<std::size_t>(model.class_count));
  const auto d = static_cast<std::size_t>(model.feature_dim);
  for (std::size_t c = 0; c < z.size(); ++c)
    z[c] = model.bias[c] + std::inner_product(features.begin(), features.end(), model.weights.begin() + static_cast<std::ptrdiff_t>(c * d), 0.0);
  return z;
}

ClassProbabilities predict_builtin(const BuiltinModel& model, const RgbImage& image) {
  return softmax(logits(model, builtin_features(image)));
}

double softmax_cross_entropy(std::span<const double> weights, std::span<const double> bias, int class_count,
                             int feature_dim, std::span<const double> features, std::span<const int> labels,
                             std::span<double> grad_w, std::span<double> grad_b) {
  const auto c_count = static_cast<std::size_t>(class_count);
  const auto d = static_cast<std::size_t>(feature_dim);
  const std::size_t rows = labels.size();
  const bool want_grad = !grad_w.empty();
  if (want_grad) {
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
  }
  if (rows == 0) return 0.0;
  std::vector<double> z(c_count);
  double loss = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = features.data() + r * d;
    for (std::size_t c = 0; c < c_count; ++c) {
      double acc = bias[c];
      const double* wrow = weights.data() + c * d;
      for (std::size_t j = 0; j < d; ++j) acc += wrow[j] * x[j];
      z[c] = acc;
    }
    const double peak = *std::max_element(z.begin(), z.end());
    double sum = 0;
    for (auto& v : z) sum += std::exp(v - peak);
    const double log_norm = peak + std::log(sum);
    const auto label = static_cast<std::size_t>(labels[r]);
    loss += log_norm - z[label];
    if (!want_grad) continue;
    for (std::size_t c = 0; c < c_count; ++c) {
      const double delta = std::exp(z[c] - log_norm) - (c == label ? 1.0 : 0.0);
      grad_b[c] += delta;
      double* g = grad_w.data() + c * d;
      for (std::size_t j = 0; j < d; ++j) g[j] += delta * x[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(rows);
  if (want_grad) {
    for (auto& g : grad_w) g *= inv;
    for (auto& g : grad_b) g *= inv;
  }
  return loss * inv;
}

TrainResult train_builtin(const LabeledDataset& dataset, int epochs, double learning_rate, std::uint64_t seed) {
  if (dataset.images.empty()) throw Error(ErrorCode::EmptyDataset, "cannot train on an empty dataset");
  if (epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
  if (!(learning_rate > 0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be > 0");
  if (dataset.labels.size() != dataset.images.size())
    throw Error(ErrorCode::LabelImageCountMismatch, "labels and images differ in length");

  const int classes = dataset.class_count();
  const std::size_t n = dataset.images.size();
  constexpr auto d = static_cast<std::size_t>(kBuiltinFeatureDim);
  std::vector<double> features;
  features.reserve(n * d);
  for (const auto& img : dataset.images) {
    const auto f = builtin_features(img);
    features.insert(features.end(), f.begin(), f.end());
  }
  for (const int label : dataset.labels)
    if (label < 0 || label >= classes) throw Error(ErrorCode::MalformedFile, "label out of range");

  TrainResult result{BuiltinModel::zeros(classes), {}};
  result.model.class_names = dataset.category_names;
  auto& model = result.model;
  std::vector<double> grad_w(model.weights.size()), grad_b(model.bias.size());
  std::vector<std::size_t> order(n);
  std::vector<double> batch_x;
  std::vector<int> batch_y;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    CounterRng rng(seed, static_cast<std::uint64_t>(epoch));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    for (std::size_t start = 0; start < n; start += kTrainBatchSize) {
      const std::size_t stop = std::min(n, start + kTrainBatchSize);
      batch_x.clear();
      batch_y.clear();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t idx = order[k];
        batch_x.insert(batch_x.end(), features.begin() + static_cast<std::ptrdiff_t>(idx * d),
                       features.begin() + static_cast<std::ptrdiff_t>((idx + 1) * d));
        batch_y.push_back(dataset.labels[idx]);
      }
      softmax_cross_entropy(model.weights, model.bias, classes, kBuiltinFeatureDim, batch_x, batch_y, grad_w, grad_b);
      for (std::size_t j = 0; j < grad_w.size(); ++j) model.weights[j] -= learning_rate * grad_w[j];
      for (std::size_t j = 0; j < grad_b.size(); ++j) model.bias[j] -= learning_rate * grad_b[j];
    }
    result.loss_trace.push_back(
        softmax_cross_entropy(model.weights, model.bias, classes, kBuiltinFeatureDim, features, dataset.labels, {}, {}));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

template <typename T>
void append_raw(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

template <typename T>
T read_raw(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  if (bytes.size() - pos < sizeof(T)) throw Error(ErrorCode::TruncatedData, "model file truncated");
  T value;
  std::memcpy(&value, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

std::vector<std::uint8_t> save_model(const BuiltinModel& model) {
  std::vector<std::uint8_t> out{'L', 'V', 'M', '1'};
  append_raw<std::int32_t>(out, model.class_count);
  append_raw<std::int32_t>(out, model.feature_dim);
  for (const double w : model.weights) append_raw(out, w);
  for (const double b : model.bias) append_raw(out, b);
  return out;
}

BuiltinModel load_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "LVM1", 4) != 0)
    throw Error(ErrorCode::UnsupportedFormat, "not an LVM1 model file");
  std::size_t pos = 4;
  const auto classes = read_raw<std::int32_t>(bytes, pos);
  const auto dim = read_raw<std::int32_t>(bytes, pos);
  if (classes < 1 || dim != kBuiltinFeatureDim)
    throw Error(ErrorCode::MalformedFile, "model header has unsupported dimensions");
  BuiltinModel model = BuiltinModel::zeros(classes, dim);
  if (bytes.size() != pos + (model.weights.size() + model.bias.size()) * sizeof(double))
    throw Error(ErrorCode::TruncatedData, "model payload length mismatch");
  for (auto& w : model.weights) w = read_raw<double>(bytes, pos);
  for (auto& b : model.bias) b = read_raw<double>(bytes, pos);
  for (const double v : model.weights)
    if (!std::isfinite(v)) throw Error(ErrorCode::MalformedFile, "model has non-finite weights");
  for (const double v : model.bias)
    if (!std::isfinite(v)) throw Error(ErrorCode::MalformedFile, "model has non-finite biases");
  return model;
}

// ---------------------------------------------------------------------------
// Predictors

ClassProbabilities Predictor::predict(const RgbImage& image) {
  auto out = predict_batch(std::span<const RgbImage>(&image, 1));
  return std::move(out.front());
}

BuiltinPredictor::BuiltinPredictor(BuiltinModel model) : model_(std::move(model)) {
  if (model_.class_count < 1 || model_.feature_dim != kBuiltinFeatureDim ||
      model_.weights.size() != static_cast<std::size_t>(model_.class_count) * model_.feature_dim ||
      model_.bias.size() != static_cast<std::size_t>(model_.class_count))
    throw Error(ErrorCode::InvalidArgument, "inconsistent builtin model");
  if (model_.class_names.size() != static_cast<std::size_t>(model_.class_count))
    throw Error(ErrorCode::InvalidArgument, "class_names length must equal class_count");
}

std::vector<ClassProbabilities> BuiltinPredictor::predict_batch(std::span<const RgbImage> images) {
  std::vector<ClassProbabilities> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(predict_builtin(model_, img));
  return out;
}

FunctionPredictor::FunctionPredictor(std::vector<std::string> class_names, Fn fn)
    : names_(std::move(class_names)), fn_(std::move(fn)) {}

std::vector<ClassProbabilities> FunctionPredictor::predict_batch(std::span<const RgbImage> images) {
  std::vector<ClassProbabilities> out;
  out.reserve(images.size());
  for (const auto& img : images) {
    auto p = fn_(img);
    if (const auto why = probability_violation(p.probs, names_.size()); !why.empty())
      throw Error(ErrorCode::ExternalPredictorFailure, "predictor returned invalid probabilities: " + why);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace limevis
