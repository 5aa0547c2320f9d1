#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "imaging.hpp"

namespace limevis {

/// Per-class probabilities; each in [0, 1], summing to 1 within 1e-6.
struct ClassProbabilities {
  std::vector<double> probs;

  std::size_t class_count() const noexcept { return probs.size(); }
  /// Lowest index wins ties.
  int argmax() const noexcept;
  double operator[](std::size_t i) const noexcept { return probs[i]; }
  friend bool operator==(const ClassProbabilities&, const ClassProbabilities&) = default;
};

inline constexpr double kProbabilitySumTolerance = 1e-6;

/// Empty string when valid, else a description of the violated invariant.
std::string probability_violation(std::span<const double> probs, std::size_t expected_classes);

ClassProbabilities softmax(std::span<const double> logits);

// ---------------------------------------------------------------------------
// Builtin softmax-regression model

inline constexpr int kBuiltinSide = 16;
inline constexpr int kBuiltinFeatureDim = kBuiltinSide * kBuiltinSide * 3;

struct BuiltinModel {
  int class_count = 0;
  int feature_dim = kBuiltinFeatureDim;
  std::vector<double> weights;  // class_count x feature_dim, row-major
  std::vector<double> bias;
  std::vector<std::string> class_names;

  static BuiltinModel zeros(int class_count, int feature_dim = kBuiltinFeatureDim);
};

/// 16x16 bilinear downsample, interleaved RGB scaled to [0, 1].
std::vector<double> builtin_features(const RgbImage& image);
std::vector<double> logits(const BuiltinModel& model, std::span<const double> features);
ClassProbabilities predict_builtin(const BuiltinModel& model, const RgbImage& image);

/// Mean cross-entropy of softmax(W x + b) over the given rows. When grad_w /
/// grad_b are non-empty they receive the gradient of that mean.
double softmax_cross_entropy(std::span<const double> weights, std::span<const double> bias, int class_count,
                             int feature_dim, std::span<const double> features, std::span<const int> labels,
                             std::span<double> grad_w, std::span<double> grad_b);

struct TrainResult {
  BuiltinModel model;
  std::vector<double> loss_trace;  // mean training loss after each epoch
};

inline constexpr int kTrainBatchSize = 32;

TrainResult train_builtin(const LabeledDataset& dataset, int epochs, double learning_rate, std::uint64_t seed);

/// Little-endian: "LVM1", int32 C, int32 D, C*D float64 weights, C float64 biases.
std::vector<std::uint8_t> save_model(const BuiltinModel& model);
BuiltinModel load_model(std::span<const std::uint8_t> bytes);

// ---------------------------------------------------------------------------
// Predictor abstraction

class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual int class_count() const = 0;
  virtual const std::vector<std::string>& class_names() const = 0;
  /// Elementwise predict; any failure fails the whole batch. Implementations
  /// must tolerate calls from several threads.
  virtual std::vector<ClassProbabilities> predict_batch(std::span<const RgbImage> images) = 0;

  ClassProbabilities predict(const RgbImage& image);
};

class BuiltinPredictor final : public Predictor {
 public:
  explicit BuiltinPredictor(BuiltinModel model);

  int class_count() const override { return model_.class_count; }
  const std::vector<std::string>& class_names() const override { return model_.class_names; }
  std::vector<ClassProbabilities> predict_batch(std::span<const RgbImage> images) override;
  const BuiltinModel& model() const noexcept { return model_; }

 private:
  BuiltinModel model_;
};

/// Adapts a plain function; used for synthetic black boxes.
class FunctionPredictor final : public Predictor {
 public:
  using Fn = std::function<ClassProbabilities(const RgbImage&)>;
  FunctionPredictor(std::vector<std::string> class_names, Fn fn);

  int class_count() const override { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& class_names() const override { return names_; }
  std::vector<ClassProbabilities> predict_batch(std::span<const RgbImage> images) override;

 private:
  std::vector<std::string> names_;
  Fn fn_;
};

// ---------------------------------------------------------------------------
// External predictors: newline-delimited JSON over a subprocess's
// stdin/stdout, or HTTP POST /predict.

class JsonChannel {
 public:
  virtual ~JsonChannel() = default;
  /// One request line out, one response line back. Throws
  /// Error(ExternalPredictorFailure) on transport failure or timeout.
  virtual std::string exchange(const std::string& request_line) = 0;
};

inline constexpr std::chrono::milliseconds kDefaultExternalTimeout{30'000};

std::unique_ptr<JsonChannel> spawn_subprocess_channel(const std::string& command,
                                                      std::chrono::milliseconds timeout = kDefaultExternalTimeout);
std::unique_ptr<JsonChannel> http_channel(const std::string& url,
                                          std::chrono::milliseconds timeout = kDefaultExternalTimeout);

/// Request line for one image: {"id", "width", "height", "pixels_b64"}.
std::string encode_predict_request(std::int64_t id, const RgbImage& image);

class ExternalPredictor final : public Predictor {
 public:
  /// Performs the {"hello": true} handshake.
  explicit ExternalPredictor(std::unique_ptr<JsonChannel> channel);

  int class_count() const override { return class_count_; }
  const std::vector<std::string>& class_names() const override { return names_; }
  std::vector<ClassProbabilities> predict_batch(std::span<const RgbImage> images) override;

 private:
  std::unique_ptr<JsonChannel> channel_;
  std::mutex mutex_;
  int class_count_ = 0;
  std::vector<std::string> names_;
  std::int64_t next_id_ = 0;
};

/// External feature hook on the same wire protocol; responses carry
/// {"id", "features": [...]}.
class ExternalFeatureExtractor {
 public:
  explicit ExternalFeatureExtractor(std::unique_ptr<JsonChannel> channel);
  std::vector<double> extract(const RgbImage& image);

 private:
  std::unique_ptr<JsonChannel> channel_;
  std::mutex mutex_;
  std::int64_t next_id_ = 0;
  std::size_t dim_ = 0;
};

}  // namespace limevis
