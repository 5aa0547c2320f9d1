#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "imaging.hpp"
#include "predictor.hpp"
#include "segmentation.hpp"

namespace limevis {

/// Hidden superpixels take their own mean color (rounded to 8 bits).
struct MeanFill {
  friend bool operator==(const MeanFill&, const MeanFill&) = default;
};
using HideColor = std::variant<MeanFill, Rgb>;

inline constexpr Rgb kBlack{0, 0, 0};

struct ExplainConfig {
  SegmentationParams segmentation = default_segmentation();
  int num_samples = 1000;
  double kernel_width = 0.25;
  double ridge_lambda = 1.0;
  bool positive_only = true;
  int num_features = 5;
  bool hide_rest = false;
  HideColor hide_color = MeanFill{};
  std::uint64_t seed = 0;
};

void validate(const ExplainConfig& config);

/// num_samples rows of K visibility bits; row 0 is all ones.
class MaskMatrix {
 public:
  MaskMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), bits_(rows * cols, 1) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const std::uint8_t> row(std::size_t r) const noexcept { return {bits_.data() + r * cols_, cols_}; }
  std::span<std::uint8_t> row(std::size_t r) noexcept { return {bits_.data() + r * cols_, cols_}; }
  std::uint8_t operator()(std::size_t r, std::size_t c) const noexcept { return bits_[r * cols_ + c]; }

  friend bool operator==(const MaskMatrix&, const MaskMatrix&) = default;

 private:
  std::size_t rows_, cols_;
  std::vector<std::uint8_t> bits_;
};

struct Explanation {
  int target_class = 0;
  std::vector<double> weights;
  double intercept = 0;
  double local_fit_r2 = 0;
  int num_superpixels = 0;
  std::vector<int> selected;
  ClassProbabilities original_probs;
};

struct RidgeFit {
  std::vector<double> coefficients;
  double intercept = 0;
  double weighted_r2 = 0;
};

MaskMatrix sample_masks(std::size_t num_samples, std::size_t num_superpixels, std::uint64_t seed);

/// Per-segment mean colors, rounded to 8 bits.
std::vector<Rgb> segment_means(const RgbImage& image, const SuperpixelMap& spmap);

RgbImage apply_mask(const RgbImage& image, const SuperpixelMap& spmap, std::span<const std::uint8_t> mask,
                    const HideColor& hide_color);

/// exp(-d^2 / width^2) with d the cosine distance from the all-ones mask.
double kernel_weight(std::span<const std::uint8_t> mask, double kernel_width);

/// Minimizes sum_i w_i (y_i - b0 - b.z_i)^2 + lambda |b|^2 with b0 unpenalized.
RidgeFit fit_weighted_ridge(const MaskMatrix& masks, std::span<const double> responses,
                            std::span<const double> sample_weights, double ridge_lambda);

std::vector<int> select_superpixels(std::span<const double> coefficients, int num_features, bool positive_only);

inline constexpr Rgb kOutlinePositive{0, 255, 0};
inline constexpr Rgb kOutlineNegative{255, 0, 0};
inline constexpr Rgb kOutlineNeutral{255, 255, 0};

RgbImage render_explanation(const RgbImage& image, const SuperpixelMap& spmap, const Explanation& explanation,
                            const ExplainConfig& config);

struct ExplainResult {
  Explanation explanation;
  RgbImage rendered;
  SuperpixelMap spmap;
};

ExplainResult explain(const RgbImage& image, Predictor& predictor, const ExplainConfig& config);

}  // namespace limevis
