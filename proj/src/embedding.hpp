#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "imaging.hpp"

namespace limevis {

// Builtin descriptor layout: 3 x 8 color-histogram bins, 8x8 grayscale
// thumbnail, 9 gradient-orientation bins.
inline constexpr int kColorBins = 8;
inline constexpr int kThumbSide = 8;
inline constexpr int kOrientationBins = 9;
inline constexpr int kFeatureDim = 3 * kColorBins + kThumbSide * kThumbSide + kOrientationBins;

using FeatureVector = std::vector<double>;
using FeatureMatrix = std::vector<FeatureVector>;

FeatureVector extract_features(const RgbImage& image);

/// Per-dimension z-score across rows; zero-variance dimensions are dropped.
FeatureMatrix standardize(const FeatureMatrix& features);

struct EmbeddingConfig {
  int n_neighbors = 10;
  double mid_near_ratio = 0.5;
  double far_pair_ratio = 2.0;
  int iterations = 450;
  double learning_rate = 1.0;
  std::uint64_t seed = 0;
};

using PairList = std::vector<std::pair<int, int>>;

struct PhaseWeights {
  double near = 0, mid_near = 0, further = 0;
};

/// Weight schedule at zero-based optimizer step `step`.
PhaseWeights phase_weights(int step);

struct Embedding2D {
  std::vector<std::array<double, 2>> coords;
  PairList near_pairs, mid_near_pairs, further_pairs;
  /// Objective under the final-phase weights, before and after optimization.
  double initial_loss = 0;
  double final_loss = 0;
};

PairList select_near_pairs(const FeatureMatrix& features, int n_neighbors);
PairList sample_mid_near_pairs(const FeatureMatrix& features, int count_per_point, std::uint64_t seed);
/// Partners exclude the anchor and its near-pair partners.
PairList sample_further_pairs(const FeatureMatrix& features, const PairList& near_pairs, int count_per_point,
                              std::uint64_t seed);

int mid_near_count(const EmbeddingConfig& config);
int further_count(const EmbeddingConfig& config);

struct LossAndGrad {
  double loss = 0;
  std::vector<std::array<double, 2>> grad;
};

LossAndGrad pacmap_loss_and_grad(std::span<const std::array<double, 2>> coords, const PairList& near,
                                 const PairList& mid_near, const PairList& further, const PhaseWeights& weights);

/// Top-2 principal component scores of the centered rows, times 0.01.
std::vector<std::array<double, 2>> pca_init(const FeatureMatrix& features);

Embedding2D pacmap_embed(const FeatureMatrix& features, const EmbeddingConfig& config);

}  // namespace limevis
