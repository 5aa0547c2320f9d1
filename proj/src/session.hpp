#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "embedding.hpp"
#include "lime.hpp"
#include "predictor.hpp"

namespace limevis {

inline constexpr std::size_t kSessionImages = 100;
inline constexpr int kOverviewColumns = 10;

struct SessionEntry {
  int image_id = 0;  // index into the dataset
  RgbImage original;
  SuperpixelMap spmap;
  Explanation explanation;
  RgbImage lime_image;
  int predicted_class = 0;
  bool correct = false;
};

struct OverviewCell {
  int image_id = 0;
  int row = 0, col = 0;
  bool correct = false;
};

struct ExecuteOptions {
  int workers = 1;
  /// Unset: first images of the category in dataset order.
  std::optional<std::uint64_t> shuffle_seed;
  EmbeddingConfig embedding;
  std::size_t max_images = kSessionImages;
};

struct ToggleResult {
  std::vector<std::uint8_t> toggle;
  RgbImage masked;
  ClassProbabilities current;
};

/// One executed analysis. Only toggle() and reset() mutate it after
/// construction; callers serialize those against readers.
class Session {
 public:
  static Session execute(const LabeledDataset& dataset, int category, const ExplainConfig& config,
                         std::shared_ptr<Predictor> predictor, const ExecuteOptions& options = {});

  int category() const noexcept { return category_; }
  const ExplainConfig& config() const noexcept { return config_; }
  const std::vector<SessionEntry>& entries() const noexcept { return entries_; }
  const Embedding2D& embedding() const noexcept { return embedding_; }
  const std::vector<std::string>& class_names() const { return predictor_->class_names(); }
  std::vector<OverviewCell> overview_cells() const;
  std::size_t incorrect_count() const;

  bool contains(int image_id) const { return index_.count(image_id) != 0; }
  const SessionEntry& entry(int image_id) const;
  const std::vector<std::uint8_t>& toggle_state(int image_id) const;
  const ClassProbabilities& current_probs(int image_id) const;
  /// Current toggle state applied with black fill.
  RgbImage masked_image(int image_id) const;

  ToggleResult toggle(int image_id, int superpixel_id);
  ToggleResult reset(int image_id);
  int pixel_to_superpixel(int image_id, int x, int y) const;

 private:
  std::size_t slot(int image_id) const;

  int category_ = 0;
  ExplainConfig config_;
  std::shared_ptr<Predictor> predictor_;
  std::vector<SessionEntry> entries_;
  Embedding2D embedding_;
  std::vector<std::vector<std::uint8_t>> toggles_;
  std::vector<ClassProbabilities> current_;
  std::map<int, std::size_t> index_;
};

/// Yellow superpixel borders drawn over `image`.
RgbImage boundary_overlay(const RgbImage& image, const SuperpixelMap& spmap);

}  // namespace limevis
