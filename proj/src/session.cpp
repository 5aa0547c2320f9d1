#include "session.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <numeric>
#include <thread>

#include "error.hpp"
#include "rng.hpp"

namespace limevis {

namespace {

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Rethrows the
/// exception of the lowest failing index so errors are deterministic too.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn fn) {
  const std::size_t threads = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, workers)));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

Session Session::execute(const LabeledDataset& dataset, int category, const ExplainConfig& config,
                         std::shared_ptr<Predictor> predictor, const ExecuteOptions& options) {
  validate(config);
  if (!predictor) throw Error(ErrorCode::InvalidArgument, "no predictor");
  if (category < 0 || category >= dataset.class_count())
    throw Error(ErrorCode::InvalidArgument, "category index out of range");

  std::vector<int> ids;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    if (dataset.labels[i] == category) ids.push_back(static_cast<int>(i));
  if (ids.empty()) throw Error(ErrorCode::EmptyCategory, "category '" + dataset.category_names[static_cast<std::size_t>(category)] + "' has no images");
  if (options.shuffle_seed) {
    CounterRng rng(*options.shuffle_seed, 0x5348);
    for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
  }
  if (ids.size() > options.max_images) ids.resize(options.max_images);

  Session s;
  s.category_ = category;
  s.config_ = config;
  s.predictor_ = std::move(predictor);
  s.entries_.resize(ids.size());
  parallel_for(ids.size(), options.workers, [&](std::size_t i) {
    ExplainConfig per_image = config;
    per_image.seed = derive_seed(config.seed, i);
    const RgbImage& image = dataset.images[static_cast<std::size_t>(ids[i])];
    ExplainResult r = explain(image, *s.predictor_, per_image);
    SessionEntry& e = s.entries_[i];
    e.image_id = ids[i];
    e.original = image;
    e.spmap = std::move(r.spmap);
    e.explanation = std::move(r.explanation);
    e.lime_image = std::move(r.rendered);
    e.predicted_class = e.explanation.original_probs.argmax();
    e.correct = e.predicted_class == category;
  });

  FeatureMatrix features(s.entries_.size());
  parallel_for(s.entries_.size(), options.workers,
               [&](std::size_t i) { features[i] = extract_features(s.entries_[i].lime_image); });
  const FeatureMatrix standardized = standardize(features);
  const int n = static_cast<int>(standardized.size());
  if (n >= 7) {
    EmbeddingConfig ec = options.embedding;
    ec.n_neighbors = std::min(ec.n_neighbors, n - 1);
    s.embedding_ = pacmap_embed(standardized, ec);
  } else {
    // Too few points for pair sampling: fall back to the PCA layout.
    s.embedding_.coords = pca_init(standardized);
  }

  for (std::size_t i = 0; i < s.entries_.size(); ++i) {
    const auto& e = s.entries_[i];
    s.index_.emplace(e.image_id, i);
    s.toggles_.emplace_back(static_cast<std::size_t>(e.spmap.num_segments), 1);
    s.current_.push_back(e.explanation.original_probs);
  }
  return s;
}

std::vector<OverviewCell> Session::overview_cells() const {
  std::vector<OverviewCell> cells;
  for (std::size_t i = 0; i < entries_.size(); ++i)
    cells.push_back({entries_[i].image_id, static_cast<int>(i) / kOverviewColumns,
                     static_cast<int>(i) % kOverviewColumns, entries_[i].correct});
  return cells;
}

std::size_t Session::incorrect_count() const {
  return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(), [](const auto& e) { return !e.correct; }));
}

std::size_t Session::slot(int image_id) const {
  const auto it = index_.find(image_id);
  if (it == index_.end()) throw Error(ErrorCode::UnknownImage, "image " + std::to_string(image_id) + " is not in the session");
  return it->second;
}

const SessionEntry& Session::entry(int image_id) const { return entries_[slot(image_id)]; }

const std::vector<std::uint8_t>& Session::toggle_state(int image_id) const { return toggles_[slot(image_id)]; }

const ClassProbabilities& Session::current_probs(int image_id) const { return current_[slot(image_id)]; }

RgbImage Session::masked_image(int image_id) const {
  const std::size_t i = slot(image_id);
  return apply_mask(entries_[i].original, entries_[i].spmap, toggles_[i], kBlack);
}

ToggleResult Session::toggle(int image_id, int superpixel_id) {
  const std::size_t i = slot(image_id);
  auto& bits = toggles_[i];
  if (superpixel_id < 0 || static_cast<std::size_t>(superpixel_id) >= bits.size())
    throw Error(ErrorCode::SuperpixelOutOfRange, "superpixel " + std::to_string(superpixel_id) + " out of range");
  // Predict before committing so a predictor failure leaves the state untouched.
  std::vector<std::uint8_t> next = bits;
  next[static_cast<std::size_t>(superpixel_id)] ^= 1;
  RgbImage masked = apply_mask(entries_[i].original, entries_[i].spmap, next, kBlack);
  ClassProbabilities current = predictor_->predict(masked);
  bits = std::move(next);
  current_[i] = current;
  return {bits, std::move(masked), std::move(current)};
}

ToggleResult Session::reset(int image_id) {
  const std::size_t i = slot(image_id);
  std::fill(toggles_[i].begin(), toggles_[i].end(), 1);
  current_[i] = entries_[i].explanation.original_probs;
  return {toggles_[i], entries_[i].original, current_[i]};
}

int Session::pixel_to_superpixel(int image_id, int x, int y) const {
  const SuperpixelMap& spmap = entries_[slot(image_id)].spmap;
  if (x < 0 || y < 0 || x >= spmap.width || y >= spmap.height)
    throw Error(ErrorCode::OutOfBounds, "pixel (" + std::to_string(x) + ", " + std::to_string(y) + ") outside image");
  return spmap.at(x, y);
}

RgbImage boundary_overlay(const RgbImage& image, const SuperpixelMap& spmap) {
  RgbImage out = image;
  const auto edge = boundary_mask(spmap);
  for (std::size_t p = 0; p < edge.size(); ++p)
    if (edge[p]) out.set_pixel(p, kOutlineNeutral);
  return out;
}

}  // namespace limevis
