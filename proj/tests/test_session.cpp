#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include <unistd.h>

#include "dataset.hpp"
#include "error.hpp"
#include "serialize.hpp"
#include "session.hpp"
#include "support.hpp"

using namespace limevis;
using namespace testing;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("limevis_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

LabeledDataset patchy_dataset(int categories, int per_category, int side) {
  LabeledDataset ds;
  for (int c = 0; c < categories; ++c) ds.category_names.push_back("cat" + std::to_string(c));
  for (int i = 0; i < per_category; ++i)
    for (int c = 0; c < categories; ++c) {
      ds.images.push_back(patchy_image(side, side, static_cast<std::uint64_t>(i * 31 + c)));
      ds.labels.push_back(c);
    }
  ds.source = "synthetic";
  return ds;
}

std::shared_ptr<Predictor> uniform_predictor(int classes) {
  std::vector<std::string> names;
  for (int c = 0; c < classes; ++c) names.push_back("c" + std::to_string(c));
  return std::make_shared<FunctionPredictor>(names, [classes](const RgbImage&) {
    return ClassProbabilities{std::vector<double>(static_cast<std::size_t>(classes), 1.0 / classes)};
  });
}

ExplainConfig quick_config() {
  ExplainConfig cfg;
  cfg.num_samples = 60;
  cfg.segmentation = SlicParams{12, 10.0, 5};
  return cfg;
}

}  // namespace

TEST_CASE("ppm directory dataset round trip") {
  const fs::path root = scratch("ppmdir");
  LabeledDataset ds = patchy_dataset(2, 3, 8);
  write_ppm_directory(ds, root.string());
  const LabeledDataset back = load_dataset(root.string(), DatasetFormat::PpmDirectory);
  CHECK(back.size() == 6);
  CHECK(back.category_names == ds.category_names);
  // Loaded order is category-major, numeric within a category.
  for (std::size_t i = 0; i < back.size(); ++i) {
    const auto it = std::find(ds.images.begin(), ds.images.end(), back.images[i]);
    REQUIRE(it != ds.images.end());
    CHECK(ds.labels[static_cast<std::size_t>(it - ds.images.begin())] == back.labels[i]);
  }
  fs::remove_all(root);
}

TEST_CASE("stl10 binary loading") {
  std::vector<std::uint8_t> images(3 * kStl10RecordBytes);
  for (std::size_t i = 0; i < images.size(); ++i) images[i] = static_cast<std::uint8_t>(i * 7);
  const std::vector<std::uint8_t> labels{1, 10, 3};
  const LabeledDataset ds = stl10_from_buffers(images, labels, stl10_class_names());
  CHECK(ds.size() == 3);
  CHECK(ds.labels == std::vector<int>{0, 9, 2});
  CHECK(ds.category_names.size() == 10);
  CHECK(ds.images[1] == read_stl10_record(images, 1));

  const std::vector<std::uint8_t> zero{1, 0, 3};
  CHECK(code_of([&] { stl10_from_buffers(images, zero, stl10_class_names()); }) == ErrorCode::MalformedFile);
  const std::vector<std::uint8_t> eleven{1, 11, 3};
  CHECK(code_of([&] { stl10_from_buffers(images, eleven, stl10_class_names()); }) == ErrorCode::MalformedFile);
  const std::vector<std::uint8_t> two{1, 2};
  CHECK(code_of([&] { stl10_from_buffers(images, two, stl10_class_names()); }) == ErrorCode::LabelImageCountMismatch);

  const fs::path root = scratch("stl10");
  write_file((root / "test_X.bin").string(), images);
  write_file((root / "test_y.bin").string(), labels);
  const LabeledDataset from_dir = load_dataset(root.string(), DatasetFormat::Stl10Binary);
  CHECK(from_dir.labels == ds.labels);
  CHECK(from_dir.source.find("test_X.bin") != std::string::npos);
  const LabeledDataset from_file = load_dataset((root / "test_X.bin").string(), DatasetFormat::Stl10Binary);
  CHECK(from_file.images == ds.images);
  fs::remove_all(root);

  CHECK_THROWS_AS(dataset_format_from_name("jpeg"), Error);
  CHECK(dataset_format_from_name("stl10-binary") == DatasetFormat::Stl10Binary);
  CHECK(dataset_format_from_name("ppm-directory") == DatasetFormat::PpmDirectory);
}

TEST_CASE("execute with a constant predictor follows the argmax tie rule") {
  const LabeledDataset ds = patchy_dataset(4, 9, 24);
  const auto pred = uniform_predictor(4);
  const Session s0 = Session::execute(ds, 0, quick_config(), pred);
  CHECK(s0.entries().size() == 9);
  for (const auto& e : s0.entries()) CHECK(e.correct);
  const Session s3 = Session::execute(ds, 3, quick_config(), pred);
  for (const auto& e : s3.entries()) CHECK_FALSE(e.correct);
  CHECK(s3.incorrect_count() == 9);
  CHECK(s3.embedding().coords.size() == 9);
}

TEST_CASE("execute takes the first 100 images and lays them out row-major") {
  const LabeledDataset ds = patchy_dataset(2, 110, 16);
  BuiltinModel m = BuiltinModel::zeros(2);
  m.class_names = ds.category_names;
  CounterRng rng(1, 1);
  for (auto& w : m.weights) w = rng.uniform() - 0.5;
  auto pred = std::make_shared<BuiltinPredictor>(m);
  ExplainConfig cfg = quick_config();
  cfg.num_samples = 20;
  cfg.segmentation = SlicParams{4, 10.0, 3};
  ExecuteOptions opts;
  opts.embedding.iterations = 60;
  const Session s = Session::execute(ds, 1, cfg, pred, opts);
  REQUIRE(s.entries().size() == 100);
  for (std::size_t i = 0; i < 100; ++i) CHECK(s.entries()[i].image_id == static_cast<int>(2 * i + 1));
  const auto cells = s.overview_cells();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    CHECK(cells[i].row == static_cast<int>(i / 10));
    CHECK(cells[i].col == static_cast<int>(i % 10));
  }
  // Red count recomputed independently.
  std::size_t red = 0;
  for (const auto& e : s.entries()) {
    const auto p = pred->predict(ds.images[static_cast<std::size_t>(e.image_id)]);
    red += p.argmax() != 1;
    CHECK(p == e.explanation.original_probs);
  }
  CHECK(red == s.incorrect_count());

  opts.shuffle_seed = 3;
  const Session shuffled = Session::execute(ds, 1, cfg, pred, opts);
  CHECK(shuffled.entries().size() == 100);
  bool differs = false;
  for (std::size_t i = 0; i < 100; ++i) differs |= shuffled.entries()[i].image_id != s.entries()[i].image_id;
  CHECK(differs);
}

TEST_CASE("execute is deterministic across worker counts") {
  const LabeledDataset ds = patchy_dataset(2, 12, 24);
  BuiltinModel m = BuiltinModel::zeros(2);
  m.class_names = ds.category_names;
  CounterRng rng(2, 2);
  for (auto& w : m.weights) w = rng.uniform() - 0.5;
  auto pred = std::make_shared<BuiltinPredictor>(m);
  ExecuteOptions one, four;
  four.workers = 4;
  const Session a = Session::execute(ds, 0, quick_config(), pred, one);
  const Session b = Session::execute(ds, 0, quick_config(), pred, four);
  REQUIRE(a.entries().size() == b.entries().size());
  for (std::size_t i = 0; i < a.entries().size(); ++i) {
    CHECK(a.entries()[i].explanation.selected == b.entries()[i].explanation.selected);
    CHECK(a.entries()[i].explanation.weights == b.entries()[i].explanation.weights);
    CHECK(a.entries()[i].lime_image == b.entries()[i].lime_image);
  }
  CHECK(a.embedding().coords == b.embedding().coords);
  CHECK(embedding_csv(a) == embedding_csv(b));
}

TEST_CASE("execute errors") {
  LabeledDataset ds = patchy_dataset(3, 2, 12);
  ds.category_names.push_back("empty");
  const auto pred = uniform_predictor(4);
  CHECK(code_of([&] { Session::execute(ds, 3, quick_config(), pred); }) == ErrorCode::EmptyCategory);
  CHECK(code_of([&] { Session::execute(ds, 7, quick_config(), pred); }) == ErrorCode::InvalidArgument);
  ExplainConfig bad = quick_config();
  bad.num_features = 0;
  CHECK(code_of([&] { Session::execute(ds, 0, bad, pred); }) == ErrorCode::InvalidParams);
}

TEST_CASE("toggle, reset and pixel lookup") {
  const LabeledDataset ds = patchy_dataset(2, 4, 32);
  BuiltinModel m = BuiltinModel::zeros(2);
  m.class_names = ds.category_names;
  CounterRng rng(3, 3);
  for (auto& w : m.weights) w = rng.uniform() - 0.5;
  auto pred = std::make_shared<BuiltinPredictor>(m);
  Session s = Session::execute(ds, 0, quick_config(), pred);
  const int id = s.entries()[1].image_id;
  const SessionEntry& e = s.entry(id);
  const auto k = static_cast<std::size_t>(e.spmap.num_segments);

  CHECK(s.toggle_state(id) == std::vector<std::uint8_t>(k, 1));
  CHECK(s.current_probs(id) == e.explanation.original_probs);
  CHECK(s.masked_image(id) == e.original);

  const ToggleResult once = s.toggle(id, 0);
  CHECK(once.toggle[0] == 0);
  CHECK(once.current == pred->predict(apply_mask(e.original, e.spmap, once.toggle, kBlack)));
  const ToggleResult twice = s.toggle(id, 0);
  CHECK(twice.toggle == std::vector<std::uint8_t>(k, 1));
  CHECK(twice.masked == e.original);
  CHECK(twice.current == e.explanation.original_probs);

  ToggleResult last;
  for (std::size_t sp = 0; sp < k; ++sp) last = s.toggle(id, static_cast<int>(sp));
  CHECK(last.masked == RgbImage(32, 32, kBlack));
  CHECK(last.current == pred->predict(RgbImage(32, 32, kBlack)));

  // Other images are untouched.
  const int other = s.entries()[2].image_id;
  CHECK(s.toggle_state(other) == std::vector<std::uint8_t>(static_cast<std::size_t>(s.entry(other).spmap.num_segments), 1));

  const ToggleResult r = s.reset(id);
  CHECK(r.toggle == std::vector<std::uint8_t>(k, 1));
  CHECK(r.current == e.explanation.original_probs);
  CHECK(s.reset(other).toggle == s.toggle_state(other));

  // Reset then a toggle sequence equals the same sequence on a fresh session.
  Session fresh = Session::execute(ds, 0, quick_config(), pred);
  const std::vector<int> seq{1, 0, 1, 2};
  ToggleResult a, b;
  for (int sp : seq) {
    if (static_cast<std::size_t>(sp) >= k) continue;
    a = s.toggle(id, sp);
    b = fresh.toggle(id, sp);
  }
  CHECK(a.toggle == b.toggle);
  CHECK(a.current == b.current);

  CHECK(s.pixel_to_superpixel(id, 0, 0) == e.spmap.at(0, 0));
  CHECK(code_of([&] { s.pixel_to_superpixel(id, 32, 0); }) == ErrorCode::OutOfBounds);
  CHECK(code_of([&] { s.pixel_to_superpixel(id, 0, -1); }) == ErrorCode::OutOfBounds);
  CHECK(code_of([&] { s.toggle(id, static_cast<int>(k)); }) == ErrorCode::SuperpixelOutOfRange);
  CHECK(code_of([&] { s.toggle(-5, 0); }) == ErrorCode::UnknownImage);
  CHECK(code_of([&] { s.reset(12345); }) == ErrorCode::UnknownImage);
}

TEST_CASE("pixel_to_superpixel on a quadrant image") {
  LabeledDataset ds;
  ds.category_names = {"only"};
  ds.images.push_back(quadrant_image(32, {Rgb{250, 10, 10}, Rgb{10, 250, 10}, Rgb{10, 10, 250}, Rgb{250, 250, 10}}));
  ds.labels = {0};
  ExplainConfig cfg = quick_config();
  cfg.segmentation = SlicParams{4, 1.0, 10};
  const Session s = Session::execute(ds, 0, cfg, uniform_predictor(1));
  std::set<int> ids;
  for (auto [x, y] : {std::pair{3, 3}, {28, 3}, {3, 28}, {28, 28}}) ids.insert(s.pixel_to_superpixel(0, x, y));
  CHECK(ids.size() == 4);
}

TEST_CASE("serialization") {
  ExplainConfig cfg;
  cfg.segmentation = FelzenszwalbParams{50, 0.5, 10};
  cfg.hide_color = Rgb{1, 2, 3};
  cfg.seed = 99;
  const auto j = to_json(cfg);
  const ExplainConfig back = config_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(algorithm_name(config_from_json(nlohmann::json{{"segmentation", "slic"}}).segmentation) == "slic");
  CHECK(std::holds_alternative<MeanFill>(config_from_json(nlohmann::json{{"hide_color", "mean"}}).hide_color));
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"num_features", 0}}), Error);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"segmentation", "bogus"}}), Error);

  Explanation e;
  e.target_class = 2;
  e.weights = {0.5, -0.25};
  e.selected = {0};
  e.num_superpixels = 2;
  e.original_probs = ClassProbabilities{{0.1, 0.2, 0.7}};
  const auto ej = to_json(e, cfg);
  for (const char* key : {"target_class", "intercept", "weights", "selected", "local_fit_r2", "original_probs",
                          "num_superpixels", "config_echo"})
    CHECK(ej.contains(key));

  const SuperpixelMap q = quadrant_map(8);
  CHECK(spmap_from_json(to_json(q)).labels == q.labels);
  CHECK_THROWS_AS(spmap_from_json(nlohmann::json{{"width", 2}}), Error);
}
