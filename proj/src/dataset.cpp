#include "dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "error.hpp"

namespace limevis {

namespace fs = std::filesystem;

DatasetFormat dataset_format_from_name(const std::string& name) {
  if (name == "stl10" || name == "stl10-binary") return DatasetFormat::Stl10Binary;
  if (name == "ppmdir" || name == "ppm-directory") return DatasetFormat::PpmDirectory;
  throw Error(ErrorCode::InvalidArgument, "unknown dataset format '" + name + "'");
}

const std::vector<std::string>& stl10_class_names() {
  static const std::vector<std::string> names = {"airplane", "bird", "car", "cat", "deer",
                                                 "dog", "horse", "monkey", "ship", "truck"};
  return names;
}

namespace {

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MalformedFile, "cannot read " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

LabeledDataset load_stl10(const fs::path& path) {
  fs::path images_path = path;
  if (fs::is_directory(path)) {
    images_path = path / "test_X.bin";
    if (!fs::exists(images_path)) images_path = path / "train_X.bin";
  }
  if (!fs::exists(images_path)) throw Error(ErrorCode::MalformedFile, "no STL-10 image file at " + path.string());
  std::string stem = images_path.filename().string();
  const auto marker = stem.rfind("_X");
  if (marker == std::string::npos) throw Error(ErrorCode::MalformedFile, "STL-10 image file must be named *_X.bin");
  stem.replace(marker, 2, "_y");
  const fs::path labels_path = images_path.parent_path() / stem;
  if (!fs::exists(labels_path)) throw Error(ErrorCode::MalformedFile, "missing STL-10 labels file " + labels_path.string());

  std::vector<std::string> names = stl10_class_names();
  const fs::path names_path = images_path.parent_path() / "class_names.txt";
  if (fs::exists(names_path)) names = read_lines(names_path);

  LabeledDataset ds = stl10_from_buffers(read_file(images_path.string()), read_file(labels_path.string()), names);
  ds.source = "stl10:" + images_path.string();
  return ds;
}

LabeledDataset load_ppm_directory(const fs::path& root) {
  LabeledDataset ds;
  ds.category_names = read_lines(root / "categories.txt");
  if (ds.category_names.empty()) throw Error(ErrorCode::MalformedFile, "categories.txt lists no categories");
  for (std::size_t c = 0; c < ds.category_names.size(); ++c) {
    const fs::path dir = root / ds.category_names[c];
    if (!fs::is_directory(dir)) continue;
    std::vector<std::pair<unsigned long long, fs::path>> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file() || entry.path().extension() != ".ppm") continue;
      const std::string stem = entry.path().stem().string();
      if (stem.empty() || !std::all_of(stem.begin(), stem.end(), [](char ch) { return ch >= '0' && ch <= '9'; }))
        continue;
      files.emplace_back(std::stoull(stem), entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& [n, file] : files) {
      ds.images.push_back(read_ppm(read_file(file.string())));
      ds.labels.push_back(static_cast<int>(c));
    }
  }
  ds.source = "ppmdir:" + root.string();
  return ds;
}

}  // namespace

LabeledDataset stl10_from_buffers(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels,
                                  std::vector<std::string> category_names) {
  const std::size_t count = stl10_record_count(images);
  if (labels.size() != count)
    throw Error(ErrorCode::LabelImageCountMismatch,
                std::to_string(count) + " images but " + std::to_string(labels.size()) + " labels");
  LabeledDataset ds;
  ds.category_names = std::move(category_names);
  const auto classes = ds.category_names.size();
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned label = labels[i];
    if (label < 1 || label > classes)
      throw Error(ErrorCode::MalformedFile, "STL-10 label byte " + std::to_string(label) + " outside 1.." +
                                                std::to_string(classes));
    ds.images.push_back(read_stl10_record(images, i));
    ds.labels.push_back(static_cast<int>(label) - 1);
  }
  return ds;
}

LabeledDataset load_dataset(const std::string& path, DatasetFormat format) {
  if (!fs::exists(path)) throw Error(ErrorCode::MalformedFile, "dataset path does not exist: " + path);
  return format == DatasetFormat::Stl10Binary ? load_stl10(path) : load_ppm_directory(path);
}

void write_ppm_directory(const LabeledDataset& dataset, const std::string& root) {
  fs::create_directories(root);
  std::string names;
  for (const auto& n : dataset.category_names) names += n + "\n";
  write_file((fs::path(root) / "categories.txt").string(), names);
  std::vector<std::size_t> counter(dataset.category_names.size(), 0);
  for (std::size_t i = 0; i < dataset.images.size(); ++i) {
    const auto c = static_cast<std::size_t>(dataset.labels[i]);
    const fs::path dir = fs::path(root) / dataset.category_names[c];
    fs::create_directories(dir);
    write_file((dir / (std::to_string(counter[c]++) + ".ppm")).string(), write_ppm(dataset.images[i]));
  }
}

}  // namespace limevis
