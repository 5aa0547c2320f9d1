#pragma once

#include <string>
#include <vector>

#include "imaging.hpp"

namespace limevis {

enum class DatasetFormat { Stl10Binary, PpmDirectory };

/// "stl10" | "stl10-binary" | "ppmdir" | "ppm-directory".
DatasetFormat dataset_format_from_name(const std::string& name);

const std::vector<std::string>& stl10_class_names();

/// stl10: `path` is an `*_X.bin` image file (labels read from the matching
/// `*_y.bin`) or a directory holding test_X.bin / train_X.bin; optional
/// class_names.txt beside it. ppmdir: `<root>/categories.txt` lists names in
/// label order, images at `<root>/<name>/<n>.ppm` ordered by n.
LabeledDataset load_dataset(const std::string& path, DatasetFormat format);

LabeledDataset stl10_from_buffers(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels,
                                  std::vector<std::string> category_names);

/// Writes the ppm-directory layout read by load_dataset.
void write_ppm_directory(const LabeledDataset& dataset, const std::string& root);

}  // namespace limevis
