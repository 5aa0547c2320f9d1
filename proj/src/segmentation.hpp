#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "imaging.hpp"

namespace limevis {

/// Dense per-pixel segment labels: every id in [0, num_segments) occurs.
struct SuperpixelMap {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> labels;  // row-major
  int num_segments = 0;

  std::int32_t at(int x, int y) const noexcept {
    return labels[static_cast<std::size_t>(y) * width + x];
  }
  std::size_t pixel_count() const noexcept { return labels.size(); }
  std::vector<std::size_t> segment_sizes() const;
};

struct SlicParams {
  int n_segments = 50;
  double compactness = 10.0;
  int max_iter = 10;
};

struct FelzenszwalbParams {
  double scale = 100.0;
  double sigma = 0.8;
  int min_size = 20;
};

struct QuickshiftParams {
  double ratio = 0.2;
  double kernel_size = 4.0;
  double max_dist = 8.0;
};

using SegmentationParams = std::variant<SlicParams, FelzenszwalbParams, QuickshiftParams>;

/// Quickshift is the default algorithm.
inline SegmentationParams default_segmentation() { return QuickshiftParams{}; }

std::string algorithm_name(const SegmentationParams& params);
/// "slic" | "felzenszwalb" | "quickshift" with default parameters.
SegmentationParams segmentation_from_name(const std::string& name);
void validate(const SegmentationParams& params);

SuperpixelMap slic(const RgbImage& image, const SlicParams& params);
SuperpixelMap felzenszwalb(const RgbImage& image, const FelzenszwalbParams& params);
SuperpixelMap quickshift(const RgbImage& image, const QuickshiftParams& params);
SuperpixelMap segment(const RgbImage& image, const SegmentationParams& params);

/// True where a pixel has a 4-neighbor with a different label.
std::vector<bool> boundary_mask(const SuperpixelMap& spmap);

/// Relabels ids by first occurrence in row-major order.
void densify_labels(SuperpixelMap& spmap);

/// Splits segments into 4-connected fragments, then absorbs every fragment
/// smaller than min_fragment (and, if absorb_minor_fragments is set, every
/// fragment that is not the largest piece of its original segment) into the
/// 4-adjacent fragment it shares the longest border with. Result is dense.
void enforce_connectivity(SuperpixelMap& spmap, std::size_t min_fragment, bool absorb_minor_fragments);

/// Label image as binary PGM (P5); 8-bit when K <= 256, else 16-bit big-endian.
std::vector<std::uint8_t> write_label_pgm(const SuperpixelMap& spmap);
SuperpixelMap read_label_pgm(std::span<const std::uint8_t> bytes);

}  // namespace limevis
