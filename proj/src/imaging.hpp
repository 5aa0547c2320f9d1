#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace limevis {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Row-major 8-bit RGB raster. Pixel (row y, col x) lives at
/// data[3 * (y * width + x) + {0,1,2}].
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {});
  RgbImage(int width, int height, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const noexcept { return width_ == 0; }

  Rgb at(int x, int y) const noexcept {
    const std::uint8_t* p = &data_[3 * (static_cast<std::size_t>(y) * width_ + x)];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) noexcept {
    std::uint8_t* p = &data_[3 * (static_cast<std::size_t>(y) * width_ + x)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }
  Rgb pixel(std::size_t index) const noexcept {
    return {data_[3 * index], data_[3 * index + 1], data_[3 * index + 2]};
  }
  void set_pixel(std::size_t index, Rgb c) noexcept {
    data_[3 * index] = c.r;
    data_[3 * index + 1] = c.g;
    data_[3 * index + 2] = c.b;
  }

  std::span<const std::uint8_t> bytes() const noexcept { return data_; }
  std::span<std::uint8_t> bytes() noexcept { return data_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// CIE L*a*b* (D65) image, one (L, a, b) triple per pixel.
struct LabImage {
  int width = 0;
  int height = 0;
  std::vector<std::array<double, 3>> pixels;
};

struct LabeledDataset {
  std::vector<RgbImage> images;
  std::vector<int> labels;
  std::vector<std::string> category_names;
  /// Where the images came from, e.g. "stl10:test_X.bin" or "ppmdir:/data".
  std::string source;

  int class_count() const noexcept { return static_cast<int>(category_names.size()); }
  std::size_t size() const noexcept { return images.size(); }
  int find_category(const std::string& name) const;
};

inline constexpr int kStl10Side = 96;
inline constexpr std::size_t kStl10RecordBytes = 96 * 96 * 3;

RgbImage read_ppm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> write_ppm(const RgbImage& image);

std::size_t stl10_record_count(std::span<const std::uint8_t> bytes);
RgbImage read_stl10_record(std::span<const std::uint8_t> bytes, std::size_t index);
/// Inverse of read_stl10_record for a 96x96 image.
std::vector<std::uint8_t> write_stl10_record(const RgbImage& image);

std::array<double, 3> rgb_to_lab(Rgb c) noexcept;
LabImage rgb_to_lab(const RgbImage& image);

RgbImage resize_bilinear(const RgbImage& image, int new_width, int new_height);

/// Bilinear sampling shared by the RGB and grayscale resizers: pixel centers
/// aligned, coordinates clamped to the source edge.
struct BilinearTap {
  int i0, i1;
  double w1;  // weight of i1; i0 gets 1 - w1
};
std::vector<BilinearTap> bilinear_taps(int src_size, int dst_size);

/// 8-bit quantization, round half away from zero, clamped to [0, 255].
std::uint8_t quantize(double v) noexcept;

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);
void write_file(const std::string& path, const std::string& text);

}  // namespace limevis
