#include "imaging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include "error.hpp"

namespace limevis {

RgbImage::RgbImage(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 1 || height < 1)
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  data_.resize(pixel_count() * 3);
  for (std::size_t i = 0; i < pixel_count(); ++i) set_pixel(i, fill);
}

RgbImage::RgbImage(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 1 || height < 1)
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  if (data_.size() != pixel_count() * 3)
    throw Error(ErrorCode::DimensionMismatch, "pixel buffer size does not match dimensions");
}

int LabeledDataset::find_category(const std::string& name) const {
  for (std::size_t i = 0; i < category_names.size(); ++i)
    if (category_names[i] == name) return static_cast<int>(i);
  return -1;
}

// ---------------------------------------------------------------------------
// PPM

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = static_cast<char>(bytes_[pos_]);
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long number() {
    skip_space_and_comments();
    long value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > (1L << 30)) throw Error(ErrorCode::UnsupportedFormat, "PPM header value too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw Error(ErrorCode::UnsupportedFormat, "malformed PPM header");
    return value;
  }

  std::size_t pos() const noexcept { return pos_; }
  void advance() noexcept { ++pos_; }
  bool at_end() const noexcept { return pos_ >= bytes_.size(); }
  std::uint8_t peek() const noexcept { return bytes_[pos_]; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

RgbImage read_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
    throw Error(ErrorCode::UnsupportedFormat, "not a binary P6 PPM");
  HeaderReader reader(bytes.subspan(2));
  const long width = reader.number();
  const long height = reader.number();
  const long maxval = reader.number();
  if (maxval != 255) throw Error(ErrorCode::UnsupportedFormat, "PPM maxval must be 255");
  if (width < 1 || height < 1) throw Error(ErrorCode::UnsupportedFormat, "PPM dimensions must be positive");
  // Exactly one whitespace byte separates the header from the payload.
  if (reader.at_end() || !std::isspace(reader.peek()))
    throw Error(ErrorCode::TruncatedData, "PPM header not terminated");
  reader.advance();
  const std::size_t offset = 2 + reader.pos();
  const std::size_t need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3;
  if (bytes.size() - offset < need) throw Error(ErrorCode::TruncatedData, "PPM payload truncated");
  std::vector<std::uint8_t> data(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                                 bytes.begin() + static_cast<std::ptrdiff_t>(offset + need));
  return RgbImage(static_cast<int>(width), static_cast<int>(height), std::move(data));
}

std::vector<std::uint8_t> write_ppm(const RgbImage& image) {
  const std::string header =
      "P6\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.bytes().begin(), image.bytes().end());
  return out;
}

// ---------------------------------------------------------------------------
// STL-10: per record, three channel planes (R, G, B) of 96x96 bytes, each
// plane stored column-major.

std::size_t stl10_record_count(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % kStl10RecordBytes != 0)
    throw Error(ErrorCode::MalformedFile, "STL-10 buffer length is not a multiple of 27648");
  return bytes.size() / kStl10RecordBytes;
}

RgbImage read_stl10_record(std::span<const std::uint8_t> bytes, std::size_t index) {
  const std::size_t count = stl10_record_count(bytes);
  if (index >= count) throw Error(ErrorCode::IndexOutOfRange, "STL-10 record index out of range");
  const std::uint8_t* rec = bytes.data() + index * kStl10RecordBytes;
  constexpr std::size_t plane = kStl10Side * kStl10Side;
  std::vector<std::uint8_t> data(kStl10RecordBytes);
  for (int y = 0; y < kStl10Side; ++y)
    for (int x = 0; x < kStl10Side; ++x)
      for (int c = 0; c < 3; ++c)
        data[3 * (y * kStl10Side + x) + c] = rec[c * plane + x * kStl10Side + y];
  return RgbImage(kStl10Side, kStl10Side, std::move(data));
}

std::vector<std::uint8_t> write_stl10_record(const RgbImage& image) {
  if (image.width() != kStl10Side || image.height() != kStl10Side)
    throw Error(ErrorCode::DimensionMismatch, "STL-10 records are 96x96");
  constexpr std::size_t plane = kStl10Side * kStl10Side;
  std::vector<std::uint8_t> rec(kStl10RecordBytes);
  const auto px = image.bytes();
  for (int y = 0; y < kStl10Side; ++y)
    for (int x = 0; x < kStl10Side; ++x)
      for (int c = 0; c < 3; ++c)
        rec[c * plane + x * kStl10Side + y] = px[3 * (y * kStl10Side + x) + c];
  return rec;
}

// ---------------------------------------------------------------------------
// Color

namespace {

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

// D65 reference white, Y normalized to 1.
constexpr double kXn = 0.95047;
constexpr double kYn = 1.0;
constexpr double kZn = 1.08883;

const std::array<double, 256>& linear_table() {
  static const std::array<double, 256> table = [] {
    std::array<double, 256> t{};
    for (int i = 0; i < 256; ++i) t[static_cast<std::size_t>(i)] = srgb_to_linear(i / 255.0);
    return t;
  }();
  return table;
}

}  // namespace

std::array<double, 3> rgb_to_lab(Rgb c) noexcept {
  const auto& lin = linear_table();
  const double r = lin[c.r];
  const double g = lin[c.g];
  const double b = lin[c.b];
  const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  const double fx = lab_f(x / kXn);
  const double fy = lab_f(y / kYn);
  const double fz = lab_f(z / kZn);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

LabImage rgb_to_lab(const RgbImage& image) {
  LabImage lab{image.width(), image.height(), {}};
  lab.pixels.reserve(image.pixel_count());
  for (std::size_t i = 0; i < image.pixel_count(); ++i) lab.pixels.push_back(rgb_to_lab(image.pixel(i)));
  return lab;
}

// ---------------------------------------------------------------------------
// Resampling

std::uint8_t quantize(double v) noexcept {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::floor(v + 0.5));
}

std::vector<BilinearTap> bilinear_taps(int src_size, int dst_size) {
  std::vector<BilinearTap> taps(static_cast<std::size_t>(dst_size));
  const double scale = static_cast<double>(src_size) / dst_size;
  for (int i = 0; i < dst_size; ++i) {
    double s = (i + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src_size - 1));
    const int i0 = static_cast<int>(std::floor(s));
    const int i1 = std::min(i0 + 1, src_size - 1);
    taps[static_cast<std::size_t>(i)] = {i0, i1, s - i0};
  }
  return taps;
}

RgbImage resize_bilinear(const RgbImage& image, int new_width, int new_height) {
  if (new_width < 1 || new_height < 1)
    throw Error(ErrorCode::InvalidArgument, "resize target dimensions must be positive");
  if (new_width == image.width() && new_height == image.height()) return image;
  const auto xs = bilinear_taps(image.width(), new_width);
  const auto ys = bilinear_taps(image.height(), new_height);
  const auto src = image.bytes();
  const std::size_t stride = 3 * static_cast<std::size_t>(image.width());
  std::vector<std::uint8_t> out(static_cast<std::size_t>(new_width) * new_height * 3);
  for (int y = 0; y < new_height; ++y) {
    const BilinearTap ty = ys[static_cast<std::size_t>(y)];
    const std::uint8_t* row0 = src.data() + ty.i0 * stride;
    const std::uint8_t* row1 = src.data() + ty.i1 * stride;
    for (int x = 0; x < new_width; ++x) {
      const BilinearTap tx = xs[static_cast<std::size_t>(x)];
      for (int c = 0; c < 3; ++c) {
        const double top = row0[3 * tx.i0 + c] * (1.0 - tx.w1) + row0[3 * tx.i1 + c] * tx.w1;
        const double bot = row1[3 * tx.i0 + c] * (1.0 - tx.w1) + row1[3 * tx.i1 + c] * tx.w1;
        out[3 * (static_cast<std::size_t>(y) * new_width + x) + c] =
            quantize(top * (1.0 - ty.w1) + bot * ty.w1);
      }
    }
  }
  return RgbImage(new_width, new_height, std::move(out));
}

// ---------------------------------------------------------------------------
// Files

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

void write_file(const std::string& path, const std::string& text) {
  write_file(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace limevis
