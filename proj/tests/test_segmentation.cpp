#include <doctest.h>

#include "error.hpp"
#include "support.hpp"

using namespace limevis;
using namespace testing;

namespace {

const std::array<Rgb, 4> kQuadColors{Rgb{255, 0, 0}, Rgb{0, 255, 0}, Rgb{0, 0, 255}, Rgb{255, 255, 0}};

RgbImage halves(int w, int h, Rgb left, Rgb right) {
  RgbImage img(w, h, left);
  for (int y = 0; y < h; ++y)
    for (int x = w / 2; x < w; ++x) img.set(x, y, right);
  return img;
}

std::vector<std::int32_t> halves_labels(int w, int h) {
  std::vector<std::int32_t> l(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) l[static_cast<std::size_t>(y) * w + x] = x >= w / 2;
  return l;
}

}  // namespace

TEST_CASE("slic fixtures") {
  const SuperpixelMap one = slic(RgbImage(32, 32, Rgb{90, 90, 90}), {1, 10.0, 10});
  CHECK(one.num_segments == 1);
  CHECK(labels_dense(one));

  const SuperpixelMap quads = slic(quadrant_image(32, kQuadColors), {4, 1.0, 10});
  CHECK(quads.num_segments == 4);
  CHECK(same_partition(quads.labels, quadrant_map(32).labels));

  CHECK_THROWS_AS(slic(RgbImage(4, 4), {0, 10.0, 10}), Error);
  CHECK_THROWS_AS(slic(RgbImage(4, 4), {17, 10.0, 10}), Error);
}

TEST_CASE("slic with huge compactness stays grid-like") {
  const RgbImage img = random_image(48, 48, 11);
  const int k = 16;
  const SuperpixelMap m = slic(img, {k, 1e6, 10});
  const double s = std::sqrt(48.0 * 48.0 / k);
  std::vector<int> x0(m.num_segments, 1 << 20), x1(m.num_segments, -1), y0(m.num_segments, 1 << 20),
      y1(m.num_segments, -1);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) {
      const auto l = static_cast<std::size_t>(m.at(x, y));
      x0[l] = std::min(x0[l], x), x1[l] = std::max(x1[l], x);
      y0[l] = std::min(y0[l], y), y1[l] = std::max(y1[l], y);
    }
  for (int l = 0; l < m.num_segments; ++l) {
    const double area = (x1[l] - x0[l] + 1.0) * (y1[l] - y0[l] + 1.0);
    CHECK(area <= (2 * s + 1) * (2 * s + 1));
  }
}

TEST_CASE("felzenszwalb fixtures") {
  const SuperpixelMap uniform = felzenszwalb(RgbImage(20, 20, Rgb{40, 50, 60}), {100.0, 0.8, 20});
  CHECK(uniform.num_segments == 1);

  const SuperpixelMap two = felzenszwalb(halves(24, 16, Rgb{0, 0, 0}, Rgb{255, 255, 255}), {10.0, 0.0, 1});
  CHECK(two.num_segments == 2);
  CHECK(same_partition(two.labels, halves_labels(24, 16)));

  const RgbImage noisy = random_image(12, 10, 4);
  CHECK(felzenszwalb(noisy, {50.0, 0.5, 120}).num_segments == 1);

  CHECK_THROWS_AS(felzenszwalb(noisy, {0.0, 0.5, 1}), Error);
  CHECK_THROWS_AS(felzenszwalb(noisy, {1.0, -0.5, 1}), Error);
  CHECK_THROWS_AS(felzenszwalb(noisy, {1.0, 0.5, 0}), Error);
}

TEST_CASE("felzenszwalb is invariant to a constant channel offset") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const RgbImage base = random_image(32, 32, seed, 0, 200);
    RgbImage shifted = base;
    for (auto& b : shifted.bytes()) b = static_cast<std::uint8_t>(b + 40);
    const FelzenszwalbParams p{80.0, 0.0, 5};
    CHECK(felzenszwalb(base, p).labels == felzenszwalb(shifted, p).labels);
  }
}

TEST_CASE("quickshift fixtures") {
  // Two blobs on a contrasting background, separated by more than max_dist.
  RgbImage img(40, 20, Rgb{240, 240, 240});
  for (int y = 6; y < 14; ++y)
    for (int x = 4; x < 12; ++x) img.set(x, y, Rgb{200, 0, 0});
  for (int y = 6; y < 14; ++y)
    for (int x = 28; x < 36; ++x) img.set(x, y, Rgb{200, 0, 0});
  const SuperpixelMap m = quickshift(img, {0.5, 2.0, 6.0});
  CHECK(labels_dense(m));
  CHECK(m.at(6, 9) != m.at(30, 9));
  CHECK(m.at(6, 9) != m.at(20, 2));

  const RgbImage noisy = random_image(9, 7, 2);
  const SuperpixelMap singles = quickshift(noisy, {0.2, 2.0, 0.9});
  CHECK(singles.num_segments == 63);

  // Uniform: equal densities in the interior never link; only the border
  // density falloff creates parents.
  const SuperpixelMap flat = quickshift(RgbImage(10, 10, Rgb{9, 9, 9}), {0.2, 2.0, 4.0});
  CHECK(labels_dense(flat));
  CHECK(quickshift(RgbImage(10, 10, Rgb{9, 9, 9}), {0.2, 2.0, 4.0}).labels == flat.labels);

  CHECK_THROWS_AS(quickshift(noisy, {0.0, 2.0, 4.0}), Error);
  CHECK_THROWS_AS(quickshift(noisy, {1.5, 2.0, 4.0}), Error);
  CHECK_THROWS_AS(quickshift(noisy, {0.5, 0.0, 4.0}), Error);
  CHECK_THROWS_AS(quickshift(noisy, {0.5, 2.0, 0.0}), Error);
}

TEST_CASE("dense labels and connectivity on random images") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const RgbImage img = seed % 2 ? random_image(40, 36, seed) : patchy_image(40, 36, seed);
    for (const SegmentationParams& p :
         {SegmentationParams{SlicParams{}}, SegmentationParams{FelzenszwalbParams{}},
          SegmentationParams{QuickshiftParams{}}}) {
      const SuperpixelMap m = segment(img, p);
      INFO(algorithm_name(p) << " seed " << seed);
      CHECK(m.width == 40);
      CHECK(m.height == 36);
      CHECK(labels_dense(m));
      CHECK(segments_connected(m));
      CHECK(segment(img, p).labels == m.labels);
    }
  }
}

TEST_CASE("boundary_mask") {
  SuperpixelMap single{5, 4, std::vector<std::int32_t>(20, 0), 1};
  const auto none = boundary_mask(single);
  CHECK(std::none_of(none.begin(), none.end(), [](bool b) { return b; }));

  SuperpixelMap tiny{2, 2, {0, 1, 0, 1}, 2};
  const auto all = boundary_mask(tiny);
  CHECK(std::all_of(all.begin(), all.end(), [](bool b) { return b; }));

  const SuperpixelMap q = quadrant_map(32);
  const auto mask = boundary_mask(q);
  std::size_t expected = 0;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      bool edge = false;
      if (x > 0 && q.at(x - 1, y) != q.at(x, y)) edge = true;
      if (x < 31 && q.at(x + 1, y) != q.at(x, y)) edge = true;
      if (y > 0 && q.at(x, y - 1) != q.at(x, y)) edge = true;
      if (y < 31 && q.at(x, y + 1) != q.at(x, y)) edge = true;
      expected += edge;
      CHECK(mask[static_cast<std::size_t>(y) * 32 + x] == edge);
    }
  CHECK(expected == 4u * 32u - 4u);
}

TEST_CASE("enforce_connectivity splits and absorbs fragments") {
  // Label 0 appears in two disconnected pieces.
  SuperpixelMap m{4, 1, {0, 1, 1, 0}, 2};
  enforce_connectivity(m, 1, false);
  CHECK(m.num_segments == 3);
  CHECK(labels_dense(m));
  CHECK(segments_connected(m));

  SuperpixelMap n{4, 1, {0, 1, 1, 0}, 2};
  enforce_connectivity(n, 1, true);
  CHECK(segments_connected(n));
  CHECK(n.num_segments == 2);
}

TEST_CASE("label PGM round trip") {
  const SuperpixelMap q = quadrant_map(16);
  const SuperpixelMap back = read_label_pgm(write_label_pgm(q));
  CHECK(back.labels == q.labels);
  CHECK(back.num_segments == 4);

  SuperpixelMap many{30, 20, {}, 600};
  for (int i = 0; i < 600; ++i) many.labels.push_back(i);
  const SuperpixelMap many_back = read_label_pgm(write_label_pgm(many));
  CHECK(many_back.labels == many.labels);
  CHECK(many_back.num_segments == 600);
}

TEST_CASE("segmentation names") {
  CHECK(algorithm_name(segmentation_from_name("slic")) == "slic");
  CHECK(algorithm_name(segmentation_from_name("felzenszwalb")) == "felzenszwalb");
  CHECK(algorithm_name(segmentation_from_name("quickshift")) == "quickshift");
  CHECK(algorithm_name(default_segmentation()) == "quickshift");
  CHECK_THROWS_AS(segmentation_from_name("watershed"), Error);
}
