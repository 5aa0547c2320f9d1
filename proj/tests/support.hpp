#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <queue>
#include <string>
#include <vector>

#include "imaging.hpp"
#include "lime.hpp"
#include "predictor.hpp"
#include "rng.hpp"
#include "segmentation.hpp"

namespace testing {

using namespace limevis;

inline RgbImage random_image(int w, int h, std::uint64_t seed, int lo = 0, int hi = 255) {
  CounterRng rng(seed, 1);
  RgbImage img(w, h);
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  for (auto& b : img.bytes()) b = static_cast<std::uint8_t>(lo + static_cast<int>(rng.below(span)));
  return img;
}

// A few random rectangles over a random background plus mild noise; gives
// segmenters real structure to find.
inline RgbImage patchy_image(int w, int h, std::uint64_t seed, int noise = 6) {
  CounterRng rng(seed, 2);
  auto color = [&] {
    return Rgb{static_cast<std::uint8_t>(20 + rng.below(216)), static_cast<std::uint8_t>(20 + rng.below(216)),
               static_cast<std::uint8_t>(20 + rng.below(216))};
  };
  RgbImage img(w, h, color());
  const int rects = 4 + static_cast<int>(rng.below(4));
  for (int r = 0; r < rects; ++r) {
    const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(w)));
    const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(h)));
    const int rw = 4 + static_cast<int>(rng.below(static_cast<std::uint64_t>(w / 2)));
    const int rh = 4 + static_cast<int>(rng.below(static_cast<std::uint64_t>(h / 2)));
    const Rgb c = color();
    for (int y = y0; y < std::min(h, y0 + rh); ++y)
      for (int x = x0; x < std::min(w, x0 + rw); ++x) img.set(x, y, c);
  }
  for (auto& b : img.bytes()) {
    const int v = b + static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * noise + 1))) - noise;
    b = static_cast<std::uint8_t>(std::clamp(v, 1, 255));
  }
  return img;
}

inline RgbImage quadrant_image(int side, const std::array<Rgb, 4>& colors) {
  RgbImage img(side, side);
  const int half = side / 2;
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) img.set(x, y, colors[(y >= half ? 2 : 0) + (x >= half ? 1 : 0)]);
  return img;
}

inline SuperpixelMap quadrant_map(int side) {
  SuperpixelMap m{side, side, std::vector<std::int32_t>(static_cast<std::size_t>(side) * side), 4};
  const int half = side / 2;
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      m.labels[static_cast<std::size_t>(y) * side + x] = (y >= half ? 2 : 0) + (x >= half ? 1 : 0);
  return m;
}

// Equal up to a relabeling: the label correspondence is a bijection.
inline bool same_partition(const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b) {
  if (a.size() != b.size()) return false;
  std::map<std::int32_t, std::int32_t> fwd, back;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [f, fnew] = fwd.emplace(a[i], b[i]);
    if (!fnew && f->second != b[i]) return false;
    auto [r, rnew] = back.emplace(b[i], a[i]);
    if (!rnew && r->second != a[i]) return false;
  }
  return true;
}

inline bool labels_dense(const SuperpixelMap& m) {
  if (m.num_segments < 1) return false;
  if (m.labels.size() != static_cast<std::size_t>(m.width) * m.height) return false;
  std::vector<char> seen(static_cast<std::size_t>(m.num_segments), 0);
  for (auto l : m.labels) {
    if (l < 0 || l >= m.num_segments) return false;
    seen[static_cast<std::size_t>(l)] = 1;
  }
  return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
}

// Every label forms exactly one 4-connected component.
inline bool segments_connected(const SuperpixelMap& m) {
  const std::size_t n = m.labels.size();
  std::vector<char> visited(n, 0);
  std::vector<int> components(static_cast<std::size_t>(m.num_segments), 0);
  for (std::size_t s = 0; s < n; ++s) {
    if (visited[s]) continue;
    const auto label = m.labels[s];
    ++components[static_cast<std::size_t>(label)];
    std::queue<std::size_t> q;
    q.push(s);
    visited[s] = 1;
    while (!q.empty()) {
      const std::size_t p = q.front();
      q.pop();
      const int x = static_cast<int>(p % m.width), y = static_cast<int>(p / m.width);
      const int nx[4] = {x - 1, x + 1, x, x};
      const int ny[4] = {y, y, y - 1, y + 1};
      for (int k = 0; k < 4; ++k) {
        if (nx[k] < 0 || ny[k] < 0 || nx[k] >= m.width || ny[k] >= m.height) continue;
        const std::size_t q2 = static_cast<std::size_t>(ny[k]) * m.width + nx[k];
        if (!visited[q2] && m.labels[q2] == label) {
          visited[q2] = 1;
          q.push(q2);
        }
      }
    }
  }
  return std::all_of(components.begin(), components.end(), [](int c) { return c == 1; });
}

// Black box whose class-0 probability is 0.4 + sum_k c_k z_k, z_k = 1 when
// superpixel k is visible. Hidden superpixels are detected against the
// original pixels, so the image must not coincide with the fill color.
struct LinearOracle {
  static constexpr int kClasses = 10;
  RgbImage original;
  SuperpixelMap spmap;
  std::vector<double> coefficients;
  std::vector<std::vector<std::size_t>> members;

  LinearOracle(RgbImage image, SuperpixelMap map, std::uint64_t seed)
      : original(std::move(image)), spmap(std::move(map)) {
    const int k = spmap.num_segments;
    CounterRng rng(seed, 77);
    coefficients.resize(static_cast<std::size_t>(k));
    bool any_positive = false;
    for (auto& c : coefficients) {
      c = (-0.3 + 0.85 * rng.uniform()) / k;
      any_positive = any_positive || c > 0;
    }
    if (!any_positive) coefficients[0] = 0.3 / k;
    members.resize(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < spmap.labels.size(); ++i)
      members[static_cast<std::size_t>(spmap.labels[i])].push_back(i);
  }

  std::vector<std::uint8_t> visible(const RgbImage& img) const {
    std::vector<std::uint8_t> z(members.size(), 0);
    for (std::size_t k = 0; k < members.size(); ++k)
      for (std::size_t i : members[k])
        if (img.pixel(i) != Rgb{0, 0, 0} && img.pixel(i) == original.pixel(i)) {
          z[k] = 1;
          break;
        }
    return z;
  }

  double target_prob(std::span<const std::uint8_t> z) const {
    double p = 0.4;
    for (std::size_t k = 0; k < z.size(); ++k) p += coefficients[k] * z[k];
    return p;
  }

  ClassProbabilities operator()(const RgbImage& img) const {
    const double p = target_prob(visible(img));
    ClassProbabilities out;
    out.probs.assign(kClasses, (1.0 - p) / (kClasses - 1));
    out.probs[0] = p;
    return out;
  }

  std::shared_ptr<Predictor> predictor() const {
    std::vector<std::string> names;
    for (int c = 0; c < kClasses; ++c) names.push_back("class_" + std::to_string(c));
    auto self = std::make_shared<LinearOracle>(*this);
    return std::make_shared<FunctionPredictor>(names, [self](const RgbImage& img) { return (*self)(img); });
  }
};

// Mean silhouette coefficient, straight from the definition.
inline double silhouette(const std::vector<std::array<double, 2>>& pts, const std::vector<int>& labels) {
  const std::size_t n = pts.size();
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::map<int, std::pair<double, int>> by_cluster;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]);
      auto& [sum, count] = by_cluster[labels[j]];
      sum += d;
      ++count;
    }
    double a = 0, b = INFINITY;
    for (const auto& [c, sc] : by_cluster) {
      const double mean = sc.first / sc.second;
      if (c == labels[i]) a = mean;
      else b = std::min(b, mean);
    }
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(n);
}

// Two Gaussian clusters in `dim` dimensions, means 0 and `offset` along every axis.
inline std::vector<std::vector<double>> two_clusters(int per_cluster, int dim, double offset, std::uint64_t seed,
                                                     std::vector<int>& labels) {
  CounterRng rng(seed, 9);
  auto gauss = [&] {
    const double u1 = 1.0 - rng.uniform(), u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  };
  std::vector<std::vector<double>> rows;
  labels.clear();
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < per_cluster; ++i) {
      std::vector<double> r(static_cast<std::size_t>(dim));
      for (auto& v : r) v = gauss() + c * offset;
      rows.push_back(std::move(r));
      labels.push_back(c);
    }
  return rows;
}

// Uniform red/green/blue images with noise, labels 0..2.
inline LabeledDataset rgb_dataset(int per_class, int side, std::uint64_t seed) {
  LabeledDataset ds;
  ds.category_names = {"red", "green", "blue"};
  ds.source = "synthetic";
  CounterRng rng(seed, 3);
  for (int i = 0; i < per_class; ++i)
    for (int c = 0; c < 3; ++c) {
      RgbImage img(side, side);
      for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        std::array<int, 3> v{};
        for (auto& ch : v) ch = static_cast<int>(rng.below(60));
        v[static_cast<std::size_t>(c)] = 180 + static_cast<int>(rng.below(76));
        img.set_pixel(p, Rgb{static_cast<std::uint8_t>(v[0]), static_cast<std::uint8_t>(v[1]),
                             static_cast<std::uint8_t>(v[2])});
      }
      ds.images.push_back(std::move(img));
      ds.labels.push_back(c);
    }
  return ds;
}

}  // namespace testing
