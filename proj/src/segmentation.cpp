#include "segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <cctype>
#include <tuple>

#include "error.hpp"

namespace limevis {

std::vector<std::size_t> SuperpixelMap::segment_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(num_segments), 0);
  for (auto l : labels) ++sizes[static_cast<std::size_t>(l)];
  return sizes;
}

std::string algorithm_name(const SegmentationParams& params) {
  struct Visitor {
    std::string operator()(const SlicParams&) const { return "slic"; }
    std::string operator()(const FelzenszwalbParams&) const { return "felzenszwalb"; }
    std::string operator()(const QuickshiftParams&) const { return "quickshift"; }
  };
  return std::visit(Visitor{}, params);
}

SegmentationParams segmentation_from_name(const std::string& name) {
  if (name == "slic") return SlicParams{};
  if (name == "felzenszwalb") return FelzenszwalbParams{};
  if (name == "quickshift") return QuickshiftParams{};
  throw Error(ErrorCode::InvalidParams, "unknown segmentation algorithm '" + name + "'");
}

void validate(const SegmentationParams& params) {
  if (const auto* p = std::get_if<SlicParams>(&params)) {
    if (p->n_segments < 1) throw Error(ErrorCode::InvalidParams, "slic: n_segments must be >= 1");
    if (!(p->compactness > 0)) throw Error(ErrorCode::InvalidParams, "slic: compactness must be > 0");
    if (p->max_iter < 1) throw Error(ErrorCode::InvalidParams, "slic: max_iter must be >= 1");
  } else if (const auto* f = std::get_if<FelzenszwalbParams>(&params)) {
    if (!(f->scale > 0)) throw Error(ErrorCode::InvalidParams, "felzenszwalb: scale must be > 0");
    if (!(f->sigma >= 0)) throw Error(ErrorCode::InvalidParams, "felzenszwalb: sigma must be >= 0");
    if (f->min_size < 1) throw Error(ErrorCode::InvalidParams, "felzenszwalb: min_size must be >= 1");
  } else {
    const auto& q = std::get<QuickshiftParams>(params);
    if (!(q.ratio > 0 && q.ratio <= 1)) throw Error(ErrorCode::InvalidParams, "quickshift: ratio must be in (0, 1]");
    if (!(q.kernel_size > 0)) throw Error(ErrorCode::InvalidParams, "quickshift: kernel_size must be > 0");
    if (!(q.max_dist > 0)) throw Error(ErrorCode::InvalidParams, "quickshift: max_dist must be > 0");
  }
}

SuperpixelMap segment(const RgbImage& image, const SegmentationParams& params) {
  struct Visitor {
    const RgbImage& image;
    SuperpixelMap operator()(const SlicParams& p) const { return slic(image, p); }
    SuperpixelMap operator()(const FelzenszwalbParams& p) const { return felzenszwalb(image, p); }
    SuperpixelMap operator()(const QuickshiftParams& p) const { return quickshift(image, p); }
  };
  return std::visit(Visitor{image}, params);
}

// ---------------------------------------------------------------------------
// Label bookkeeping

void densify_labels(SuperpixelMap& spmap) {
  std::vector<std::int32_t> remap;
  std::int32_t max_label = 0;
  for (auto l : spmap.labels) max_label = std::max(max_label, l);
  remap.assign(static_cast<std::size_t>(max_label) + 1, -1);
  std::int32_t next = 0;
  for (auto& l : spmap.labels) {
    auto& slot = remap[static_cast<std::size_t>(l)];
    if (slot < 0) slot = next++;
    l = slot;
  }
  spmap.num_segments = next;
}

namespace {

struct DisjointSets {
  std::vector<std::uint32_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
};

constexpr int kDx4[4] = {1, -1, 0, 0};
constexpr int kDy4[4] = {0, 0, 1, -1};

}  // namespace

void enforce_connectivity(SuperpixelMap& spmap, std::size_t min_fragment, bool absorb_minor_fragments) {
  const int w = spmap.width;
  const int h = spmap.height;
  const std::size_t n = spmap.pixel_count();

  // 4-connected fragments, numbered by first pixel in row-major order.
  std::vector<std::uint32_t> frag(n, std::numeric_limits<std::uint32_t>::max());
  std::vector<std::vector<std::uint32_t>> members;
  std::vector<std::int32_t> frag_label;
  std::vector<std::uint32_t> stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (frag[start] != std::numeric_limits<std::uint32_t>::max()) continue;
    const auto id = static_cast<std::uint32_t>(members.size());
    const std::int32_t label = spmap.labels[start];
    members.emplace_back();
    frag_label.push_back(label);
    frag[start] = id;
    stack.assign(1, static_cast<std::uint32_t>(start));
    while (!stack.empty()) {
      const std::uint32_t p = stack.back();
      stack.pop_back();
      members[id].push_back(p);
      const int x = static_cast<int>(p % static_cast<std::uint32_t>(w));
      const int y = static_cast<int>(p / static_cast<std::uint32_t>(w));
      for (int k = 0; k < 4; ++k) {
        const int nx = x + kDx4[k], ny = y + kDy4[k];
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::size_t q = static_cast<std::size_t>(ny) * w + nx;
        if (frag[q] == std::numeric_limits<std::uint32_t>::max() && spmap.labels[q] == label) {
          frag[q] = id;
          stack.push_back(static_cast<std::uint32_t>(q));
        }
      }
    }
  }
  const std::size_t nfrag = members.size();

  // Largest fragment per original label (lowest fragment id on ties).
  std::int32_t max_label = 0;
  for (auto l : frag_label) max_label = std::max(max_label, l);
  std::vector<std::int64_t> dominant(static_cast<std::size_t>(max_label) + 1, -1);
  for (std::size_t f = 0; f < nfrag; ++f) {
    auto& d = dominant[static_cast<std::size_t>(frag_label[f])];
    if (d < 0 || members[f].size() > members[static_cast<std::size_t>(d)].size())
      d = static_cast<std::int64_t>(f);
  }
  std::vector<bool> minor(nfrag, false);
  for (std::size_t f = 0; f < nfrag; ++f)
    minor[f] = absorb_minor_fragments &&
               dominant[static_cast<std::size_t>(frag_label[f])] != static_cast<std::int64_t>(f);

  std::vector<std::uint32_t> order;
  for (std::size_t f = 0; f < nfrag; ++f)
    if (members[f].size() < min_fragment || minor[f]) order.push_back(static_cast<std::uint32_t>(f));
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return std::make_tuple(members[a].size(), a) < std::make_tuple(members[b].size(), b);
  });

  DisjointSets sets(nfrag);
  std::vector<std::uint32_t> contact(nfrag, 0);
  std::vector<std::uint32_t> touched;
  for (const std::uint32_t f : order) {
    if (sets.find(f) != f) continue;
    if (members[f].size() >= min_fragment && !minor[f]) continue;
    touched.clear();
    for (const std::uint32_t p : members[f]) {
      const int x = static_cast<int>(p % static_cast<std::uint32_t>(w));
      const int y = static_cast<int>(p / static_cast<std::uint32_t>(w));
      for (int k = 0; k < 4; ++k) {
        const int nx = x + kDx4[k], ny = y + kDy4[k];
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::uint32_t r = sets.find(frag[static_cast<std::size_t>(ny) * w + nx]);
        if (r == f) continue;
        if (contact[r]++ == 0) touched.push_back(r);
      }
    }
    if (touched.empty()) continue;  // the whole image is one fragment
    std::uint32_t best = touched.front();
    for (const std::uint32_t r : touched)
      if (contact[r] > contact[best] || (contact[r] == contact[best] && r < best)) best = r;
    for (const std::uint32_t r : touched) contact[r] = 0;
    sets.parent[f] = best;
    auto& dst = members[best];
    dst.insert(dst.end(), members[f].begin(), members[f].end());
    members[f].clear();
    members[f].shrink_to_fit();
  }

  for (std::size_t p = 0; p < n; ++p) spmap.labels[p] = static_cast<std::int32_t>(sets.find(frag[p]));
  densify_labels(spmap);
}

std::vector<bool> boundary_mask(const SuperpixelMap& spmap) {
  const int w = spmap.width, h = spmap.height;
  std::vector<bool> mask(spmap.pixel_count(), false);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto l = spmap.at(x, y);
      for (int k = 0; k < 4; ++k) {
        const int nx = x + kDx4[k], ny = y + kDy4[k];
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        if (spmap.at(nx, ny) != l) {
          mask[static_cast<std::size_t>(y) * w + x] = true;
          break;
        }
      }
    }
  return mask;
}

// ---------------------------------------------------------------------------
// SLIC

SuperpixelMap slic(const RgbImage& image, const SlicParams& params) {
  validate(params);
  const int w = image.width(), h = image.height();
  const std::size_t n = image.pixel_count();
  if (static_cast<std::size_t>(params.n_segments) > n)
    throw Error(ErrorCode::InvalidParams, "slic: n_segments exceeds pixel count");

  const LabImage lab = rgb_to_lab(image);
  const double step = std::sqrt(static_cast<double>(n) / params.n_segments);
  const int nx = std::max(1, static_cast<int>(std::lround(w / step)));
  const int ny = std::max(1, static_cast<int>(std::lround(h / step)));

  struct Center {
    double l, a, b, x, y;
  };
  std::vector<Center> centers;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double cx = (i + 0.5) * w / nx;
      const double cy = (j + 0.5) * h / ny;
      const auto& c = lab.pixels[static_cast<std::size_t>(std::min(h - 1, static_cast<int>(cy))) * w +
                                 std::min(w - 1, static_cast<int>(cx))];
      centers.push_back({c[0], c[1], c[2], cx, cy});
    }

  const double spatial = (params.compactness / step) * (params.compactness / step);
  auto distance = [&](const Center& c, std::size_t p, int x, int y) {
    const auto& v = lab.pixels[p];
    const double dl = v[0] - c.l, da = v[1] - c.a, db = v[2] - c.b;
    const double dx = x - c.x, dy = y - c.y;
    return dl * dl + da * da + db * db + spatial * (dx * dx + dy * dy);
  };

  SuperpixelMap out{w, h, std::vector<std::int32_t>(n, -1), 0};
  std::vector<double> best(n);
  for (int iter = 0; iter < params.max_iter; ++iter) {
    std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
    std::fill(out.labels.begin(), out.labels.end(), -1);
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const Center& c = centers[k];
      const int x0 = std::max(0, static_cast<int>(std::ceil(c.x - step)));
      const int x1 = std::min(w - 1, static_cast<int>(std::floor(c.x + step)));
      const int y0 = std::max(0, static_cast<int>(std::ceil(c.y - step)));
      const int y1 = std::min(h - 1, static_cast<int>(std::floor(c.y + step)));
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          const std::size_t p = static_cast<std::size_t>(y) * w + x;
          const double d = distance(c, p, x, y);
          if (d < best[p]) {
            best[p] = d;
            out.labels[p] = static_cast<std::int32_t>(k);
          }
        }
    }
    // Pixels outside every window fall back to the globally nearest center.
    for (std::size_t p = 0; p < n; ++p) {
      if (out.labels[p] >= 0) continue;
      const int x = static_cast<int>(p % static_cast<std::size_t>(w));
      const int y = static_cast<int>(p / static_cast<std::size_t>(w));
      for (std::size_t k = 0; k < centers.size(); ++k) {
        const double d = distance(centers[k], p, x, y);
        if (d < best[p]) {
          best[p] = d;
          out.labels[p] = static_cast<std::int32_t>(k);
        }
      }
    }
    std::vector<Center> sums(centers.size(), Center{0, 0, 0, 0, 0});
    std::vector<std::size_t> counts(centers.size(), 0);
    for (std::size_t p = 0; p < n; ++p) {
      const auto k = static_cast<std::size_t>(out.labels[p]);
      const auto& v = lab.pixels[p];
      sums[k].l += v[0];
      sums[k].a += v[1];
      sums[k].b += v[2];
      sums[k].x += static_cast<double>(p % static_cast<std::size_t>(w));
      sums[k].y += static_cast<double>(p / static_cast<std::size_t>(w));
      ++counts[k];
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (counts[k] == 0) continue;
      const double inv = 1.0 / static_cast<double>(counts[k]);
      centers[k] = {sums[k].l * inv, sums[k].a * inv, sums[k].b * inv, sums[k].x * inv, sums[k].y * inv};
    }
  }

  densify_labels(out);
  const std::size_t min_fragment = std::max<std::size_t>(1, n / (4 * static_cast<std::size_t>(params.n_segments)));
  enforce_connectivity(out, min_fragment, false);
  return out;
}

// ---------------------------------------------------------------------------
// Felzenszwalb-Huttenlocher

namespace {

int reflect_index(int i, int size) {
  if (size == 1) return 0;
  // Symmetric reflection: ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
  const int period = 2 * size;
  i %= period;
  if (i < 0) i += period;
  return i < size ? i : period - 1 - i;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

/// Per-channel separable Gaussian blur; returns interleaved RGB doubles.
std::vector<double> smooth_channels(const RgbImage& image, double sigma) {
  const int w = image.width(), h = image.height();
  std::vector<double> src(image.bytes().begin(), image.bytes().end());
  if (sigma <= 0) return src;
  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  std::vector<double> tmp(src.size()), dst(src.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0;
        for (int k = -radius; k <= radius; ++k)
          acc += kernel[static_cast<std::size_t>(k + radius)] *
                 src[3 * (static_cast<std::size_t>(y) * w + reflect_index(x + k, w)) + c];
        tmp[3 * (static_cast<std::size_t>(y) * w + x) + c] = acc;
      }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0;
        for (int k = -radius; k <= radius; ++k)
          acc += kernel[static_cast<std::size_t>(k + radius)] *
                 tmp[3 * (static_cast<std::size_t>(reflect_index(y + k, h)) * w + x) + c];
        dst[3 * (static_cast<std::size_t>(y) * w + x) + c] = acc;
      }
  return dst;
}

struct Edge {
  double weight;
  std::uint32_t a, b;  // a < b
};

}  // namespace

SuperpixelMap felzenszwalb(const RgbImage& image, const FelzenszwalbParams& params) {
  validate(params);
  const int w = image.width(), h = image.height();
  const std::size_t n = image.pixel_count();
  const auto px = smooth_channels(image, params.sigma);

  std::vector<Edge> edges;
  edges.reserve(4 * n);
  auto add_edge = [&](int x0, int y0, int x1, int y1) {
    const std::size_t p = static_cast<std::size_t>(y0) * w + x0;
    const std::size_t q = static_cast<std::size_t>(y1) * w + x1;
    double d2 = 0;
    for (int c = 0; c < 3; ++c) {
      const double d = px[3 * p + c] - px[3 * q + c];
      d2 += d * d;
    }
    edges.push_back({std::sqrt(d2), static_cast<std::uint32_t>(std::min(p, q)),
                     static_cast<std::uint32_t>(std::max(p, q))});
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w) add_edge(x, y, x + 1, y);
      if (y + 1 < h) add_edge(x, y, x, y + 1);
      if (x + 1 < w && y + 1 < h) add_edge(x, y, x + 1, y + 1);
      if (x + 1 < w && y > 0) add_edge(x, y, x + 1, y - 1);
    }
  std::sort(edges.begin(), edges.end(), [](const Edge& l, const Edge& r) {
    return std::tie(l.weight, l.a, l.b) < std::tie(r.weight, r.a, r.b);
  });

  DisjointSets sets(n);
  std::vector<std::uint32_t> size(n, 1);
  std::vector<double> threshold(n, params.scale);  // Int(C) + k/|C| with Int = 0
  for (const Edge& e : edges) {
    std::uint32_t a = sets.find(e.a), b = sets.find(e.b);
    if (a == b) continue;
    if (e.weight <= threshold[a] && e.weight <= threshold[b]) {
      if (size[a] < size[b]) std::swap(a, b);
      sets.parent[b] = a;
      size[a] += size[b];
      // Edges arrive in nondecreasing order, so e.weight is the new maximum.
      threshold[a] = e.weight + params.scale / size[a];
    }
  }
  const auto min_size = static_cast<std::uint32_t>(params.min_size);
  for (const Edge& e : edges) {
    std::uint32_t a = sets.find(e.a), b = sets.find(e.b);
    if (a == b) continue;
    if (size[a] < min_size || size[b] < min_size) {
      if (size[a] < size[b]) std::swap(a, b);
      sets.parent[b] = a;
      size[a] += size[b];
    }
  }

  SuperpixelMap out{w, h, std::vector<std::int32_t>(n), 0};
  for (std::size_t p = 0; p < n; ++p) out.labels[p] = static_cast<std::int32_t>(sets.find(static_cast<std::uint32_t>(p)));
  densify_labels(out);
  // Components grown over diagonal edges may be only 8-connected.
  enforce_connectivity(out, 1, true);
  return out;
}

// ---------------------------------------------------------------------------
// Quickshift

SuperpixelMap quickshift(const RgbImage& image, const QuickshiftParams& params) {
  validate(params);
  const int w = image.width(), h = image.height();
  const std::size_t n = image.pixel_count();
  const LabImage lab = rgb_to_lab(image);
  std::vector<std::array<double, 3>> color(n);
  for (std::size_t p = 0; p < n; ++p)
    for (int c = 0; c < 3; ++c) color[p][static_cast<std::size_t>(c)] = params.ratio * lab.pixels[p][static_cast<std::size_t>(c)];
  auto color_dist2 = [&](std::size_t p, std::size_t q) {
    const double d0 = color[p][0] - color[q][0];
    const double d1 = color[p][1] - color[q][1];
    const double d2 = color[p][2] - color[q][2];
    return d0 * d0 + d1 * d1 + d2 * d2;
  };

  const int window = static_cast<int>(std::ceil(3.0 * params.kernel_size));
  const double inv_two_var = 1.0 / (2.0 * params.kernel_size * params.kernel_size);
  std::vector<double> density(n, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      double acc = 0;
      for (int yy = std::max(0, y - window); yy <= std::min(h - 1, y + window); ++yy)
        for (int xx = std::max(0, x - window); xx <= std::min(w - 1, x + window); ++xx) {
          const std::size_t q = static_cast<std::size_t>(yy) * w + xx;
          const double dx = xx - x, dy = yy - y;
          acc += std::exp(-(color_dist2(p, q) + dx * dx + dy * dy) * inv_two_var);
        }
      density[p] = acc;
    }

  // Link to the nearest strictly denser pixel within max_dist; scanning in
  // row-major order with a strict comparison keeps the lowest index on ties.
  const int reach = static_cast<int>(std::floor(params.max_dist));
  const double max_d2 = params.max_dist * params.max_dist;
  std::vector<std::uint32_t> parent(n);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      parent[p] = static_cast<std::uint32_t>(p);
      double best = std::numeric_limits<double>::infinity();
      for (int yy = std::max(0, y - reach); yy <= std::min(h - 1, y + reach); ++yy)
        for (int xx = std::max(0, x - reach); xx <= std::min(w - 1, x + reach); ++xx) {
          const std::size_t q = static_cast<std::size_t>(yy) * w + xx;
          if (!(density[q] > density[p])) continue;
          const double dx = xx - x, dy = yy - y;
          const double d2 = color_dist2(p, q) + dx * dx + dy * dy;
          if (d2 <= max_d2 && d2 < best) {
            best = d2;
            parent[p] = static_cast<std::uint32_t>(q);
          }
        }
    }

  SuperpixelMap out{w, h, std::vector<std::int32_t>(n), 0};
  for (std::size_t p = 0; p < n; ++p) {
    std::uint32_t r = static_cast<std::uint32_t>(p);
    while (parent[r] != r) r = parent[r];
    out.labels[p] = static_cast<std::int32_t>(r);
  }
  out.num_segments = static_cast<int>(n);
  // A tree may link across a gap of up to max_dist; split such trees into
  // their 4-connected pieces without merging anything.
  enforce_connectivity(out, 1, false);
  return out;
}

// ---------------------------------------------------------------------------
// PGM label images

std::vector<std::uint8_t> write_label_pgm(const SuperpixelMap& spmap) {
  const bool wide = spmap.num_segments > 256;
  const std::string header = "P5\n" + std::to_string(spmap.width) + " " + std::to_string(spmap.height) + "\n" +
                             (wide ? "65535" : "255") + "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (auto l : spmap.labels) {
    if (wide) out.push_back(static_cast<std::uint8_t>((l >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>(l & 0xff));
  }
  return out;
}

SuperpixelMap read_label_pgm(std::span<const std::uint8_t> bytes) {
  auto fail = [] { return Error(ErrorCode::UnsupportedFormat, "not a P5 label image"); };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw fail();
  std::size_t pos = 2;
  auto number = [&]() {
    while (pos < bytes.size() && (std::isspace(bytes[pos]) || bytes[pos] == '#')) {
      if (bytes[pos] == '#')
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      else
        ++pos;
    }
    long v = 0;
    std::size_t digits = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos]) && digits < 9) {
      v = v * 10 + (bytes[pos++] - '0');
      ++digits;
    }
    if (digits == 0) throw fail();
    return v;
  };
  const long w = number(), h = number(), maxval = number();
  if (w < 1 || h < 1 || (maxval != 255 && maxval != 65535)) throw fail();
  ++pos;
  const std::size_t bpp = maxval > 255 ? 2 : 1;
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (pos > bytes.size() || bytes.size() - pos < n * bpp) throw Error(ErrorCode::TruncatedData, "label image truncated");
  SuperpixelMap out{static_cast<int>(w), static_cast<int>(h), std::vector<std::int32_t>(n), 0};
  std::int32_t max_label = -1;
  for (std::size_t i = 0; i < n; ++i) {
    const std::int32_t v = bpp == 2 ? (bytes[pos + 2 * i] << 8) | bytes[pos + 2 * i + 1] : bytes[pos + i];
    out.labels[i] = v;
    max_label = std::max(max_label, v);
  }
  out.num_segments = max_label + 1;
  return out;
}

}  // namespace limevis
