#include "embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include <Eigen/Dense>

#include "error.hpp"
#include "rng.hpp"

namespace limevis {

// ---------------------------------------------------------------------------
// Builtin descriptor

FeatureVector extract_features(const RgbImage& image) {
  FeatureVector f;
  f.reserve(kFeatureDim);
  const int w = image.width(), h = image.height();
  const std::size_t n = image.pixel_count();

  std::array<std::array<double, kColorBins>, 3> hist{};
  std::vector<double> gray(n);
  for (std::size_t p = 0; p < n; ++p) {
    const Rgb c = image.pixel(p);
    ++hist[0][c.r >> 5];
    ++hist[1][c.g >> 5];
    ++hist[2][c.b >> 5];
    gray[p] = 0.299 * c.r + 0.587 * c.g + 0.114 * c.b;
  }
  for (const auto& channel : hist)
    for (const double v : channel) f.push_back(v / static_cast<double>(n));

  const auto xs = bilinear_taps(w, kThumbSide);
  const auto ys = bilinear_taps(h, kThumbSide);
  for (const auto& ty : ys)
    for (const auto& tx : xs) {
      auto g = [&](int x, int y) { return gray[static_cast<std::size_t>(y) * w + x]; };
      const double top = g(tx.i0, ty.i0) * (1 - tx.w1) + g(tx.i1, ty.i0) * tx.w1;
      const double bot = g(tx.i0, ty.i1) * (1 - tx.w1) + g(tx.i1, ty.i1) * tx.w1;
      f.push_back((top * (1 - ty.w1) + bot * ty.w1) / 255.0);
    }

  std::array<double, kOrientationBins> orient{};
  double mass = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto g = [&](int xx, int yy) {
        return gray[static_cast<std::size_t>(std::clamp(yy, 0, h - 1)) * w + std::clamp(xx, 0, w - 1)];
      };
      const double gx = 0.5 * (g(x + 1, y) - g(x - 1, y));
      const double gy = 0.5 * (g(x, y + 1) - g(x, y - 1));
      const double mag = std::hypot(gx, gy);
      if (mag == 0) continue;
      double angle = std::atan2(gy, gx);
      if (angle < 0) angle += std::numbers::pi;
      if (angle >= std::numbers::pi) angle -= std::numbers::pi;
      const int bin = std::min(kOrientationBins - 1, static_cast<int>(angle / (std::numbers::pi / kOrientationBins)));
      orient[static_cast<std::size_t>(bin)] += mag;
      mass += mag;
    }
  for (const double v : orient) f.push_back(mass > 0 ? v / mass : 1.0 / kOrientationBins);
  return f;
}

FeatureMatrix standardize(const FeatureMatrix& features) {
  if (features.empty()) return {};
  const std::size_t n = features.size();
  const std::size_t d = features.front().size();
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (const auto& row : features) {
    if (row.size() != d) throw Error(ErrorCode::DimensionMismatch, "feature rows differ in length");
    for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
  }
  for (auto& m : mean) m /= static_cast<double>(n);
  for (const auto& row : features)
    for (std::size_t j = 0; j < d; ++j) sd[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < d; ++j) {
    sd[j] = std::sqrt(sd[j] / static_cast<double>(n));
    if (sd[j] > 1e-12) keep.push_back(j);
  }
  FeatureMatrix out(n, FeatureVector(keep.size()));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < keep.size(); ++c) out[i][c] = (features[i][keep[c]] - mean[keep[c]]) / sd[keep[c]];
  return out;
}

// ---------------------------------------------------------------------------
// Pair selection

namespace {

double squared_distance(const FeatureVector& a, const FeatureVector& b) {
  double s = 0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

constexpr std::uint64_t kMidNearStream = 0x4d4e;
constexpr std::uint64_t kFurtherStream = 0x4650;

}  // namespace

PhaseWeights phase_weights(int step) {
  if (step < 100) {
    const double t = step / 99.0;  // endpoints inclusive: 1000 at step 0, 3 at step 99
    return {2.0, (1.0 - t) * 1000.0 + t * 3.0, 1.0};
  }
  if (step < 200) return {3.0, 3.0, 1.0};
  return {1.0, 0.0, 1.0};
}

int mid_near_count(const EmbeddingConfig& config) {
  return static_cast<int>(std::lround(config.mid_near_ratio * config.n_neighbors));
}

int further_count(const EmbeddingConfig& config) {
  return static_cast<int>(std::lround(config.far_pair_ratio * config.n_neighbors));
}

PairList select_near_pairs(const FeatureMatrix& features, int n_neighbors) {
  const int n = static_cast<int>(features.size());
  if (n_neighbors < 1) throw Error(ErrorCode::InvalidParams, "n_neighbors must be >= 1");
  if (n <= n_neighbors) throw Error(ErrorCode::TooFewPoints, "need more points than n_neighbors");
  PairList pairs;
  pairs.reserve(static_cast<std::size_t>(n) * n_neighbors);
  std::vector<std::pair<double, int>> cand;
  for (int i = 0; i < n; ++i) {
    cand.clear();
    for (int j = 0; j < n; ++j)
      if (j != i) cand.emplace_back(squared_distance(features[static_cast<std::size_t>(i)], features[static_cast<std::size_t>(j)]), j);
    std::partial_sort(cand.begin(), cand.begin() + n_neighbors, cand.end());
    for (int k = 0; k < n_neighbors; ++k) pairs.emplace_back(i, cand[static_cast<std::size_t>(k)].second);
  }
  return pairs;
}

PairList sample_mid_near_pairs(const FeatureMatrix& features, int count_per_point, std::uint64_t seed) {
  const int n = static_cast<int>(features.size());
  if (n < 7) throw Error(ErrorCode::TooFewPoints, "mid-near sampling needs at least 7 points");
  PairList pairs;
  pairs.reserve(static_cast<std::size_t>(n) * std::max(0, count_per_point));
  for (int i = 0; i < n; ++i) {
    CounterRng rng(hash_combine(seed, kMidNearStream), static_cast<std::uint64_t>(i));
    for (int p = 0; p < count_per_point; ++p) {
      std::array<std::pair<double, int>, 6> cand{};
      int drawn = 0;
      while (drawn < 6) {
        const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        if (j == i) continue;
        if (std::any_of(cand.begin(), cand.begin() + drawn, [j](const auto& c) { return c.second == j; })) continue;
        cand[static_cast<std::size_t>(drawn++)] = {
            squared_distance(features[static_cast<std::size_t>(i)], features[static_cast<std::size_t>(j)]), j};
      }
      std::sort(cand.begin(), cand.end());
      pairs.emplace_back(i, cand[1].second);
    }
  }
  return pairs;
}

PairList sample_further_pairs(const FeatureMatrix& features, const PairList& near_pairs, int count_per_point,
                              std::uint64_t seed) {
  const int n = static_cast<int>(features.size());
  if (n < 2) throw Error(ErrorCode::TooFewPoints, "further-pair sampling needs at least 2 points");
  std::vector<std::vector<bool>> excluded(static_cast<std::size_t>(n), std::vector<bool>(static_cast<std::size_t>(n), false));
  for (int i = 0; i < n; ++i) excluded[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = true;
  for (const auto& [a, b] : near_pairs) excluded[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = true;

  PairList pairs;
  for (int i = 0; i < n; ++i) {
    auto taken = excluded[static_cast<std::size_t>(i)];
    const int eligible = static_cast<int>(std::count(taken.begin(), taken.end(), false));
    const int want = std::min(count_per_point, eligible);
    CounterRng rng(hash_combine(seed, kFurtherStream), static_cast<std::uint64_t>(i));
    for (int p = 0; p < want;) {
      const auto j = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n)));
      if (taken[j]) continue;
      taken[j] = true;
      pairs.emplace_back(i, static_cast<int>(j));
      ++p;
    }
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// Objective

namespace {

/// Adds one pair family; `term` maps dt = |yi - yj|^2 + 1 to (value, d value / d dt).
template <typename Term>
double accumulate(std::span<const std::array<double, 2>> y, const PairList& pairs, double weight, Term term,
                  std::vector<std::array<double, 2>>& grad) {
  if (weight == 0) return 0;
  double loss = 0;
  for (const auto& [i, j] : pairs) {
    const auto& a = y[static_cast<std::size_t>(i)];
    const auto& b = y[static_cast<std::size_t>(j)];
    const double dx = a[0] - b[0], dy = a[1] - b[1];
    const double dt = dx * dx + dy * dy + 1.0;
    const auto [value, slope] = term(dt);
    loss += weight * value;
    const double c = 2.0 * weight * slope;
    grad[static_cast<std::size_t>(i)][0] += c * dx;
    grad[static_cast<std::size_t>(i)][1] += c * dy;
    grad[static_cast<std::size_t>(j)][0] -= c * dx;
    grad[static_cast<std::size_t>(j)][1] -= c * dy;
  }
  return loss;
}

}  // namespace

LossAndGrad pacmap_loss_and_grad(std::span<const std::array<double, 2>> coords, const PairList& near,
                                 const PairList& mid_near, const PairList& further, const PhaseWeights& weights) {
  LossAndGrad out;
  out.grad.assign(coords.size(), {0.0, 0.0});
  out.loss += accumulate(coords, near, weights.near,
                         [](double dt) { return std::pair{dt / (10.0 + dt), 10.0 / ((10.0 + dt) * (10.0 + dt))}; },
                         out.grad);
  out.loss += accumulate(
      coords, mid_near, weights.mid_near,
      [](double dt) { return std::pair{dt / (10000.0 + dt), 10000.0 / ((10000.0 + dt) * (10000.0 + dt))}; }, out.grad);
  out.loss += accumulate(coords, further, weights.further,
                         [](double dt) { return std::pair{1.0 / (1.0 + dt), -1.0 / ((1.0 + dt) * (1.0 + dt))}; },
                         out.grad);
  return out;
}

// ---------------------------------------------------------------------------
// Optimization

std::vector<std::array<double, 2>> pca_init(const FeatureMatrix& features) {
  const std::size_t n = features.size();
  std::vector<std::array<double, 2>> coords(n, {0.0, 0.0});
  if (n == 0 || features.front().empty()) return coords;
  const std::size_t d = features.front().size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = features[i][j];
  x.rowwise() -= x.colwise().mean();
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::Index dims = std::min<Eigen::Index>(2, static_cast<Eigen::Index>(d));
  for (Eigen::Index c = 0; c < dims; ++c) {
    // Eigenvalues ascend; the leading components are at the end.
    Eigen::VectorXd v = eig.eigenvectors().col(static_cast<Eigen::Index>(d) - 1 - c);
    Eigen::Index lead = 0;
    for (Eigen::Index j = 1; j < v.size(); ++j)
      if (std::abs(v(j)) > std::abs(v(lead))) lead = j;
    if (v(lead) < 0) v = -v;
    const Eigen::VectorXd scores = x * v;
    for (std::size_t i = 0; i < n; ++i) coords[i][static_cast<std::size_t>(c)] = 0.01 * scores(static_cast<Eigen::Index>(i));
  }
  return coords;
}

Embedding2D pacmap_embed(const FeatureMatrix& features, const EmbeddingConfig& config) {
  const int n = static_cast<int>(features.size());
  if (config.n_neighbors < 1 || !(config.mid_near_ratio > 0) || !(config.far_pair_ratio > 0) || config.iterations < 1)
    throw Error(ErrorCode::InvalidParams, "invalid embedding configuration");
  if (n < std::max(config.n_neighbors + 1, 7))
    throw Error(ErrorCode::TooFewPoints, "embedding needs at least max(n_neighbors + 1, 7) points");

  Embedding2D out;
  out.near_pairs = select_near_pairs(features, config.n_neighbors);
  out.mid_near_pairs = sample_mid_near_pairs(features, mid_near_count(config), config.seed);
  out.further_pairs = sample_further_pairs(features, out.near_pairs, further_count(config), config.seed);
  out.coords = pca_init(features);

  const PhaseWeights final_phase = phase_weights(config.iterations + 200);
  out.initial_loss =
      pacmap_loss_and_grad(out.coords, out.near_pairs, out.mid_near_pairs, out.further_pairs, final_phase).loss;

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-7;
  std::vector<std::array<double, 2>> m(out.coords.size(), {0.0, 0.0}), v(out.coords.size(), {0.0, 0.0});
  double beta1_t = 1.0, beta2_t = 1.0;
  for (int step = 0; step < config.iterations; ++step) {
    const auto lg = pacmap_loss_and_grad(out.coords, out.near_pairs, out.mid_near_pairs, out.further_pairs,
                                         phase_weights(step));
    beta1_t *= beta1;
    beta2_t *= beta2;
    for (std::size_t i = 0; i < out.coords.size(); ++i)
      for (std::size_t c = 0; c < 2; ++c) {
        const double g = lg.grad[i][c];
        m[i][c] = beta1 * m[i][c] + (1 - beta1) * g;
        v[i][c] = beta2 * v[i][c] + (1 - beta2) * g * g;
        const double mhat = m[i][c] / (1 - beta1_t);
        const double vhat = v[i][c] / (1 - beta2_t);
        out.coords[i][c] -= config.learning_rate * mhat / (std::sqrt(vhat) + eps);
      }
  }
  out.final_loss =
      pacmap_loss_and_grad(out.coords, out.near_pairs, out.mid_near_pairs, out.further_pairs, final_phase).loss;
  return out;
}

}  // namespace limevis
