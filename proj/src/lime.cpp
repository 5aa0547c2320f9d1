#include "lime.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "error.hpp"
#include "rng.hpp"

namespace limevis {

void validate(const ExplainConfig& config) {
  validate(config.segmentation);
  if (config.num_samples < 2) throw Error(ErrorCode::InvalidParams, "num_samples must be >= 2");
  if (config.num_features < 1) throw Error(ErrorCode::InvalidParams, "num_features must be >= 1");
  if (!(config.kernel_width > 0)) throw Error(ErrorCode::InvalidParams, "kernel_width must be > 0");
  if (!(config.ridge_lambda >= 0)) throw Error(ErrorCode::InvalidParams, "ridge_lambda must be >= 0");
}

MaskMatrix sample_masks(std::size_t num_samples, std::size_t num_superpixels, std::uint64_t seed) {
  if (num_samples < 2 || num_superpixels < 1)
    throw Error(ErrorCode::InvalidParams, "sample_masks needs num_samples >= 2 and K >= 1");
  MaskMatrix masks(num_samples, num_superpixels);
  for (std::size_t r = 1; r < num_samples; ++r) {
    const CounterRng rng(seed, r);
    auto row = masks.row(r);
    for (std::size_t k = 0; k < num_superpixels; ++k) row[k] = static_cast<std::uint8_t>(rng.at(k) >> 63);
  }
  return masks;
}

namespace {

void check_dimensions(const RgbImage& image, const SuperpixelMap& spmap) {
  if (image.width() != spmap.width || image.height() != spmap.height || spmap.labels.size() != image.pixel_count())
    throw Error(ErrorCode::DimensionMismatch, "superpixel map does not match image dimensions");
}

}  // namespace

std::vector<Rgb> segment_means(const RgbImage& image, const SuperpixelMap& spmap) {
  check_dimensions(image, spmap);
  const auto k = static_cast<std::size_t>(spmap.num_segments);
  std::vector<std::array<double, 3>> sums(k, {0, 0, 0});
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t p = 0; p < image.pixel_count(); ++p) {
    const auto s = static_cast<std::size_t>(spmap.labels[p]);
    const Rgb c = image.pixel(p);
    sums[s][0] += c.r;
    sums[s][1] += c.g;
    sums[s][2] += c.b;
    ++counts[s];
  }
  std::vector<Rgb> means(k);
  for (std::size_t s = 0; s < k; ++s) {
    if (counts[s] == 0) continue;
    const double n = static_cast<double>(counts[s]);
    means[s] = {quantize(sums[s][0] / n), quantize(sums[s][1] / n), quantize(sums[s][2] / n)};
  }
  return means;
}

namespace {

/// Fill color per segment for the given hide mode.
std::vector<Rgb> fill_colors(const RgbImage& image, const SuperpixelMap& spmap, const HideColor& hide_color) {
  if (const auto* fixed = std::get_if<Rgb>(&hide_color))
    return std::vector<Rgb>(static_cast<std::size_t>(spmap.num_segments), *fixed);
  return segment_means(image, spmap);
}

RgbImage apply_mask_with_fill(const RgbImage& image, const SuperpixelMap& spmap, std::span<const std::uint8_t> mask,
                              std::span<const Rgb> fill) {
  RgbImage out = image;
  for (std::size_t p = 0; p < image.pixel_count(); ++p) {
    const auto s = static_cast<std::size_t>(spmap.labels[p]);
    if (!mask[s]) out.set_pixel(p, fill[s]);
  }
  return out;
}

}  // namespace

RgbImage apply_mask(const RgbImage& image, const SuperpixelMap& spmap, std::span<const std::uint8_t> mask,
                    const HideColor& hide_color) {
  check_dimensions(image, spmap);
  if (mask.size() != static_cast<std::size_t>(spmap.num_segments))
    throw Error(ErrorCode::DimensionMismatch, "mask length differs from the number of superpixels");
  const auto fill = fill_colors(image, spmap, hide_color);
  return apply_mask_with_fill(image, spmap, mask, fill);
}

double kernel_weight(std::span<const std::uint8_t> mask, double kernel_width) {
  const double k = static_cast<double>(mask.size());
  const double visible = static_cast<double>(std::count_if(mask.begin(), mask.end(), [](auto b) { return b != 0; }));
  const double d = visible == 0 ? 1.0 : 1.0 - visible / std::sqrt(k * visible);
  return std::exp(-(d * d) / (kernel_width * kernel_width));
}

// ---------------------------------------------------------------------------
// Weighted ridge surrogate

RidgeFit fit_weighted_ridge(const MaskMatrix& masks, std::span<const double> responses,
                            std::span<const double> sample_weights, double ridge_lambda) {
  const std::size_t n = masks.rows();
  const std::size_t k = masks.cols();
  if (responses.size() != n || sample_weights.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "responses and weights must have one entry per mask row");
  if (!(ridge_lambda >= 0)) throw Error(ErrorCode::InvalidParams, "ridge_lambda must be >= 0");
  double total_w = 0;
  for (const double w : sample_weights) {
    if (!(w >= 0)) throw Error(ErrorCode::InvalidParams, "sample weights must be >= 0");
    total_w += w;
  }
  if (!(total_w > 0)) throw Error(ErrorCode::InvalidParams, "sample weights are all zero");

  // Responses are shifted by y[0] so constant responses center to exact zeros.
  const double shift = responses[0];
  std::vector<double> zbar(k, 0.0);
  double ybar = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = sample_weights[i];
    ybar += w * (responses[i] - shift);
    for (std::size_t j = 0; j < k; ++j) zbar[j] += w * masks(i, j);
  }
  ybar /= total_w;
  for (auto& z : zbar) z /= total_w;

  // Normal equations of the weighted-centered system: (Zc' W Zc + lambda I) b = Zc' W yc.
  std::vector<double> a(k * k, 0.0), rhs(k, 0.0), zc(k);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = sample_weights[i];
    if (w == 0) continue;
    for (std::size_t j = 0; j < k; ++j) zc[j] = masks(i, j) - zbar[j];
    const double yc = responses[i] - shift - ybar;
    for (std::size_t j = 0; j < k; ++j) {
      const double wz = w * zc[j];
      rhs[j] += wz * yc;
      double* arow = a.data() + j * k;
      for (std::size_t l = 0; l <= j; ++l) arow[l] += wz * zc[l];
    }
  }
  double max_diag = 0;
  for (std::size_t j = 0; j < k; ++j) {
    a[j * k + j] += ridge_lambda;
    max_diag = std::max(max_diag, a[j * k + j]);
  }

  // In-place Cholesky on the lower triangle.
  const double pivot_floor = ridge_lambda > 0 ? 0.0 : 1e-12 * std::max(max_diag, 1e-300);
  for (std::size_t j = 0; j < k; ++j) {
    double d = a[j * k + j];
    for (std::size_t l = 0; l < j; ++l) d -= a[j * k + l] * a[j * k + l];
    if (!(d > pivot_floor)) throw Error(ErrorCode::SingularSystem, "surrogate normal equations are singular");
    const double root = std::sqrt(d);
    a[j * k + j] = root;
    for (std::size_t i = j + 1; i < k; ++i) {
      double s = a[i * k + j];
      for (std::size_t l = 0; l < j; ++l) s -= a[i * k + l] * a[j * k + l];
      a[i * k + j] = s / root;
    }
  }
  std::vector<double> beta(rhs);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t l = 0; l < i; ++l) beta[i] -= a[i * k + l] * beta[l];
    beta[i] /= a[i * k + i];
  }
  for (std::size_t i = k; i-- > 0;) {
    for (std::size_t l = i + 1; l < k; ++l) beta[i] -= a[l * k + i] * beta[l];
    beta[i] /= a[i * k + i];
  }

  RidgeFit fit;
  fit.intercept = shift + ybar - std::inner_product(beta.begin(), beta.end(), zbar.begin(), 0.0);
  double sse = 0, sst = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double pred = fit.intercept;
    for (std::size_t j = 0; j < k; ++j) pred += beta[j] * masks(i, j);
    const double r = responses[i] - pred;
    const double t = responses[i] - shift - ybar;
    sse += sample_weights[i] * r * r;
    sst += sample_weights[i] * t * t;
  }
  fit.weighted_r2 = sst > 0 ? 1.0 - sse / sst : 1.0;
  fit.coefficients = std::move(beta);
  return fit;
}

std::vector<int> select_superpixels(std::span<const double> coefficients, int num_features, bool positive_only) {
  if (num_features < 1) throw Error(ErrorCode::InvalidParams, "num_features must be >= 1");
  std::vector<int> ids;
  for (std::size_t i = 0; i < coefficients.size(); ++i)
    if (!positive_only || coefficients[i] > 0) ids.push_back(static_cast<int>(i));
  auto score = [&](int i) {
    const double c = coefficients[static_cast<std::size_t>(i)];
    return positive_only ? c : std::abs(c);
  };
  std::stable_sort(ids.begin(), ids.end(), [&](int l, int r) { return score(l) > score(r); });
  if (ids.size() > static_cast<std::size_t>(num_features)) ids.resize(static_cast<std::size_t>(num_features));
  return ids;
}

RgbImage render_explanation(const RgbImage& image, const SuperpixelMap& spmap, const Explanation& explanation,
                            const ExplainConfig& config) {
  check_dimensions(image, spmap);
  if (explanation.num_superpixels != spmap.num_segments)
    throw Error(ErrorCode::DimensionMismatch, "explanation does not match the superpixel map");
  std::vector<std::uint8_t> chosen(static_cast<std::size_t>(spmap.num_segments), 0);
  for (const int s : explanation.selected) chosen[static_cast<std::size_t>(s)] = 1;

  if (config.hide_rest) return apply_mask(image, spmap, chosen, config.hide_color);

  RgbImage out = image;
  const auto edge = boundary_mask(spmap);
  for (std::size_t p = 0; p < image.pixel_count(); ++p) {
    const auto s = static_cast<std::size_t>(spmap.labels[p]);
    if (!edge[p] || !chosen[s]) continue;
    Rgb color = kOutlineNeutral;
    if (!config.positive_only) color = explanation.weights[s] < 0 ? kOutlineNegative : kOutlinePositive;
    out.set_pixel(p, color);
  }
  return out;
}

ExplainResult explain(const RgbImage& image, Predictor& predictor, const ExplainConfig& config) {
  validate(config);
  ExplainResult result;
  result.spmap = segment(image, config.segmentation);
  const SuperpixelMap& spmap = result.spmap;
  const auto k = static_cast<std::size_t>(spmap.num_segments);
  const auto n = static_cast<std::size_t>(config.num_samples);

  const MaskMatrix masks = sample_masks(n, k, config.seed);
  const auto fill = fill_colors(image, spmap, config.hide_color);

  constexpr std::size_t kChunk = 64;
  std::vector<ClassProbabilities> probs;
  probs.reserve(n);
  std::vector<RgbImage> batch;
  for (std::size_t start = 0; start < n; start += kChunk) {
    batch.clear();
    for (std::size_t r = start; r < std::min(n, start + kChunk); ++r)
      batch.push_back(apply_mask_with_fill(image, spmap, masks.row(r), fill));
    auto out = predictor.predict_batch(batch);
    if (out.size() != batch.size()) throw Error(ErrorCode::ExternalPredictorFailure, "predictor returned a short batch");
    for (auto& p : out) probs.push_back(std::move(p));
  }

  Explanation& ex = result.explanation;
  ex.original_probs = probs.front();
  ex.target_class = ex.original_probs.argmax();
  ex.num_superpixels = spmap.num_segments;

  std::vector<double> responses(n), weights(n);
  for (std::size_t r = 0; r < n; ++r) {
    responses[r] = probs[r][static_cast<std::size_t>(ex.target_class)];
    weights[r] = kernel_weight(masks.row(r), config.kernel_width);
  }
  RidgeFit fit = fit_weighted_ridge(masks, responses, weights, config.ridge_lambda);
  ex.weights = std::move(fit.coefficients);
  ex.intercept = fit.intercept;
  ex.local_fit_r2 = fit.weighted_r2;
  ex.selected = select_superpixels(ex.weights, config.num_features, config.positive_only);
  result.rendered = render_explanation(image, spmap, ex, config);
  return result;
}

}  // namespace limevis
