#include "serialize.hpp"

#include <cstdio>

#include "error.hpp"

namespace limevis {

using nlohmann::json;

json to_json(const SegmentationParams& params) {
  if (const auto* p = std::get_if<SlicParams>(&params))
    return {{"algorithm", "slic"}, {"n_segments", p->n_segments}, {"compactness", p->compactness}, {"max_iter", p->max_iter}};
  if (const auto* f = std::get_if<FelzenszwalbParams>(&params))
    return {{"algorithm", "felzenszwalb"}, {"scale", f->scale}, {"sigma", f->sigma}, {"min_size", f->min_size}};
  const auto& q = std::get<QuickshiftParams>(params);
  return {{"algorithm", "quickshift"}, {"ratio", q.ratio}, {"kernel_size", q.kernel_size}, {"max_dist", q.max_dist}};
}

namespace {

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::InvalidParams, std::string("bad value for '") + key + "'");
  }
}

}  // namespace

SegmentationParams segmentation_from_json(const json& j) {
  if (j.is_string()) return segmentation_from_name(j.get<std::string>());
  if (!j.is_object() || !j.contains("algorithm") || !j["algorithm"].is_string())
    throw Error(ErrorCode::InvalidParams, "segmentation must be a name or an object with 'algorithm'");
  SegmentationParams params = segmentation_from_name(j["algorithm"].get<std::string>());
  if (auto* p = std::get_if<SlicParams>(&params)) {
    read_opt(j, "n_segments", p->n_segments);
    read_opt(j, "compactness", p->compactness);
    read_opt(j, "max_iter", p->max_iter);
  } else if (auto* f = std::get_if<FelzenszwalbParams>(&params)) {
    read_opt(j, "scale", f->scale);
    read_opt(j, "sigma", f->sigma);
    read_opt(j, "min_size", f->min_size);
  } else {
    auto& q = std::get<QuickshiftParams>(params);
    read_opt(j, "ratio", q.ratio);
    read_opt(j, "kernel_size", q.kernel_size);
    read_opt(j, "max_dist", q.max_dist);
  }
  validate(params);
  return params;
}

json to_json(const ExplainConfig& config) {
  json hide;
  if (const auto* rgb = std::get_if<Rgb>(&config.hide_color))
    hide = json::array({rgb->r, rgb->g, rgb->b});
  else
    hide = "mean";
  return {{"segmentation", to_json(config.segmentation)},
          {"num_samples", config.num_samples},
          {"kernel_width", config.kernel_width},
          {"ridge_lambda", config.ridge_lambda},
          {"positive_only", config.positive_only},
          {"num_features", config.num_features},
          {"hide_rest", config.hide_rest},
          {"hide_color", hide},
          {"seed", config.seed}};
}

ExplainConfig config_from_json(const json& j, ExplainConfig base) {
  if (j.is_null()) return base;
  if (!j.is_object()) throw Error(ErrorCode::InvalidParams, "config must be an object");
  if (j.contains("segmentation")) base.segmentation = segmentation_from_json(j["segmentation"]);
  read_opt(j, "num_samples", base.num_samples);
  read_opt(j, "kernel_width", base.kernel_width);
  read_opt(j, "ridge_lambda", base.ridge_lambda);
  read_opt(j, "positive_only", base.positive_only);
  read_opt(j, "num_features", base.num_features);
  read_opt(j, "hide_rest", base.hide_rest);
  read_opt(j, "seed", base.seed);
  if (j.contains("hide_color")) {
    const auto& h = j["hide_color"];
    if (h.is_string() && h.get<std::string>() == "mean") {
      base.hide_color = MeanFill{};
    } else if (h.is_array() && h.size() == 3 && std::all_of(h.begin(), h.end(), [](const json& v) {
                 return v.is_number_integer() && v.get<int>() >= 0 && v.get<int>() <= 255;
               })) {
      base.hide_color = Rgb{h[0].get<std::uint8_t>(), h[1].get<std::uint8_t>(), h[2].get<std::uint8_t>()};
    } else {
      throw Error(ErrorCode::InvalidParams, "hide_color must be \"mean\" or [r, g, b]");
    }
  }
  validate(base);
  return base;
}

json to_json(const Explanation& e, const ExplainConfig& config) {
  return {{"target_class", e.target_class},
          {"intercept", e.intercept},
          {"weights", e.weights},
          {"selected", e.selected},
          {"local_fit_r2", e.local_fit_r2},
          {"original_probs", e.original_probs.probs},
          {"num_superpixels", e.num_superpixels},
          {"config_echo", to_json(config)}};
}

json to_json(const SuperpixelMap& spmap) {
  return {{"width", spmap.width}, {"height", spmap.height}, {"labels", spmap.labels}, {"num_segments", spmap.num_segments}};
}

SuperpixelMap spmap_from_json(const json& j) {
  try {
    SuperpixelMap s{j.at("width").get<int>(), j.at("height").get<int>(), j.at("labels").get<std::vector<std::int32_t>>(),
                    j.at("num_segments").get<int>()};
    if (s.labels.size() != static_cast<std::size_t>(s.width) * static_cast<std::size_t>(s.height))
      throw Error(ErrorCode::DimensionMismatch, "label count does not match dimensions");
    return s;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::MalformedFile, std::string("bad superpixel map JSON: ") + ex.what());
  }
}

std::string embedding_csv(const Session& session) {
  std::string out = "index,x,y,correct\n";
  const auto& coords = session.embedding().coords;
  char buf[128];
  for (std::size_t i = 0; i < session.entries().size(); ++i) {
    const auto& e = session.entries()[i];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%d\n", e.image_id, coords[i][0], coords[i][1], e.correct ? 1 : 0);
    out += buf;
  }
  return out;
}

json summary_json(const Session& session, const LabeledDataset& dataset) {
  const std::size_t n = session.entries().size();
  const std::size_t red = session.incorrect_count();
  return {{"category", dataset.category_names[static_cast<std::size_t>(session.category())]},
          {"category_index", session.category()},
          {"source", dataset.source},
          {"images", n},
          {"correct", n - red},
          {"incorrect", red},
          {"blue", n - red},
          {"red", red},
          {"accuracy", n == 0 ? 0.0 : static_cast<double>(n - red) / static_cast<double>(n)},
          {"config", to_json(session.config())}};
}

}  // namespace limevis
