#pragma once

#include <string>

#include <json.hpp>

#include "lime.hpp"
#include "segmentation.hpp"
#include "session.hpp"

namespace limevis {

nlohmann::json to_json(const SegmentationParams& params);
SegmentationParams segmentation_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ExplainConfig& config);
/// Overlays the keys present in `j` onto `base`. Accepts "segmentation" as an
/// algorithm name or as {"algorithm": ..., <params>}; "hide_color" as "mean"
/// or [r, g, b].
ExplainConfig config_from_json(const nlohmann::json& j, ExplainConfig base = {});

nlohmann::json to_json(const Explanation& explanation, const ExplainConfig& config);
nlohmann::json to_json(const SuperpixelMap& spmap);
SuperpixelMap spmap_from_json(const nlohmann::json& j);

/// `index,x,y,correct` with one row per session entry, index = image id.
std::string embedding_csv(const Session& session);
nlohmann::json summary_json(const Session& session, const LabeledDataset& dataset);

}  // namespace limevis
