#pragma once

// JSON conversions for the core records. nlohmann/json prints doubles in
// shortest round-trip form, so these are bit-exact.

#include <json.hpp>

#include "mfh/core.hpp"

namespace mfh {

nlohmann::json hurst_to_json(const HurstFunction& h);
HurstFunction hurst_from_json(const nlohmann::json& j);

nlohmann::json disc_to_json(const DiscretizationParams& d);
DiscretizationParams disc_from_json(const nlohmann::json& j);

nlohmann::json meta_to_json(const PathMeta& m);
PathMeta meta_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const EstimatorReport& r);

}  // namespace mfh
