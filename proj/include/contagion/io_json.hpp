#pragma once

#include "contagion/filter.hpp"
#include "contagion/hawkes.hpp"
#include "contagion/market.hpp"
#include "contagion/value.hpp"

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>

namespace contagion {

using nlohmann::json;

// Config validation failure with the offending field path; the CLI maps this
// to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_path(field) {}
    std::string field_path;
};

json hawkes_to_json(const HawkesParams& p);
HawkesParams hawkes_from_json(const json& j, const std::string& path = "hawkes");

json law_to_json(const JumpLaw& law);
JumpLaw law_from_json(const json& j, const std::string& path);

json market_to_json(const MarketParams& p);
MarketParams market_from_json(const json& j, const std::string& path = "market");

json utility_to_json(const UtilitySpec& u);
UtilitySpec utility_from_json(const json& j, const std::string& path = "utility");

// Full run configuration: hawkes + market (+ utility) under one root object.
struct RunConfig {
    std::optional<HawkesParams> hawkes;
    std::optional<MarketParams> market;
    std::optional<UtilitySpec> utility;
    json raw;
};

RunConfig load_config(const std::string& file_path);

} // namespace contagion
