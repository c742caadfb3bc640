#pragma once

#include <filesystem>

#include <json.hpp>

#include "jpmbn/factor.hpp"
#include "jpmbn/network.hpp"

namespace jpmbn {

/// Factors with more entries than this are written to a raw binary sidecar
/// (little-endian float64, same row-major order) next to the JSON document.
inline constexpr std::size_t kInlineValueLimit = 1'000'000;

/// {"scope": [...], "cardinalities": [...], "values": [...]}
nlohmann::json factor_to_json(const Factor& f);
Factor factor_from_json(const nlohmann::json& j);

/// {"variables": [{"id", "labels"}], "parents": {id: [...]}, "cpts": {id: [...]}}
nlohmann::json network_to_json(const DiscreteNetwork& net);
DiscreteNetwork network_from_json(const nlohmann::json& j);

/// Writes a factor document; large tables spill to `<stem>.bin` beside it.
void save_factor(const Factor& f, const std::filesystem::path& path);
Factor load_factor(const std::filesystem::path& path);

void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace jpmbn
