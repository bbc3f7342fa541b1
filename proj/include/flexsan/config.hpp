#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "flexsan/sim.hpp"

namespace flexsan {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct RootConfig {
  SimConfig sim;
  Algorithm algorithm = Algorithm::Tago;
  std::filesystem::path output_dir = "out";
  std::vector<std::uint64_t> seeds{1};
  bool record_runtime = true;

  void validate() const;
};

nlohmann::json to_json(const SimConfig& config);
nlohmann::json to_json(const RootConfig& config);

/// Strict decode: missing keys keep their defaults, unknown keys throw
/// ConfigError naming the dotted key path. Does not validate ranges.
RootConfig root_config_from_json(const nlohmann::json& doc);

/// Sets `dotted.path=value` on a full config document. The value is parsed as
/// JSON when possible and taken as a string otherwise. Unknown paths throw.
void apply_override(nlohmann::json& doc, std::string_view assignment);

/// Defaults <- file (if any) <- overrides, then validation.
RootConfig load_config(const std::filesystem::path* path, std::span<const std::string> overrides);

/// Same, starting from an in-memory (possibly partial) document.
RootConfig load_config(const nlohmann::json& doc, std::span<const std::string> overrides);

}  // namespace flexsan
