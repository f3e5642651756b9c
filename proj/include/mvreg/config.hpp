#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "mvreg/evaluation.hpp"
#include "mvreg/multiview.hpp"

namespace mvreg {

/// Environment variable naming the default config file.
inline constexpr const char* kConfigEnv = "MVREG_CONFIG";

/// Every tunable of a registration session.
struct Config {
    MultiviewConfig session;

    /// Throws InvalidArgument when any module rejects its settings.
    void validate() const;
};

nlohmann::json to_json(const Config& config);

/// Overlays `j` on `base`; keys not present keep their value. Unknown keys
/// and wrongly typed values throw ParseError naming the key. The result is
/// validated.
Config config_from_json(const nlohmann::json& j, const Config& base = {});

/// Applies one "key=value" override, value parsed as JSON (bare words are
/// taken as strings).
Config apply_override(const Config& base, const std::string& assignment);

/// Built-in defaults, then the file at `path` if given, otherwise the file
/// named by MVREG_CONFIG if that is set.
Config load_config(const std::optional<std::filesystem::path>& path);

nlohmann::json to_json(const SessionReport& report, bool include_timings);
nlohmann::json to_json(const ErrorReport& report);

}  // namespace mvreg
