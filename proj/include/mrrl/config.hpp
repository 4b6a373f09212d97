#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrrl/environment.hpp"
#include "mrrl/sac.hpp"

namespace mrrl {

using json = nlohmann::json;

/// Everything needed to reproduce a run. Scenario 4 is the obstacle
/// sensitivity sweep on the scenario-2 course.
struct RunConfig {
  int scenario = 1;
  bool desk_scale = false;
  std::string mode = "train";
  std::vector<std::uint64_t> seeds{1};
  EnvConfig env;
  SacConfig sac;
  std::vector<double> sweep_c{0.25, 2.5, 25.0};
  double eval_window_start = 80.0;

  void validate() const;
  /// Environment settings for training episodes.
  EnvConfig train_env() const;
  /// Environment settings for the fixed-start deterministic evaluation.
  EnvConfig eval_env() const;
};

RunConfig preset(int scenario, bool desk_scale);

json to_json(const RunConfig& cfg);
RunConfig from_json(const json& j);

/// Builds a config from a preset chosen by the document's "scenario" and
/// "desk_scale" keys (or the given fallbacks), then overlays the document.
RunConfig resolve_config(const json& overrides, int scenario, bool desk_scale);
RunConfig load_config(const std::filesystem::path& path, int scenario, bool desk_scale);

/// Serialised form used for hashing: keys sorted, no whitespace.
std::string canonical_dump(const json& j);

/// Git blob SHA-1 of the given text, as 40 hex characters.
std::string content_hash(const std::string& text);

}  // namespace mrrl
