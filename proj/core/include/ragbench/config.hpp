#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace ragbench {

/// Every pipeline knob in one value object. Defaults are the baseline
/// evaluation parameters; endpoints/models stay empty when offline doubles
/// are injected.
struct RunConfig {
  std::size_t chunk_size = 1024;
  std::size_t chunk_overlap = 256;
  int similarity_top_k = 5;
  double temperature = 0.25;
  int max_tokens = 2048;
  std::string embed_endpoint;
  std::string llm_endpoint;
  std::string embed_model;
  std::string llm_model;
  std::uint64_t seed = 0;
  int parallelism = 1;

  bool operator==(const RunConfig&) const = default;
};

/// Returns `cfg` unchanged when all invariants hold, else throws
/// Error(InvalidConfig) naming the offending field. Idempotent.
RunConfig validate_run_config(const RunConfig& cfg);

/// JSON object with exactly the RunConfig field names. Unknown keys are an
/// error so a typo in a benchmark config cannot silently fall back to a
/// default.
std::string run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& file);
void save_run_config(const RunConfig& cfg, const std::filesystem::path& file);

}  // namespace ragbench
