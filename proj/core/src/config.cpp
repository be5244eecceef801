#include "ragbench/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ragbench/error.hpp"

namespace ragbench {

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& reason) {
  throw Error(ErrorCode::InvalidConfig, field + ": " + reason);
}

}  // namespace

RunConfig validate_run_config(const RunConfig& cfg) {
  if (cfg.chunk_size == 0) invalid("chunk_size", "must be positive");
  if (cfg.chunk_overlap >= cfg.chunk_size)
    invalid("chunk_overlap", "must be smaller than chunk_size");
  if (cfg.similarity_top_k < 1) invalid("similarity_top_k", "must be >= 1");
  if (!std::isfinite(cfg.temperature) || cfg.temperature < 0.0 || cfg.temperature > 1.0)
    invalid("temperature", "must lie in [0, 1]");
  if (cfg.max_tokens < 1) invalid("max_tokens", "must be >= 1");
  if (cfg.parallelism < 1) invalid("parallelism", "must be >= 1");
  return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["chunk_size"] = cfg.chunk_size;
  j["chunk_overlap"] = cfg.chunk_overlap;
  j["similarity_top_k"] = cfg.similarity_top_k;
  j["temperature"] = cfg.temperature;
  j["max_tokens"] = cfg.max_tokens;
  j["embed_endpoint"] = cfg.embed_endpoint;
  j["llm_endpoint"] = cfg.llm_endpoint;
  j["embed_model"] = cfg.embed_model;
  j["llm_model"] = cfg.llm_model;
  j["seed"] = cfg.seed;
  j["parallelism"] = cfg.parallelism;
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");

  static const std::set<std::string> known = {
      "chunk_size",     "chunk_overlap", "similarity_top_k", "temperature",
      "max_tokens",     "embed_endpoint", "llm_endpoint",    "embed_model",
      "llm_model",      "seed",          "parallelism"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key))
      throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
  }

  RunConfig cfg;
  try {
    if (j.contains("chunk_size")) cfg.chunk_size = j["chunk_size"].get<std::size_t>();
    if (j.contains("chunk_overlap")) cfg.chunk_overlap = j["chunk_overlap"].get<std::size_t>();
    if (j.contains("similarity_top_k")) cfg.similarity_top_k = j["similarity_top_k"].get<int>();
    if (j.contains("temperature")) cfg.temperature = j["temperature"].get<double>();
    if (j.contains("max_tokens")) cfg.max_tokens = j["max_tokens"].get<int>();
    if (j.contains("embed_endpoint")) cfg.embed_endpoint = j["embed_endpoint"].get<std::string>();
    if (j.contains("llm_endpoint")) cfg.llm_endpoint = j["llm_endpoint"].get<std::string>();
    if (j.contains("embed_model")) cfg.embed_model = j["embed_model"].get<std::string>();
    if (j.contains("llm_model")) cfg.llm_model = j["llm_model"].get<std::string>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("parallelism")) cfg.parallelism = j["parallelism"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config field type: ") + e.what());
  }
  return validate_run_config(cfg);
}

RunConfig load_run_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return run_config_from_json(ss.str());
}

void save_run_config(const RunConfig& cfg, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write config " + file.string());
  out << run_config_to_json(cfg);
}

}  // namespace ragbench
