#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "uxfb/gbt.hpp"
#include "uxfb/multilabel.hpp"
#include "uxfb/summarize.hpp"
#include "uxfb/textprep.hpp"

namespace uxfb::cfg {

/// Parses the TOML subset used by pipeline configs: [table] and [a.b]
/// headers, bare keys, basic strings, integers, floats, booleans, single-line
/// arrays of those, and # comments. Tables become nested JSON objects.
/// Throws LineError(Config) with the offending line.
nlohmann::json parse_toml(std::string_view text);

struct Paths {
  std::filesystem::path comments;
  std::filesystem::path responses;
  std::filesystem::path taxonomy;     // empty: built-in codebook
  std::filesystem::path vectors;      // external word vectors, used when embedding.mode = "external"
  std::filesystem::path models = "out/model";
  std::filesystem::path reports = "out/reports";
  std::filesystem::path params;       // tuned parameters written by `tune`, read by `train`
  std::filesystem::path audit_log;    // empty: <reports>/audit.jsonl
};

struct StatsSettings {
  double level = 0.95;
  std::size_t replicates = 10000;
  int max_attempts = 100;
};

struct PipelineConfig {
  std::uint64_t seed = 42;
  unsigned jobs = 1;
  std::string period;  // empty: everything

  Paths paths;
  PreprocessConfig preprocess;
  std::string embedding_mode = "subword";  // or "external"
  EmbeddingOptions embedding;
  gbt::Params train;
  bool tune_thresholds = false;
  int threshold_folds = 5;
  ml::ParamGrid grid;
  int folds = 5;
  StatsSettings stats;
  summ::SummaryConfig summary;

  /// Throws Config.
  void validate() const;
};

/// Unknown tables or keys and wrongly typed values raise Config. Relative
/// paths are resolved against `base_dir`.
PipelineConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
/// Reads a config file; relative paths resolve against its directory.
PipelineConfig load_config(const std::filesystem::path& path);

/// Round-trips through parse_config.
std::string to_toml(const PipelineConfig& config);

}  // namespace uxfb::cfg
