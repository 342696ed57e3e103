#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mcgraph/attention.hpp"
#include "mcgraph/contrastive.hpp"
#include "mcgraph/recommend.hpp"
#include "mcgraph/synthetic.hpp"

namespace mcgraph {

enum class Variant { kFull, kNoGlobalAttention, kNoGlobalAttentionNoCl };

/// "full", "no_global_attention", "no_global_attention_no_cl"
std::string_view variant_name(Variant v);
/// "D-MGAC", "D-MGAC*", "D-MGAC*-"
std::string_view variant_tag(Variant v);
Variant parse_variant(std::string_view name);

struct ExperimentConfig {
  std::string data;  // ratings CSV; empty means the planted synthetic dataset
  std::uint64_t seed = 1;
  int runs = 30;
  int ts_percent = 100;
  Variant variant = Variant::kFull;
  std::size_t criteria = 0;  // first K criteria only; 0 keeps all
  int jobs = 1;

  double test_fraction = kDefaultTestFraction;
  std::uint64_t split_seed = 0;  // fixes the test set across runs
  double rating_min = 1.0;       // raw rating scale, mapped onto [1, 5]
  double rating_max = 5.0;
  std::size_t max_users = 0;     // keep only the first K users; 0 keeps all

  EncoderConfig encoder;
  TrainConfig train;
  PredictorConfig predictor;
  std::size_t knn_neighbors = 100;

  SyntheticConfig synthetic;
  std::uint64_t synthetic_seed = 7;

  /// Encoder and training settings with the variant's removals applied.
  EncoderConfig effective_encoder() const;
  TrainConfig effective_train() const;

  void validate() const;
  bool operator==(const ExperimentConfig& other) const;
};

/// Every configuration key, in serialization order.
std::vector<std::string> config_keys();

/// Sets one key from its text form; unknown keys and bad values throw ConfigError.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const ExperimentConfig& cfg, const std::string& key);

/// Flat `key = value` lines; '#' starts a comment.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Writes every key; parse_config reads it back to an equal config.
std::string serialize_config(const ExperimentConfig& cfg);
std::string config_to_json(const ExperimentConfig& cfg, int indent = -1);

}  // namespace mcgraph
