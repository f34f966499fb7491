#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "elicit/data.hpp"
#include "elicit/mf.hpp"
#include "elicit/simulation.hpp"
#include "elicit/tree.hpp"

namespace elicit::config {

struct DatasetConfig {
  // Ratings TSV; when empty the synthetic generator is used.
  std::string path;
  bool has_header = true;
  data::SyntheticConfig synthetic;
  bool synthetic_seed_set = false;  // otherwise follows the run seed
};

struct FilterConfig {
  std::size_t min_user_ratings = 0;
  data::TypeThresholds min_ratings_per_type;
};

// Everything one CLI run needs. Parsed from a JSON document whose keys are
// checked strictly; to_json() echoes a document that parses back to the
// same run.
struct RunConfig {
  std::uint64_t seed = 42;
  DatasetConfig dataset;
  FilterConfig filter;
  sim::SplitParams splits;
  mf::MFHyperparams mf;
  bool mf_seed_set = false;  // otherwise follows the run seed
  tree::TreeConfig tree;
  int entropy_bins = 5;
  double semi_binary_threshold = 50.0;
  int n_iterations = 20;
  std::vector<sim::StrategySpec> strategies;
};

// Throws ConfigError on unknown keys, wrong types or invalid values.
RunConfig parse_config(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);

// Reads a config file, or the config echoed inside a run manifest. A relative
// dataset path is resolved against the file's directory.
RunConfig load_config(const std::filesystem::path& path);

// Overrides the run seed; seeds not set explicitly follow it.
void set_seed(RunConfig& c, std::uint64_t seed);

data::SyntheticConfig effective_synthetic(const RunConfig& c);
std::vector<sim::SimConfig> simulation_variants(const RunConfig& c);

// Loads or generates the dataset, then applies the density filter.
RatingMatrix load_dataset(const RunConfig& c);

}  // namespace elicit::config
