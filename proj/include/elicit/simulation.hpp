#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "elicit/mf.hpp"
#include "elicit/rating_matrix.hpp"
#include "elicit/tree.hpp"

namespace elicit::sim {

enum class StrategyKind {
  Popularity,
  Variance,
  Entropy,
  Helf,
  TreeSingle,
  TreeHybrid,
  PairwiseTree1,
  PairwiseTree2,
  Random,
};

std::string_view to_string(StrategyKind k);
// Throws ConfigError naming every valid strategy.
StrategyKind strategy_from_string(std::string_view name);
const std::vector<std::string>& strategy_names();

bool is_tree(StrategyKind k);
bool is_pairwise(StrategyKind k);

struct StrategySpec {
  StrategyKind kind = StrategyKind::TreeSingle;
  // Curve name in results; defaults to the strategy name.
  std::string label;
  // Empty = the strategy's default (target type for tree_single and random,
  // artists and genres otherwise).
  std::vector<ItemType> candidate_types;
  // Unset = semi-binary for pairwise trees only.
  std::optional<bool> semi_binary;

  std::string display_name() const { return label.empty() ? std::string(to_string(kind)) : label; }
  bool uses_semi_binary() const { return semi_binary.value_or(is_pairwise(kind)); }
  std::vector<ItemType> resolved_candidate_types(ItemType target) const;
};

struct SplitParams {
  double cold_fraction = 0.9;
  int k_per_user = 1;
  int t_per_user = 30;
  ItemType target_type = ItemType::Artist;

  friend bool operator==(const SplitParams&, const SplitParams&) = default;
};

struct SimConfig {
  int n_iterations = 20;
  StrategySpec strategy;
  mf::MFHyperparams mf;
  // mode, pair strategy and candidate types are taken from `strategy`.
  tree::TreeConfig tree;
  SplitParams splits;
  int entropy_bins = 5;
  double semi_binary_threshold = 50.0;
  std::uint64_t seed = 42;
};

void validate(const SimConfig& cfg);

// Tree settings a strategy actually runs with.
tree::TreeConfig effective_tree_config(const SimConfig& cfg);

struct IterationRecord {
  int iteration = 0;
  double rmse = 0.0;
  std::size_t known_size = 0;
  std::size_t queries_issued = 0;
  std::size_t queries_answered = 0;

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

// K, X and T of one run. K also holds every warm user's ratings.
struct PartitionState {
  RatingMatrix known;
  RatingMatrix pool;
  RatingMatrix test;
  std::vector<UserId> cold_users;  // retained cold users only
  std::vector<UserId> warm_users;
  std::vector<UserId> dropped_users;
};

// Splits users into cold and warm, then each cold user's ratings into K / X / T.
// Depends only on the key set of `data`, the split parameters and the seed.
PartitionState prepare_partition(const RatingMatrix& data, const SplitParams& splits, std::uint64_t seed);

struct UserSession {
  UserId user = -1;
  tree::Answers asked;
};

struct Resolution {
  tree::BranchLabel label;
  std::vector<Rating> elicited;  // ratings moved from X to K
};

// Asks `session.user` about one item. A rating found in X moves to K; one
// already in K is read in place; T is never consulted. Throws ProtocolError
// if the user was asked this item before.
Resolution resolve_single(UserSession& session, ItemId item, RatingMatrix& pool, RatingMatrix& known,
                          double love_threshold);

// Pair counterpart on semi-binary data; each of the two ratings found in X
// moves to K.
Resolution resolve_pair(UserSession& session, const tree::Query& pair, RatingMatrix& pool, RatingMatrix& known);

// Observation points for tests and tooling. All optional.
struct SimHooks {
  // Applied to T right after partitioning.
  std::function<void(RatingMatrix& test)> transform_test;
  std::function<void(int iteration, UserId user, const tree::Query& query)> on_query;
  std::function<void(int iteration, const mf::MFModel& model)> on_fit;
  std::function<void(int iteration, const PartitionState& state)> on_iteration;
};

// Runs the elicitation loop and returns n_iterations + 1 records, the first
// being the pre-elicitation baseline. Semi-binary strategies binarize `data`
// before partitioning.
std::vector<IterationRecord> run_simulation(const RatingMatrix& data, const SimConfig& cfg,
                                            const SimHooks& hooks = {});

struct Curve {
  std::string strategy;
  Scale scale = Scale::Raw_0_100;
  std::vector<IterationRecord> records;
};

struct Comparison {
  std::vector<Curve> curves;
  bool mixed_scales() const;
};

// All variants must share seed, split parameters and iteration count, so they
// see identical K / X / T partitions. Throws ConfigError otherwise.
Comparison run_comparison(const RatingMatrix& data, const std::vector<SimConfig>& variants);

// strategy,iteration,rmse,known_size,queries_issued,queries_answered
void write_csv(std::ostream& out, const Comparison& c);
// Per-curve scale, plus a warning flag when curves are on different scales.
nlohmann::json comparison_metadata(const Comparison& c);

}  // namespace elicit::sim
