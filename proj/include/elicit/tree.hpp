#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "elicit/rating_matrix.hpp"

namespace elicit::tree {

// A node question: one item, or an ordered pair of items of the same type.
struct Query {
  ItemId first = -1;
  ItemId second = -1;  // -1 for a single-item query

  static Query single(ItemId item) { return {item, -1}; }
  static Query pair(ItemId a, ItemId b) { return {a, b}; }

  bool is_pair() const { return second >= 0; }
  Query reversed() const { return {second, first}; }

  auto operator<=>(const Query&) const = default;
};

enum class BranchLabel : std::uint8_t { Lover, Hater, Unknown, PreferFirst, PreferSecond, Indifferent };

std::string_view to_string(BranchLabel b);
BranchLabel branch_label_from_string(std::string_view s);

// Child slot of a label: Lover/PreferFirst -> 0, Hater/PreferSecond -> 1,
// Unknown/Indifferent -> 2.
int branch_slot(BranchLabel b);
BranchLabel slot_label(bool pair, int slot);

enum class Mode : std::uint8_t { Single, Hybrid, Pairwise };
enum class PairStrategy : std::uint8_t { FirstTwo, FirstPlusMostSimilar };

struct TreeConfig {
  Mode mode = Mode::Single;
  PairStrategy pair_strategy = PairStrategy::FirstPlusMostSimilar;
  int pool_size = 20;
  std::vector<ItemType> candidate_types{ItemType::Artist};
  ItemType target_type = ItemType::Artist;
  int max_depth = 25;
  int min_node_users = 2;
  // Raw-scale lover cut. On semi-binary data a value of 1 is a lover and
  // 0.01 a hater regardless of this setting.
  double love_threshold = 50.0;
};

void validate(const TreeConfig& cfg);

struct TreeNode {
  Query query;
  std::array<std::unique_ptr<TreeNode>, 3> children;  // null = leaf
  std::array<std::size_t, 3> branch_users{};           // build-time users per slot
  int depth = 0;
  double split_error = 0.0;
  std::size_t n_users = 0;

  const TreeNode* child(BranchLabel b) const { return children[branch_slot(b)].get(); }
};

struct ElicitationTree {
  std::unique_ptr<TreeNode> root;  // null when no query could be formed

  bool empty() const { return root == nullptr; }
  std::size_t node_count() const;
  int height() const;
};

bool structurally_equal(const TreeNode* a, const TreeNode* b);

// Lover / hater / unknown classification of a (possibly missing) rating.
BranchLabel single_branch(std::optional<double> value, Scale scale, double love_threshold);

// Mean rating of each item over the given users; items none of them rated
// are absent.
std::map<ItemId, double> node_item_means(const RatingMatrix& known, std::span<const UserId> users);

// E(j): summed squared deviation from per-branch item means after splitting
// `users` on `candidate` into lovers, haters and unknowns.
double split_error(const RatingMatrix& known, std::span<const UserId> users, ItemId candidate,
                   double love_threshold);

struct ScoredItem {
  ItemId item;
  double error;
  friend bool operator==(const ScoredItem&, const ScoredItem&) = default;
};

// Lowest split error, ties to the smallest item id. Throws ArgumentError if
// `candidates` is empty.
ScoredItem select_single_split(const RatingMatrix& known, std::span<const UserId> users,
                               std::span<const ItemId> candidates, double love_threshold);

// The k lowest-error candidates, ascending by (error, id).
std::vector<ScoredItem> top_k_candidates(const RatingMatrix& known, std::span<const UserId> users,
                                         std::span<const ItemId> candidates, std::size_t k,
                                         double love_threshold);

// Cosine of two rating columns, missing entries as 0. Zero if either column is empty.
double item_cosine_similarity(const RatingMatrix& known, ItemId a, ItemId b);

// Forms the node pair from an error-ranked pool. Throws ArgumentError if
// the pool has fewer than two items or mixes item types.
std::pair<ItemId, ItemId> select_pair(const RatingMatrix& known, std::span<const ItemId> pool,
                                      PairStrategy strategy);

// Pair preference on semi-binary values (nullopt = unrated). Equal values are
// indifferent, a like beats anything else, and a rated dislike beats unrated.
// Throws ArgumentError for any other value.
BranchLabel pair_branch(std::optional<double> first, std::optional<double> second);

// Grows a ternary tree over `users`. Candidates at a node are items of the
// configured types that some node user rated, minus items already used on
// the path. Stops at max_depth, below min_node_users, or with no candidates.
ElicitationTree build_tree(const RatingMatrix& known, std::span<const UserId> users, const TreeConfig& cfg);

using Answers = std::map<Query, BranchLabel>;

// Walks down from the root following recorded answers and returns the first
// unanswered query, or nullopt once a leaf is reached. A pair answered in the
// opposite order counts as answered, with its preference mirrored.
std::optional<Query> next_query(const ElicitationTree& tree, const Answers& answers);

// Human-readable rendering, e.g. "a12" or "a12 vs a40".
std::string describe(const Query& q, const Catalog& catalog);

}  // namespace elicit::tree
