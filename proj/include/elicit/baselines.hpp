#pragma once

#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "elicit/rating_matrix.hpp"

namespace elicit::baseline {

// Non-personalized query order: items by descending score, ties to the
// smaller id. Every candidate appears exactly once.
struct StaticRanking {
  std::vector<ItemId> items;
  std::map<ItemId, double> scores;
};

enum class Kind { Popularity, Variance, Entropy, Helf };

std::string_view to_string(Kind k);

// Number of ratings.
StaticRanking rank_popularity(const RatingMatrix& known, std::span<const ItemId> candidates);
// Population variance; fewer than two ratings scores 0.
StaticRanking rank_variance(const RatingMatrix& known, std::span<const ItemId> candidates);
// Shannon entropy (bits) of the ratings binned into `bins` equal-width bins
// across the matrix scale. Unrated items score 0.
StaticRanking rank_entropy(const RatingMatrix& known, std::span<const ItemId> candidates, int bins = 5);
// Harmonic mean of log(1 + freq) / log(1 + max freq) and entropy / log2(bins).
StaticRanking rank_helf(const RatingMatrix& known, std::span<const ItemId> candidates, int bins = 5);

StaticRanking rank(Kind kind, const RatingMatrix& known, std::span<const ItemId> candidates, int bins = 5);

}  // namespace elicit::baseline
