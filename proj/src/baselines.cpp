#include "elicit/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "elicit/errors.hpp"

namespace elicit::baseline {

namespace {

std::vector<ItemId> unique_candidates(std::span<const ItemId> candidates) {
  if (candidates.empty()) throw ArgumentError("a ranking needs at least one candidate");
  std::vector<ItemId> out(candidates.begin(), candidates.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

StaticRanking order(std::vector<ItemId> items, std::map<ItemId, double> scores) {
  std::sort(items.begin(), items.end(), [&](ItemId a, ItemId b) {
    const double sa = scores.at(a), sb = scores.at(b);
    return sa > sb || (sa == sb && a < b);
  });
  return {std::move(items), std::move(scores)};
}

void check_bins(int bins) {
  if (bins < 2) throw ArgumentError("entropy needs at least two bins");
}

double entropy_bits(const std::vector<double>& values, Scale scale, int bins) {
  if (values.empty()) return 0.0;
  const auto range = scale_range(scale);
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double v : values) {
    auto b = static_cast<int>(std::floor((v - range.lo) / (range.hi - range.lo) * bins));
    counts[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))] += 1.0;
  }
  double h = 0.0;
  const auto n = static_cast<double>(values.size());
  for (double c : counts) {
    if (c == 0.0) continue;
    const double p = c / n;
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace

std::string_view to_string(Kind k) {
  switch (k) {
    case Kind::Popularity: return "popularity";
    case Kind::Variance: return "variance";
    case Kind::Entropy: return "entropy";
    case Kind::Helf: return "helf";
  }
  return "?";
}

StaticRanking rank_popularity(const RatingMatrix& known, std::span<const ItemId> candidates) {
  auto items = unique_candidates(candidates);
  RatingIndex index(known);
  std::map<ItemId, double> scores;
  for (ItemId i : items) scores[i] = static_cast<double>(index.column(i).size());
  return order(std::move(items), std::move(scores));
}

StaticRanking rank_variance(const RatingMatrix& known, std::span<const ItemId> candidates) {
  auto items = unique_candidates(candidates);
  RatingIndex index(known);
  std::map<ItemId, double> scores;
  for (ItemId i : items) {
    auto col = index.column(i);
    if (col.size() < 2) {
      scores[i] = 0.0;
      continue;
    }
    double mean = 0.0;
    for (const auto& c : col) mean += c.value;
    mean /= static_cast<double>(col.size());
    double var = 0.0;
    for (const auto& c : col) var += (c.value - mean) * (c.value - mean);
    scores[i] = var / static_cast<double>(col.size());
  }
  return order(std::move(items), std::move(scores));
}

StaticRanking rank_entropy(const RatingMatrix& known, std::span<const ItemId> candidates, int bins) {
  check_bins(bins);
  auto items = unique_candidates(candidates);
  RatingIndex index(known);
  std::map<ItemId, double> scores;
  std::vector<double> values;
  for (ItemId i : items) {
    values.clear();
    for (const auto& c : index.column(i)) values.push_back(c.value);
    scores[i] = entropy_bits(values, known.scale(), bins);
  }
  return order(std::move(items), std::move(scores));
}

StaticRanking rank_helf(const RatingMatrix& known, std::span<const ItemId> candidates, int bins) {
  check_bins(bins);
  auto items = unique_candidates(candidates);
  RatingIndex index(known);
  std::size_t max_freq = 0;
  for (ItemId i : items) max_freq = std::max(max_freq, index.column(i).size());

  std::map<ItemId, double> scores;
  std::vector<double> values;
  const double h_max = std::log2(static_cast<double>(bins));
  for (ItemId i : items) {
    auto col = index.column(i);
    values.clear();
    for (const auto& c : col) values.push_back(c.value);
    const double lf = max_freq == 0 ? 0.0
                                    : std::log(1.0 + static_cast<double>(col.size())) /
                                          std::log(1.0 + static_cast<double>(max_freq));
    const double h = entropy_bits(values, known.scale(), bins) / h_max;
    scores[i] = (lf + h == 0.0) ? 0.0 : 2.0 * lf * h / (lf + h);
  }
  return order(std::move(items), std::move(scores));
}

StaticRanking rank(Kind kind, const RatingMatrix& known, std::span<const ItemId> candidates, int bins) {
  switch (kind) {
    case Kind::Popularity: return rank_popularity(known, candidates);
    case Kind::Variance: return rank_variance(known, candidates);
    case Kind::Entropy: return rank_entropy(known, candidates, bins);
    case Kind::Helf: return rank_helf(known, candidates, bins);
  }
  throw ArgumentError("unknown baseline kind");
}

}  // namespace elicit::baseline
