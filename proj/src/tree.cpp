#include "elicit/tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "elicit/errors.hpp"

namespace elicit::tree {

std::string_view to_string(BranchLabel b) {
  switch (b) {
    case BranchLabel::Lover: return "Lover";
    case BranchLabel::Hater: return "Hater";
    case BranchLabel::Unknown: return "Unknown";
    case BranchLabel::PreferFirst: return "PreferFirst";
    case BranchLabel::PreferSecond: return "PreferSecond";
    case BranchLabel::Indifferent: return "Indifferent";
  }
  return "?";
}

BranchLabel branch_label_from_string(std::string_view s) {
  for (auto b : {BranchLabel::Lover, BranchLabel::Hater, BranchLabel::Unknown, BranchLabel::PreferFirst,
                 BranchLabel::PreferSecond, BranchLabel::Indifferent})
    if (to_string(b) == s) return b;
  throw ArgumentError("unknown branch label '" + std::string(s) + "'");
}

int branch_slot(BranchLabel b) {
  switch (b) {
    case BranchLabel::Lover:
    case BranchLabel::PreferFirst: return 0;
    case BranchLabel::Hater:
    case BranchLabel::PreferSecond: return 1;
    default: return 2;
  }
}

BranchLabel slot_label(bool pair, int slot) {
  static constexpr BranchLabel kSingle[] = {BranchLabel::Lover, BranchLabel::Hater, BranchLabel::Unknown};
  static constexpr BranchLabel kPair[] = {BranchLabel::PreferFirst, BranchLabel::PreferSecond,
                                          BranchLabel::Indifferent};
  if (slot < 0 || slot > 2) throw ArgumentError("branch slot out of range");
  return pair ? kPair[slot] : kSingle[slot];
}

void validate(const TreeConfig& cfg) {
  if (cfg.pool_size < 2) throw ArgumentError("tree.pool_size must be >= 2");
  if (cfg.max_depth < 1) throw ArgumentError("tree.max_depth must be >= 1");
  if (cfg.min_node_users < 1) throw ArgumentError("tree.min_node_users must be >= 1");
  if (cfg.candidate_types.empty()) throw ArgumentError("tree.candidate_types must not be empty");
  if (cfg.mode == Mode::Single &&
      (cfg.candidate_types.size() != 1 || cfg.candidate_types.front() != cfg.target_type))
    throw ArgumentError("single-item trees only ask about the target item type");
}

std::size_t ElicitationTree::node_count() const {
  std::function<std::size_t(const TreeNode*)> count = [&](const TreeNode* n) -> std::size_t {
    if (!n) return 0;
    std::size_t c = 1;
    for (const auto& ch : n->children) c += count(ch.get());
    return c;
  };
  return count(root.get());
}

int ElicitationTree::height() const {
  std::function<int(const TreeNode*)> h = [&](const TreeNode* n) -> int {
    if (!n) return 0;
    int best = 0;
    for (const auto& ch : n->children) best = std::max(best, h(ch.get()));
    return best + 1;
  };
  return h(root.get());
}

bool structurally_equal(const TreeNode* a, const TreeNode* b) {
  if (!a || !b) return a == b;
  if (a->query != b->query || a->depth != b->depth || a->n_users != b->n_users ||
      a->split_error != b->split_error || a->branch_users != b->branch_users)
    return false;
  for (int s = 0; s < 3; ++s)
    if (!structurally_equal(a->children[s].get(), b->children[s].get())) return false;
  return true;
}

BranchLabel single_branch(std::optional<double> value, Scale scale, double love_threshold) {
  if (!value) return BranchLabel::Unknown;
  const bool love = scale == Scale::SemiBinary ? *value >= 0.5 : *value >= love_threshold;
  return love ? BranchLabel::Lover : BranchLabel::Hater;
}

BranchLabel pair_branch(std::optional<double> first, std::optional<double> second) {
  // 2 = like, 1 = rated dislike, 0 = unrated; the higher rank wins.
  auto rank = [](std::optional<double> v) -> int {
    if (!v) return 0;
    if (*v == kSemiBinaryLike) return 2;
    if (*v == kSemiBinaryDislike) return 1;
    throw ArgumentError("pair preference needs semi-binary values (1 or 0.01), got " + std::to_string(*v));
  };
  const int a = rank(first);
  const int b = rank(second);
  if (a == b) return BranchLabel::Indifferent;
  return a > b ? BranchLabel::PreferFirst : BranchLabel::PreferSecond;
}

namespace {

struct Moments {
  double n = 0.0;
  double sum = 0.0;
  double sumsq = 0.0;

  void add(double v) {
    n += 1.0;
    sum += v;
    sumsq += v * v;
  }
  Moments operator-(const Moments& o) const { return {n - o.n, sum - o.sum, sumsq - o.sumsq}; }
};

// Squared deviation of the accumulated values around their own mean.
double sse(const Moments& m) {
  if (m.n <= 1.5) return 0.0;
  const double v = m.sumsq - m.sum * m.sum / m.n;
  return v > 0.0 ? v : 0.0;
}

// Split-error machinery for one node: per-item moments over the node's users,
// plus scratch space to score candidates without touching the full item set.
class NodeEvaluator {
 public:
  NodeEvaluator(const RatingIndex& index, Scale scale, double love_threshold, std::span<const UserId> users)
      : index_(index),
        scale_(scale),
        love_threshold_(love_threshold),
        users_(users),
        in_node_(index.n_users(), 0),
        totals_(index.n_items()),
        lovers_(index.n_items()),
        haters_(index.n_items()),
        mark_(index.n_items(), 0) {
    for (UserId u : users) {
      in_node_[u] = 1;
      for (const auto& c : index.row(u)) {
        if (totals_[c.id].n == 0.0) rated_.push_back(c.id);
        totals_[c.id].add(c.value);
      }
    }
    std::sort(rated_.begin(), rated_.end());
    for (ItemId i : rated_) total_sse_ += sse(totals_[i]);
  }

  const std::vector<ItemId>& rated_items() const { return rated_; }

  double error(ItemId candidate) {
    touched_.clear();
    for (const auto& cell : index_.column(candidate)) {
      if (!in_node_[cell.id]) continue;
      auto& side = single_branch(cell.value, scale_, love_threshold_) == BranchLabel::Lover ? lovers_ : haters_;
      for (const auto& c : index_.row(cell.id)) {
        if (!mark_[c.id]) {
          mark_[c.id] = 1;
          touched_.push_back(c.id);
        }
        side[c.id].add(c.value);
      }
    }
    double e = total_sse_;
    for (ItemId i : touched_) {
      const Moments unknown = totals_[i] - lovers_[i] - haters_[i];
      e += sse(lovers_[i]) + sse(haters_[i]) + sse(unknown) - sse(totals_[i]);
      lovers_[i] = {};
      haters_[i] = {};
      mark_[i] = 0;
    }
    return e > 0.0 ? e : 0.0;
  }

  // Error of an arbitrary three-way partition; slot_of[k] is the branch of users_[k].
  double partition_error(const std::vector<int>& slot_of) const {
    std::vector<std::array<Moments, 3>> parts(index_.n_items());
    for (std::size_t k = 0; k < users_.size(); ++k)
      for (const auto& c : index_.row(users_[k])) parts[c.id][slot_of[k]].add(c.value);
    double e = 0.0;
    for (ItemId i : rated_)
      for (const auto& m : parts[i]) e += sse(m);
    return e;
  }

 private:
  const RatingIndex& index_;
  Scale scale_;
  double love_threshold_;
  std::span<const UserId> users_;
  std::vector<char> in_node_;
  std::vector<Moments> totals_;
  std::vector<Moments> lovers_;
  std::vector<Moments> haters_;
  std::vector<char> mark_;
  std::vector<ItemId> rated_;
  std::vector<ItemId> touched_;
  double total_sse_ = 0.0;
};

bool by_error_then_id(const ScoredItem& a, const ScoredItem& b) {
  return a.error < b.error || (a.error == b.error && a.item < b.item);
}

std::vector<ScoredItem> score_all(NodeEvaluator& ev, std::span<const ItemId> candidates) {
  std::vector<ScoredItem> scored;
  scored.reserve(candidates.size());
  for (ItemId c : candidates) scored.push_back({c, ev.error(c)});
  std::sort(scored.begin(), scored.end(), by_error_then_id);
  return scored;
}

double cosine(const RatingIndex& index, ItemId a, ItemId b) {
  auto ca = index.column(a);
  auto cb = index.column(b);
  double na = 0.0, nb = 0.0, dot = 0.0;
  for (const auto& c : ca) na += c.value * c.value;
  for (const auto& c : cb) nb += c.value * c.value;
  if (na == 0.0 || nb == 0.0) return 0.0;
  auto ia = ca.begin();
  auto ib = cb.begin();
  while (ia != ca.end() && ib != cb.end()) {
    if (ia->id < ib->id) {
      ++ia;
    } else if (ib->id < ia->id) {
      ++ib;
    } else {
      dot += ia->value * ib->value;
      ++ia;
      ++ib;
    }
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::pair<ItemId, ItemId> pick_pair(const RatingIndex& index, std::span<const ItemId> pool, PairStrategy strategy) {
  if (pool.size() < 2) throw ArgumentError("a pair needs a pool of at least two items");
  if (strategy == PairStrategy::FirstTwo) return {pool[0], pool[1]};
  ItemId best = pool[1];
  double best_sim = cosine(index, pool[0], pool[1]);
  for (std::size_t k = 2; k < pool.size(); ++k) {
    const double s = cosine(index, pool[0], pool[k]);
    if (s > best_sim) {
      best_sim = s;
      best = pool[k];
    }
  }
  return {pool[0], best};
}

class TreeBuilder {
 public:
  TreeBuilder(const RatingMatrix& known, const TreeConfig& cfg)
      : known_(known), index_(known), cfg_(cfg), on_path_(known.catalog().n_items(), 0) {}

  std::unique_ptr<TreeNode> grow(const std::vector<UserId>& users, int depth) {
    NodeEvaluator ev(index_, known_.scale(), cfg_.love_threshold, users);

    std::vector<ItemId> candidates;
    for (ItemId i : ev.rated_items()) {
      if (on_path_[i]) continue;
      const ItemType t = known_.type_of(i);
      if (std::find(cfg_.candidate_types.begin(), cfg_.candidate_types.end(), t) != cfg_.candidate_types.end())
        candidates.push_back(i);
    }
    if (candidates.empty()) return nullptr;

    auto node = std::make_unique<TreeNode>();
    node->depth = depth;
    node->n_users = users.size();
    std::vector<int> slot_of(users.size());

    if (cfg_.mode == Mode::Pairwise) {
      auto scored = score_all(ev, candidates);
      auto pool = pair_pool(scored);
      if (pool.size() < 2) return nullptr;
      const auto [a, b] = pick_pair(index_, pool, cfg_.pair_strategy);
      node->query = Query::pair(a, b);
      for (std::size_t k = 0; k < users.size(); ++k)
        slot_of[k] = branch_slot(pair_branch(index_.find(users[k], a), index_.find(users[k], b)));
      node->split_error = ev.partition_error(slot_of);
    } else {
      ScoredItem best{candidates.front(), ev.error(candidates.front())};
      for (std::size_t k = 1; k < candidates.size(); ++k) {
        ScoredItem s{candidates[k], ev.error(candidates[k])};
        if (by_error_then_id(s, best)) best = s;
      }
      node->query = Query::single(best.item);
      node->split_error = best.error;
      for (std::size_t k = 0; k < users.size(); ++k)
        slot_of[k] = branch_slot(single_branch(index_.find(users[k], best.item), known_.scale(), cfg_.love_threshold));
    }

    std::array<std::vector<UserId>, 3> parts;
    for (std::size_t k = 0; k < users.size(); ++k) parts[slot_of[k]].push_back(users[k]);

    set_path(node->query, 1);
    for (int s = 0; s < 3; ++s) {
      node->branch_users[s] = parts[s].size();
      if (depth + 1 < cfg_.max_depth && parts[s].size() >= static_cast<std::size_t>(cfg_.min_node_users))
        node->children[s] = grow(parts[s], depth + 1);
    }
    set_path(node->query, 0);
    return node;
  }

 private:
  // Lowest-error items of the best-scoring type that has at least two candidates.
  std::vector<ItemId> pair_pool(const std::vector<ScoredItem>& scored) const {
    std::vector<ItemType> type_order;
    for (const auto& s : scored) {
      const ItemType t = known_.type_of(s.item);
      if (std::find(type_order.begin(), type_order.end(), t) == type_order.end()) type_order.push_back(t);
    }
    for (ItemType t : type_order) {
      std::vector<ItemId> pool;
      for (const auto& s : scored) {
        if (known_.type_of(s.item) != t) continue;
        pool.push_back(s.item);
        if (pool.size() == static_cast<std::size_t>(cfg_.pool_size)) break;
      }
      if (pool.size() >= 2) return pool;
    }
    return {};
  }

  void set_path(const Query& q, char v) {
    on_path_[q.first] = v;
    if (q.is_pair()) on_path_[q.second] = v;
  }

  const RatingMatrix& known_;
  RatingIndex index_;
  const TreeConfig& cfg_;
  std::vector<char> on_path_;
};

}  // namespace

std::map<ItemId, double> node_item_means(const RatingMatrix& known, std::span<const UserId> users) {
  std::map<ItemId, Moments> acc;
  for (UserId u : users)
    for (const auto& [item, v] : known.row(u)) acc[item].add(v);
  std::map<ItemId, double> out;
  for (const auto& [item, m] : acc) out.emplace(item, m.sum / m.n);
  return out;
}

double split_error(const RatingMatrix& known, std::span<const UserId> users, ItemId candidate,
                   double love_threshold) {
  RatingIndex index(known);
  NodeEvaluator ev(index, known.scale(), love_threshold, users);
  return ev.error(candidate);
}

ScoredItem select_single_split(const RatingMatrix& known, std::span<const UserId> users,
                               std::span<const ItemId> candidates, double love_threshold) {
  if (candidates.empty()) throw ArgumentError("select_single_split needs at least one candidate");
  return top_k_candidates(known, users, candidates, 1, love_threshold).front();
}

std::vector<ScoredItem> top_k_candidates(const RatingMatrix& known, std::span<const UserId> users,
                                         std::span<const ItemId> candidates, std::size_t k,
                                         double love_threshold) {
  if (candidates.empty()) throw ArgumentError("top_k_candidates needs at least one candidate");
  if (k < 1) throw ArgumentError("top_k_candidates needs k >= 1");
  RatingIndex index(known);
  NodeEvaluator ev(index, known.scale(), love_threshold, users);
  auto scored = score_all(ev, candidates);
  if (scored.size() > k) scored.resize(k);
  return scored;
}

double item_cosine_similarity(const RatingMatrix& known, ItemId a, ItemId b) {
  return cosine(RatingIndex(known), a, b);
}

std::pair<ItemId, ItemId> select_pair(const RatingMatrix& known, std::span<const ItemId> pool,
                                      PairStrategy strategy) {
  if (pool.size() < 2) throw ArgumentError("a pair needs a pool of at least two items");
  for (ItemId i : pool)
    if (known.type_of(i) != known.type_of(pool[0])) throw ArgumentError("pair pool mixes item types");
  return pick_pair(RatingIndex(known), pool, strategy);
}

ElicitationTree build_tree(const RatingMatrix& known, std::span<const UserId> users, const TreeConfig& cfg) {
  validate(cfg);
  if (users.empty()) throw ArgumentError("cannot build an elicitation tree without users");
  if (cfg.mode == Mode::Pairwise && known.scale() != Scale::SemiBinary)
    throw ArgumentError("pairwise trees need semi-binary ratings");
  TreeBuilder builder(known, cfg);
  std::vector<UserId> root_users(users.begin(), users.end());
  return ElicitationTree{builder.grow(root_users, 0)};
}

std::optional<Query> next_query(const ElicitationTree& tree, const Answers& answers) {
  const TreeNode* node = tree.root.get();
  while (node) {
    const Query& q = node->query;
    if (auto it = answers.find(q); it != answers.end()) {
      node = node->child(it->second);
      continue;
    }
    if (q.is_pair()) {
      if (auto it = answers.find(q.reversed()); it != answers.end()) {
        BranchLabel b = it->second;
        if (b == BranchLabel::PreferFirst) b = BranchLabel::PreferSecond;
        else if (b == BranchLabel::PreferSecond) b = BranchLabel::PreferFirst;
        node = node->child(b);
        continue;
      }
    }
    return q;
  }
  return std::nullopt;
}

std::string describe(const Query& q, const Catalog& catalog) {
  if (!q.is_pair()) return catalog.item_names.at(q.first);
  return catalog.item_names.at(q.first) + " vs " + catalog.item_names.at(q.second);
}

}  // namespace elicit::tree
