#include "elicit/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <ostream>
#include <random>

#include "elicit/baselines.hpp"
#include "elicit/data.hpp"
#include "elicit/errors.hpp"

namespace elicit::sim {

namespace {

constexpr StrategyKind kAllKinds[] = {
    StrategyKind::Popularity, StrategyKind::Variance,      StrategyKind::Entropy,
    StrategyKind::Helf,       StrategyKind::TreeSingle,    StrategyKind::TreeHybrid,
    StrategyKind::PairwiseTree1, StrategyKind::PairwiseTree2, StrategyKind::Random,
};

constexpr std::uint64_t kReSplitSalt = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kRandomOrderSalt = 0xD1B54A32D192ED03ULL;

std::optional<baseline::Kind> baseline_kind(StrategyKind k) {
  switch (k) {
    case StrategyKind::Popularity: return baseline::Kind::Popularity;
    case StrategyKind::Variance: return baseline::Kind::Variance;
    case StrategyKind::Entropy: return baseline::Kind::Entropy;
    case StrategyKind::Helf: return baseline::Kind::Helf;
    default: return std::nullopt;
  }
}

// The answer a user's known ratings already give, so the query need not be issued.
std::optional<tree::BranchLabel> answer_from_known(const tree::Query& q, UserId u, const RatingMatrix& known,
                                                   double love_threshold) {
  if (!q.is_pair()) {
    auto v = known.find(u, q.first);
    if (!v) return std::nullopt;
    return tree::single_branch(v, known.scale(), love_threshold);
  }
  auto a = known.find(u, q.first);
  auto b = known.find(u, q.second);
  if (!a || !b) return std::nullopt;
  return tree::pair_branch(a, b);
}

bool already_asked(const UserSession& s, const tree::Query& q) {
  return s.asked.count(q) > 0 || (q.is_pair() && s.asked.count(q.reversed()) > 0);
}

// Reads a rating for elicitation: from X (moving it into K) or from K.
std::optional<double> elicit_value(UserId u, ItemId item, RatingMatrix& pool, RatingMatrix& known,
                                   std::vector<Rating>& elicited) {
  if (auto v = pool.find(u, item)) {
    pool.erase(u, item);
    known.insert(u, item, *v);
    elicited.push_back({u, item, *v});
    return v;
  }
  return known.find(u, item);
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::Popularity: return "popularity";
    case StrategyKind::Variance: return "variance";
    case StrategyKind::Entropy: return "entropy";
    case StrategyKind::Helf: return "helf";
    case StrategyKind::TreeSingle: return "tree_single";
    case StrategyKind::TreeHybrid: return "tree_hybrid";
    case StrategyKind::PairwiseTree1: return "pairwise_tree_1";
    case StrategyKind::PairwiseTree2: return "pairwise_tree_2";
    case StrategyKind::Random: return "random";
  }
  return "?";
}

const std::vector<std::string>& strategy_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (auto k : kAllKinds) v.emplace_back(to_string(k));
    return v;
  }();
  return names;
}

StrategyKind strategy_from_string(std::string_view name) {
  for (auto k : kAllKinds)
    if (to_string(k) == name) return k;
  std::string valid;
  for (const auto& n : strategy_names()) valid += (valid.empty() ? "" : " | ") + n;
  throw ConfigError("unknown strategy '" + std::string(name) + "'; valid strategies: " + valid);
}

bool is_tree(StrategyKind k) {
  return k == StrategyKind::TreeSingle || k == StrategyKind::TreeHybrid || is_pairwise(k);
}

bool is_pairwise(StrategyKind k) { return k == StrategyKind::PairwiseTree1 || k == StrategyKind::PairwiseTree2; }

std::vector<ItemType> StrategySpec::resolved_candidate_types(ItemType target) const {
  if (!candidate_types.empty()) return candidate_types;
  if (kind == StrategyKind::TreeSingle || kind == StrategyKind::Random) return {target};
  if (target == ItemType::Genre) return {target};
  return {target, ItemType::Genre};
}

tree::TreeConfig effective_tree_config(const SimConfig& cfg) {
  tree::TreeConfig t = cfg.tree;
  t.target_type = cfg.splits.target_type;
  t.candidate_types = cfg.strategy.resolved_candidate_types(cfg.splits.target_type);
  switch (cfg.strategy.kind) {
    case StrategyKind::TreeSingle: t.mode = tree::Mode::Single; break;
    case StrategyKind::PairwiseTree1:
      t.mode = tree::Mode::Pairwise;
      t.pair_strategy = tree::PairStrategy::FirstTwo;
      break;
    case StrategyKind::PairwiseTree2:
      t.mode = tree::Mode::Pairwise;
      t.pair_strategy = tree::PairStrategy::FirstPlusMostSimilar;
      break;
    default: t.mode = tree::Mode::Hybrid; break;
  }
  return t;
}

void validate(const SimConfig& cfg) {
  if (cfg.n_iterations < 1) throw ConfigError("n_iterations must be >= 1");
  if (!(cfg.splits.cold_fraction >= 0.0 && cfg.splits.cold_fraction <= 1.0))
    throw ConfigError("cold_fraction must lie in [0, 1]");
  if (cfg.splits.k_per_user < 0 || cfg.splits.t_per_user < 0)
    throw ConfigError("k_per_user and t_per_user must be >= 0");
  if (cfg.entropy_bins < 2) throw ConfigError("entropy bins must be >= 2");
  if (is_pairwise(cfg.strategy.kind) && !cfg.strategy.uses_semi_binary())
    throw ConfigError("pairwise strategies run on semi-binary data");
  mf::validate(cfg.mf);
  tree::validate(effective_tree_config(cfg));
}

PartitionState prepare_partition(const RatingMatrix& data, const SplitParams& splits, std::uint64_t seed) {
  auto users = data::split_users(data, splits.cold_fraction, seed);
  auto re = data::re_split(users.cold, splits.k_per_user, splits.t_per_user, splits.target_type,
                           seed ^ kReSplitSalt);
  PartitionState st{std::move(re.known), std::move(re.pool), std::move(re.test),
                    std::move(re.retained_users), std::move(users.warm_users), std::move(re.dropped_users)};
  st.known.merge(users.warm);
  return st;
}

Resolution resolve_single(UserSession& session, ItemId item, RatingMatrix& pool, RatingMatrix& known,
                          double love_threshold) {
  const auto q = tree::Query::single(item);
  if (already_asked(session, q))
    throw ProtocolError("user " + std::to_string(session.user) + " was already asked item " + std::to_string(item));
  Resolution r{tree::BranchLabel::Unknown, {}};
  auto v = elicit_value(session.user, item, pool, known, r.elicited);
  r.label = tree::single_branch(v, known.scale(), love_threshold);
  session.asked[q] = r.label;
  return r;
}

Resolution resolve_pair(UserSession& session, const tree::Query& pair, RatingMatrix& pool, RatingMatrix& known) {
  if (!pair.is_pair()) throw ArgumentError("resolve_pair needs a pair query");
  if (known.scale() != Scale::SemiBinary || pool.scale() != Scale::SemiBinary)
    throw ArgumentError("pair queries are resolved on semi-binary data");
  if (already_asked(session, pair))
    throw ProtocolError("user " + std::to_string(session.user) + " was already asked this pair");
  Resolution r{tree::BranchLabel::Indifferent, {}};
  auto a = elicit_value(session.user, pair.first, pool, known, r.elicited);
  auto b = elicit_value(session.user, pair.second, pool, known, r.elicited);
  r.label = tree::pair_branch(a, b);
  session.asked[pair] = r.label;
  return r;
}

std::vector<IterationRecord> run_simulation(const RatingMatrix& data, const SimConfig& cfg, const SimHooks& hooks) {
  validate(cfg);
  const bool semi = cfg.strategy.uses_semi_binary();
  if (data.scale() == Scale::SemiBinary && !semi)
    throw ArgumentError("strategy expects raw ratings but the dataset is semi-binary");
  const RatingMatrix dataset =
      (semi && data.scale() == Scale::Raw_0_100) ? data::semi_binarize(data, cfg.semi_binary_threshold) : data;

  PartitionState st = prepare_partition(dataset, cfg.splits, cfg.seed);
  if (hooks.transform_test) hooks.transform_test(st.test);

  const tree::TreeConfig tcfg = effective_tree_config(cfg);
  const double love = tcfg.love_threshold;
  const StrategyKind kind = cfg.strategy.kind;

  std::vector<ItemId> candidates;
  const auto& cat = dataset.catalog();
  for (std::size_t i = 0; i < cat.n_items(); ++i)
    if (std::find(tcfg.candidate_types.begin(), tcfg.candidate_types.end(), cat.item_types[i]) !=
        tcfg.candidate_types.end())
      candidates.push_back(static_cast<ItemId>(i));

  // Fixed per-user query lists for the non-personalized strategies.
  std::vector<ItemId> shared_list;
  std::map<UserId, std::vector<ItemId>> user_lists;
  if (auto bk = baseline_kind(kind)) {
    if (!candidates.empty()) shared_list = baseline::rank(*bk, st.known, candidates, cfg.entropy_bins).items;
  } else if (kind == StrategyKind::Random) {
    for (UserId u : st.cold_users) {
      std::vector<ItemId> order = candidates;
      std::mt19937_64 rng(cfg.seed ^ kRandomOrderSalt ^ (static_cast<std::uint64_t>(u) * 0x100000001B3ULL));
      std::shuffle(order.begin(), order.end(), rng);
      user_lists.emplace(u, std::move(order));
    }
  }

  std::map<UserId, UserSession> sessions;
  std::map<UserId, std::size_t> cursor;
  for (UserId u : st.cold_users) sessions[u].user = u;

  std::vector<IterationRecord> records;
  auto fit_and_record = [&](int iteration, std::size_t issued, std::size_t answered) {
    auto model = mf::fit(st.known, cfg.mf);
    if (hooks.on_fit) hooks.on_fit(iteration, model);
    records.push_back({iteration, mf::evaluate_rmse(model, st.test), st.known.size(), issued, answered});
    if (hooks.on_iteration) hooks.on_iteration(iteration, st);
  };
  fit_and_record(0, 0, 0);

  for (int it = 1; it <= cfg.n_iterations; ++it) {
    tree::ElicitationTree current;
    if (is_tree(kind)) {
      const auto users = st.known.user_ids();
      current = tree::build_tree(st.known, users, tcfg);
    }

    std::size_t issued = 0, answered = 0;
    for (UserId u : st.cold_users) {
      UserSession& session = sessions[u];
      std::optional<tree::Query> q;
      if (is_tree(kind)) {
        while ((q = tree::next_query(current, session.asked))) {
          auto known_label = answer_from_known(*q, u, st.known, love);
          if (!known_label) break;
          session.asked[*q] = *known_label;
        }
      } else {
        const auto& list = kind == StrategyKind::Random ? user_lists[u] : shared_list;
        std::size_t& pos = cursor[u];
        while (pos < list.size()) {
          const auto cand = tree::Query::single(list[pos++]);
          if (already_asked(session, cand)) continue;
          if (auto known_label = answer_from_known(cand, u, st.known, love)) {
            session.asked[cand] = *known_label;
            continue;
          }
          q = cand;
          break;
        }
      }
      if (!q) continue;

      if (hooks.on_query) hooks.on_query(it, u, *q);
      const Resolution r = q->is_pair() ? resolve_pair(session, *q, st.pool, st.known)
                                        : resolve_single(session, q->first, st.pool, st.known, love);
      ++issued;
      answered += r.elicited.size();
    }
    fit_and_record(it, issued, answered);
  }
  return records;
}

bool Comparison::mixed_scales() const {
  return std::any_of(curves.begin(), curves.end(), [&](const Curve& c) { return c.scale != curves.front().scale; });
}

Comparison run_comparison(const RatingMatrix& data, const std::vector<SimConfig>& variants) {
  Comparison out;
  for (const auto& v : variants) {
    if (v.seed != variants.front().seed || !(v.splits == variants.front().splits))
      throw ConfigError("compared strategies must share the seed and split parameters");
  }
  for (const auto& v : variants) {
    Curve c;
    c.strategy = v.strategy.display_name();
    c.scale = v.strategy.uses_semi_binary() ? Scale::SemiBinary : data.scale();
    c.records = run_simulation(data, v);
    out.curves.push_back(std::move(c));
  }
  return out;
}

void write_csv(std::ostream& out, const Comparison& c) {
  out << "strategy,iteration,rmse,known_size,queries_issued,queries_answered\n";
  for (const auto& curve : c.curves)
    for (const auto& r : curve.records)
      out << curve.strategy << ',' << r.iteration << ',' << format_double(r.rmse) << ',' << r.known_size << ','
          << r.queries_issued << ',' << r.queries_answered << '\n';
}

nlohmann::json comparison_metadata(const Comparison& c) {
  nlohmann::json curves = nlohmann::json::array();
  for (const auto& curve : c.curves) {
    const auto range = scale_range(curve.scale);
    curves.push_back({{"strategy", curve.strategy},
                      {"scale", to_string(curve.scale)},
                      {"rating_range", {range.lo, range.hi}},
                      {"iterations", curve.records.empty() ? 0 : curve.records.back().iteration}});
  }
  nlohmann::json j{{"curves", curves}, {"mixed_scales", c.mixed_scales()}};
  if (c.mixed_scales())
    j["warning"] = "curves use different rating scales; their RMSE values are not comparable";
  return j;
}

}  // namespace elicit::sim
