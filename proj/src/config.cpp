#include "elicit/config.hpp"

#include <fstream>
#include <initializer_list>
#include <string_view>

#include "elicit/errors.hpp"

namespace elicit::config {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) {
      std::string valid;
      for (auto a : allowed) valid += (valid.empty() ? "" : ", ") + std::string(a);
      throw ConfigError("unknown key '" + key + "' in " + std::string(where) + " (allowed: " + valid + ")");
    }
  }
}

template <typename T>
void read(const json& j, std::string_view key, T& out, std::string_view where) {
  auto it = j.find(std::string(key));
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(where) + "." + std::string(key) + ": " + e.what());
  }
}

ItemType parse_type(const json& j, std::string_view where) {
  if (!j.is_string()) throw ConfigError(std::string(where) + ": item type must be a string");
  try {
    return item_type_from_string(j.get<std::string>());
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string(where) + ": " + e.what());
  }
}

std::vector<ItemType> parse_types(const json& j, std::string_view where) {
  if (!j.is_array()) throw ConfigError(std::string(where) + " must be a list of item types");
  std::vector<ItemType> out;
  for (const auto& t : j) out.push_back(parse_type(t, where));
  return out;
}

json types_json(const std::vector<ItemType>& types) {
  json a = json::array();
  for (auto t : types) a.push_back(to_string(t));
  return a;
}

sim::StrategySpec parse_strategy(const json& j) {
  sim::StrategySpec s;
  if (j.is_string()) {
    s.kind = sim::strategy_from_string(j.get<std::string>());
    return s;
  }
  check_keys(j, "simulation.strategies[]", {"name", "label", "candidate_types", "semi_binary"});
  if (!j.contains("name")) throw ConfigError("strategy entry needs a 'name'");
  std::string name;
  read(j, "name", name, "strategy");
  s.kind = sim::strategy_from_string(name);
  read(j, "label", s.label, "strategy");
  if (j.contains("candidate_types")) s.candidate_types = parse_types(j["candidate_types"], "strategy.candidate_types");
  if (j.contains("semi_binary")) {
    bool b = false;
    read(j, "semi_binary", b, "strategy");
    s.semi_binary = b;
  }
  return s;
}

}  // namespace

RunConfig parse_config(const json& j) {
  check_keys(j, "config", {"seed", "dataset", "filter", "splits", "mf", "tree", "baseline", "semi_binary_threshold",
                           "simulation"});
  RunConfig c;
  read(j, "seed", c.seed, "config");
  read(j, "semi_binary_threshold", c.semi_binary_threshold, "config");

  if (j.contains("dataset")) {
    const auto& d = j["dataset"];
    check_keys(d, "dataset", {"path", "has_header", "synthetic"});
    read(d, "path", c.dataset.path, "dataset");
    read(d, "has_header", c.dataset.has_header, "dataset");
    if (d.contains("synthetic")) {
      const auto& s = d["synthetic"];
      check_keys(s, "dataset.synthetic", {"n_users", "n_artists", "n_genres", "n_factors", "density", "noise_sd",
                                          "seed", "n_clusters", "popularity_skew", "genre_popularity",
                                          "taste_propensity"});
      auto& sc = c.dataset.synthetic;
      read(s, "n_users", sc.n_users, "dataset.synthetic");
      read(s, "n_artists", sc.n_artists, "dataset.synthetic");
      read(s, "n_genres", sc.n_genres, "dataset.synthetic");
      read(s, "n_factors", sc.n_factors, "dataset.synthetic");
      read(s, "density", sc.density, "dataset.synthetic");
      read(s, "noise_sd", sc.noise_sd, "dataset.synthetic");
      read(s, "n_clusters", sc.n_clusters, "dataset.synthetic");
      read(s, "popularity_skew", sc.popularity_skew, "dataset.synthetic");
      read(s, "genre_popularity", sc.genre_popularity, "dataset.synthetic");
      read(s, "taste_propensity", sc.taste_propensity, "dataset.synthetic");
      if (s.contains("seed")) {
        read(s, "seed", sc.seed, "dataset.synthetic");
        c.dataset.synthetic_seed_set = true;
      }
    }
  }

  if (j.contains("filter")) {
    const auto& f = j["filter"];
    check_keys(f, "filter", {"min_user_ratings", "min_ratings_per_type"});
    read(f, "min_user_ratings", c.filter.min_user_ratings, "filter");
    if (f.contains("min_ratings_per_type")) {
      const auto& m = f["min_ratings_per_type"];
      if (!m.is_object()) throw ConfigError("filter.min_ratings_per_type must map item types to counts");
      for (const auto& [k, v] : m.items()) {
        if (!v.is_number_unsigned()) throw ConfigError("filter.min_ratings_per_type." + k + " must be a count");
        c.filter.min_ratings_per_type[parse_type(json(k), "filter.min_ratings_per_type")] = v.get<std::size_t>();
      }
    }
  }

  if (j.contains("splits")) {
    const auto& s = j["splits"];
    check_keys(s, "splits", {"cold_fraction", "k_per_user", "t_per_user", "target_type"});
    read(s, "cold_fraction", c.splits.cold_fraction, "splits");
    read(s, "k_per_user", c.splits.k_per_user, "splits");
    read(s, "t_per_user", c.splits.t_per_user, "splits");
    if (s.contains("target_type")) c.splits.target_type = parse_type(s["target_type"], "splits.target_type");
  }

  if (j.contains("mf")) {
    const auto& m = j["mf"];
    check_keys(m, "mf", {"factors", "learning_rate", "l2_reg", "epochs", "init_sd", "seed"});
    read(m, "factors", c.mf.factors, "mf");
    read(m, "learning_rate", c.mf.learning_rate, "mf");
    read(m, "l2_reg", c.mf.l2_reg, "mf");
    read(m, "epochs", c.mf.epochs, "mf");
    read(m, "init_sd", c.mf.init_sd, "mf");
    if (m.contains("seed")) {
      read(m, "seed", c.mf.seed, "mf");
      c.mf_seed_set = true;
    }
  }

  if (j.contains("tree")) {
    const auto& t = j["tree"];
    check_keys(t, "tree", {"max_depth", "min_node_users", "love_threshold", "pool_size"});
    read(t, "max_depth", c.tree.max_depth, "tree");
    read(t, "min_node_users", c.tree.min_node_users, "tree");
    read(t, "love_threshold", c.tree.love_threshold, "tree");
    read(t, "pool_size", c.tree.pool_size, "tree");
  }

  if (j.contains("baseline")) {
    check_keys(j["baseline"], "baseline", {"entropy_bins"});
    read(j["baseline"], "entropy_bins", c.entropy_bins, "baseline");
  }

  if (j.contains("simulation")) {
    const auto& s = j["simulation"];
    check_keys(s, "simulation", {"n_iterations", "strategies"});
    read(s, "n_iterations", c.n_iterations, "simulation");
    if (s.contains("strategies")) {
      if (!s["strategies"].is_array()) throw ConfigError("simulation.strategies must be a list");
      for (const auto& e : s["strategies"]) c.strategies.push_back(parse_strategy(e));
    }
  }
  if (c.strategies.empty()) c.strategies.push_back({sim::StrategyKind::TreeHybrid, "", {}, std::nullopt});

  set_seed(c, c.seed);
  try {
    data::validate(c.dataset.synthetic);
    for (const auto& v : simulation_variants(c)) sim::validate(v);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return c;
}

json to_json(const RunConfig& c) {
  const auto& sc = c.dataset.synthetic;
  json synthetic{{"n_users", sc.n_users},         {"n_artists", sc.n_artists},
                 {"n_genres", sc.n_genres},       {"n_factors", sc.n_factors},
                 {"density", sc.density},         {"noise_sd", sc.noise_sd},
                 {"n_clusters", sc.n_clusters},   {"popularity_skew", sc.popularity_skew},
                 {"genre_popularity", sc.genre_popularity}, {"taste_propensity", sc.taste_propensity}};
  if (c.dataset.synthetic_seed_set) synthetic["seed"] = sc.seed;
  json dataset{{"path", c.dataset.path}, {"has_header", c.dataset.has_header}, {"synthetic", synthetic}};

  json per_type = json::object();
  for (const auto& [t, n] : c.filter.min_ratings_per_type) per_type[std::string(to_string(t))] = n;

  json mf{{"factors", c.mf.factors}, {"learning_rate", c.mf.learning_rate}, {"l2_reg", c.mf.l2_reg},
          {"epochs", c.mf.epochs},   {"init_sd", c.mf.init_sd}};
  if (c.mf_seed_set) mf["seed"] = c.mf.seed;

  json strategies = json::array();
  for (const auto& s : c.strategies) {
    json e{{"name", to_string(s.kind)}};
    if (!s.label.empty()) e["label"] = s.label;
    if (!s.candidate_types.empty()) e["candidate_types"] = types_json(s.candidate_types);
    if (s.semi_binary) e["semi_binary"] = *s.semi_binary;
    strategies.push_back(std::move(e));
  }

  return json{{"seed", c.seed},
              {"dataset", dataset},
              {"filter", {{"min_user_ratings", c.filter.min_user_ratings}, {"min_ratings_per_type", per_type}}},
              {"splits",
               {{"cold_fraction", c.splits.cold_fraction},
                {"k_per_user", c.splits.k_per_user},
                {"t_per_user", c.splits.t_per_user},
                {"target_type", to_string(c.splits.target_type)}}},
              {"mf", mf},
              {"tree",
               {{"max_depth", c.tree.max_depth},
                {"min_node_users", c.tree.min_node_users},
                {"love_threshold", c.tree.love_threshold},
                {"pool_size", c.tree.pool_size}}},
              {"baseline", {{"entropy_bins", c.entropy_bins}}},
              {"semi_binary_threshold", c.semi_binary_threshold},
              {"simulation", {{"n_iterations", c.n_iterations}, {"strategies", strategies}}}};
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (j.is_object() && j.contains("manifest")) j = j.at("config");
  RunConfig c = parse_config(j);
  if (!c.dataset.path.empty()) {
    std::filesystem::path p(c.dataset.path);
    if (p.is_relative()) p = path.parent_path() / p;
    c.dataset.path = std::filesystem::weakly_canonical(std::filesystem::absolute(p)).string();
  }
  return c;
}

void set_seed(RunConfig& c, std::uint64_t seed) {
  c.seed = seed;
  if (!c.mf_seed_set) c.mf.seed = seed;
  if (!c.dataset.synthetic_seed_set) c.dataset.synthetic.seed = seed;
}

data::SyntheticConfig effective_synthetic(const RunConfig& c) { return c.dataset.synthetic; }

std::vector<sim::SimConfig> simulation_variants(const RunConfig& c) {
  std::vector<sim::SimConfig> out;
  for (const auto& s : c.strategies) {
    sim::SimConfig v;
    v.n_iterations = c.n_iterations;
    v.strategy = s;
    v.mf = c.mf;
    v.tree = c.tree;
    v.splits = c.splits;
    v.entropy_bins = c.entropy_bins;
    v.semi_binary_threshold = c.semi_binary_threshold;
    v.seed = c.seed;
    out.push_back(std::move(v));
  }
  return out;
}

RatingMatrix load_dataset(const RunConfig& c) {
  RatingMatrix m = c.dataset.path.empty()
                       ? data::generate_synthetic(effective_synthetic(c)).ratings
                       : data::load_ratings(c.dataset.path, data::LoadOptions{'\t', c.dataset.has_header});
  if (c.filter.min_user_ratings == 0 && c.filter.min_ratings_per_type.empty()) return m;
  return data::filter_density(m, c.filter.min_user_ratings, c.filter.min_ratings_per_type);
}

}  // namespace elicit::config
