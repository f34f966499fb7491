#include "elicit/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <unordered_map>

#include "elicit/errors.hpp"

namespace elicit::data {

namespace {

std::vector<std::string_view> split_fields(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

struct RawRow {
  int user;
  int item;
  double value;
  std::size_t line;
};

}  // namespace

RatingMatrix read_ratings(std::istream& in, const LoadOptions& opts) {
  auto catalog = std::make_shared<Catalog>();
  std::unordered_map<std::string, int> user_ids;
  std::unordered_map<std::string, int> item_ids;
  std::vector<RawRow> rows;
  std::set<std::pair<int, int>> seen;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && opts.has_header) continue;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    auto f = split_fields(sv, opts.delimiter);
    if (f.size() != 4) {
      throw ParseError(lineno, "expected 4 fields (user_id, item_id, item_type, rating), got " +
                                   std::to_string(f.size()));
    }
    for (auto& field : f) field = trim(field);
    if (f[0].empty() || f[1].empty()) throw ParseError(lineno, "empty user or item id");

    ItemType type;
    try {
      type = item_type_from_string(f[2]);
    } catch (const ArgumentError& e) {
      throw ParseError(lineno, e.what());
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), value);
    if (ec != std::errc() || ptr != f[3].data() + f[3].size())
      throw ParseError(lineno, "rating '" + std::string(f[3]) + "' is not a number");
    if (!valid_on_scale(value, Scale::Raw_0_100))
      throw RangeError("line " + std::to_string(lineno) + ": rating " + std::string(f[3]) +
                       " outside [0, 100]");

    auto [uit, unew] = user_ids.try_emplace(std::string(f[0]), static_cast<int>(user_ids.size()));
    if (unew) catalog->user_names.emplace_back(f[0]);
    auto [iit, inew] = item_ids.try_emplace(std::string(f[1]), static_cast<int>(item_ids.size()));
    if (inew) {
      catalog->item_names.emplace_back(f[1]);
      catalog->item_types.push_back(type);
    } else if (catalog->item_types[iit->second] != type) {
      throw ParseError(lineno, "item '" + std::string(f[1]) + "' already declared as " +
                                   std::string(to_string(catalog->item_types[iit->second])));
    }
    if (!seen.emplace(uit->second, iit->second).second) {
      throw DuplicateError("line " + std::to_string(lineno) + ": duplicate rating for user '" +
                           std::string(f[0]) + "' item '" + std::string(f[1]) + "'");
    }
    rows.push_back({uit->second, iit->second, value, lineno});
  }

  RatingMatrix m(std::move(catalog), Scale::Raw_0_100);
  for (const auto& r : rows) m.insert(r.user, r.item, r.value);
  return m;
}

RatingMatrix load_ratings(const std::filesystem::path& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ratings file " + path.string());
  return read_ratings(in, opts);
}

void write_ratings(std::ostream& out, const RatingMatrix& m) {
  const auto& cat = m.catalog();
  out << "user_id\titem_id\titem_type\trating\n";
  char buf[64];
  for (const auto& [key, v] : m) {
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out << cat.user_names[key.first] << '\t' << cat.item_names[key.second] << '\t'
        << to_string(cat.item_types[key.second]) << '\t' << std::string_view(buf, res.ptr - buf)
        << '\n';
  }
}

void save_ratings(const std::filesystem::path& path, const RatingMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write ratings file " + path.string());
  write_ratings(out, m);
  if (!out) throw std::runtime_error("error while writing " + path.string());
}

RatingMatrix filter_density(const RatingMatrix& m, std::size_t min_user_ratings,
                            const TypeThresholds& min_ratings_per_type) {
  const auto& cat = m.catalog();
  std::vector<std::size_t> item_min(cat.n_items(), 0);
  for (std::size_t i = 0; i < cat.n_items(); ++i) {
    auto it = min_ratings_per_type.find(cat.item_types[i]);
    if (it != min_ratings_per_type.end()) item_min[i] = it->second;
  }

  RatingMatrix cur = m;
  while (true) {
    std::vector<std::size_t> per_user(cat.n_users(), 0), per_item(cat.n_items(), 0);
    for (const auto& [key, v] : cur) {
      ++per_user[key.first];
      ++per_item[key.second];
    }
    RatingMatrix next = cur.empty_like();
    for (const auto& [key, v] : cur) {
      if (per_user[key.first] >= min_user_ratings && per_item[key.second] >= item_min[key.second])
        next.insert(key.first, key.second, v);
    }
    if (next.size() == cur.size()) return next;
    cur = std::move(next);
  }
}

UserSplit split_users(const RatingMatrix& m, double cold_fraction, std::uint64_t seed) {
  if (!(cold_fraction >= 0.0 && cold_fraction <= 1.0))
    throw ArgumentError("cold_fraction must lie in [0, 1]");
  std::vector<UserId> users = m.user_ids();
  std::mt19937_64 rng(seed);
  std::shuffle(users.begin(), users.end(), rng);
  const auto n_cold = static_cast<std::size_t>(std::llround(cold_fraction * users.size()));

  UserSplit out{m.empty_like(), m.empty_like(), {}, {}};
  out.cold_users.assign(users.begin(), users.begin() + n_cold);
  out.warm_users.assign(users.begin() + n_cold, users.end());
  std::sort(out.cold_users.begin(), out.cold_users.end());
  std::sort(out.warm_users.begin(), out.warm_users.end());

  std::vector<char> is_cold(m.catalog().n_users(), 0);
  for (UserId u : out.cold_users) is_cold[u] = 1;
  for (const auto& [key, v] : m) (is_cold[key.first] ? out.cold : out.warm).insert(key.first, key.second, v);
  return out;
}

ElicitationSplit re_split(const RatingMatrix& cold, int k_per_user, int t_per_user,
                          ItemType target_type, std::uint64_t seed) {
  if (k_per_user < 0 || t_per_user < 0)
    throw ArgumentError("k_per_user and t_per_user must be non-negative");
  ElicitationSplit out{cold.empty_like(), cold.empty_like(), cold.empty_like(), {}, {}};
  std::mt19937_64 rng(seed);
  const auto need = static_cast<std::size_t>(k_per_user) + static_cast<std::size_t>(t_per_user);

  for (UserId u : cold.user_ids()) {
    auto row = cold.row(u);
    std::vector<std::pair<ItemId, double>> target;
    for (const auto& cell : row)
      if (cold.type_of(cell.first) == target_type) target.push_back(cell);
    if (target.size() < need) {
      out.dropped_users.push_back(u);
      continue;
    }
    out.retained_users.push_back(u);
    std::shuffle(target.begin(), target.end(), rng);
    std::set<ItemId> placed;
    for (std::size_t j = 0; j < need; ++j) {
      auto& dest = j < static_cast<std::size_t>(k_per_user) ? out.known : out.test;
      dest.insert(u, target[j].first, target[j].second);
      placed.insert(target[j].first);
    }
    for (const auto& [item, v] : row)
      if (!placed.count(item)) out.pool.insert(u, item, v);
  }
  return out;
}

RatingMatrix semi_binarize(const RatingMatrix& m, double threshold) {
  if (m.scale() != Scale::Raw_0_100)
    throw ArgumentError("semi_binarize expects a raw 0-100 matrix");
  RatingMatrix out(m.catalog_ptr(), Scale::SemiBinary);
  for (const auto& [key, v] : m)
    out.insert(key.first, key.second, v >= threshold ? kSemiBinaryLike : kSemiBinaryDislike);
  return out;
}

void validate(const SyntheticConfig& cfg) {
  if (cfg.n_users < 1 || cfg.n_artists < 1 || cfg.n_genres < 1 || cfg.n_factors < 1 ||
      cfg.n_clusters < 1)
    throw ArgumentError("synthetic counts must all be >= 1");
  if (!(cfg.density > 0.0 && cfg.density <= 1.0))
    throw ArgumentError("synthetic density must lie in (0, 1]");
  if (!(cfg.noise_sd >= 0.0)) throw ArgumentError("noise_sd must be >= 0");
  if (!(cfg.popularity_skew >= 0.0) || !(cfg.genre_popularity > 0.0) || !(cfg.taste_propensity >= 0.0))
    throw ArgumentError("popularity parameters must be non-negative");
}

SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const int f = cfg.n_factors;
  const int n_items = cfg.n_artists + cfg.n_genres;
  constexpr double kMidpoint = 50.0;
  // Item vectors scaled so latent dot products spread roughly +-25 around the midpoint.
  const double item_sd = 25.0 / std::sqrt(static_cast<double>(f));

  auto catalog = std::make_shared<Catalog>();
  for (int u = 0; u < cfg.n_users; ++u) catalog->user_names.push_back("u" + std::to_string(u));
  for (int a = 0; a < cfg.n_artists; ++a) {
    catalog->item_names.push_back("a" + std::to_string(a));
    catalog->item_types.push_back(ItemType::Artist);
  }
  for (int g = 0; g < cfg.n_genres; ++g) {
    catalog->item_names.push_back("g" + std::to_string(g));
    catalog->item_types.push_back(ItemType::Genre);
  }

  SyntheticData out;
  std::vector<std::vector<double>> genre_vec(cfg.n_genres, std::vector<double>(f));
  for (auto& g : genre_vec)
    for (auto& x : g) x = item_sd * normal(rng);

  out.item_factors.assign(n_items, std::vector<double>(f + 1));
  out.artist_genre.resize(cfg.n_artists);
  for (int a = 0; a < cfg.n_artists; ++a) {
    const int g = static_cast<int>(rng() % static_cast<std::uint64_t>(cfg.n_genres));
    out.artist_genre[a] = g;
    for (int k = 0; k < f; ++k) out.item_factors[a][k] = genre_vec[g][k] + 0.5 * item_sd * normal(rng);
    out.item_factors[a][f] = kMidpoint;
  }
  for (int g = 0; g < cfg.n_genres; ++g) {
    auto& q = out.item_factors[cfg.n_artists + g];
    std::copy(genre_vec[g].begin(), genre_vec[g].end(), q.begin());
    q[f] = kMidpoint;
  }

  std::vector<std::vector<double>> centroids(cfg.n_clusters, std::vector<double>(f));
  for (auto& c : centroids)
    for (auto& x : c) x = normal(rng);
  out.user_factors.assign(cfg.n_users, std::vector<double>(f + 1));
  for (int u = 0; u < cfg.n_users; ++u) {
    const auto& c = centroids[rng() % static_cast<std::uint64_t>(cfg.n_clusters)];
    for (int k = 0; k < f; ++k) out.user_factors[u][k] = c[k] + 0.3 * normal(rng);
    out.user_factors[u][f] = 1.0;
  }

  std::vector<double> propensity(n_items);
  for (int i = 0; i < n_items; ++i) {
    propensity[i] = std::exp(cfg.popularity_skew * normal(rng));
    if (i >= cfg.n_artists) propensity[i] *= cfg.genre_popularity;
  }

  const int per_user = std::max(1, static_cast<int>(std::lround(cfg.density * n_items)));
  out.ratings = RatingMatrix(catalog, Scale::Raw_0_100);
  std::vector<std::pair<double, int>> keys(n_items);
  std::vector<double> latent(n_items);
  for (int u = 0; u < cfg.n_users; ++u) {
    for (int i = 0; i < n_items; ++i) {
      double r = 0.0;
      for (int k = 0; k <= f; ++k) r += out.user_factors[u][k] * out.item_factors[i][k];
      latent[i] = r;
    }
    // Weighted sampling without replacement: keep the largest log(U) / w.
    for (int i = 0; i < n_items; ++i) {
      const double w = propensity[i] * std::exp(cfg.taste_propensity * (latent[i] - kMidpoint) / 25.0);
      keys[i] = {std::log(unit(rng) + 1e-300) / w, i};
    }
    std::partial_sort(keys.begin(), keys.begin() + per_user, keys.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    std::vector<int> chosen;
    for (int j = 0; j < per_user; ++j) chosen.push_back(keys[j].second);
    std::sort(chosen.begin(), chosen.end());
    for (int i : chosen) {
      double r = latent[i];
      if (cfg.noise_sd > 0.0) r += cfg.noise_sd * normal(rng);
      out.ratings.insert(u, i, std::clamp(r, 0.0, 100.0));
    }
  }
  return out;
}

}  // namespace elicit::data
