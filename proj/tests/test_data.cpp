#include "doctest.h"

#include <set>
#include <sstream>

#include "elicit/data.hpp"
#include "elicit/errors.hpp"
#include "oracles.hpp"

using namespace elicit;
using namespace elicit::data;

namespace {

RatingMatrix parse(const std::string& text) {
  std::istringstream in(text);
  return read_ratings(in);
}

std::set<RatingMatrix::Key> keys(const RatingMatrix& m) {
  std::set<RatingMatrix::Key> out;
  for (const auto& [k, v] : m) out.insert(k);
  return out;
}

}  // namespace

TEST_CASE("load_ratings parses rows into a raw matrix") {
  auto m = parse("user_id\titem_id\titem_type\trating\nu1\ti1\tArtist\t80\nu1\ti2\tGenre\t30\n");
  CHECK(m.size() == 2);
  CHECK(m.user_ids().size() == 1);
  CHECK(m.item_ids().size() == 2);
  CHECK(m.scale() == Scale::Raw_0_100);
  CHECK(m.type_of(1) == ItemType::Genre);
  CHECK(*m.find(0, 0) == 80.0);
}

TEST_CASE("load_ratings edge cases") {
  SUBCASE("empty file") { CHECK(parse("").empty()); }
  SUBCASE("header only") { CHECK(parse("user_id\titem_id\titem_type\trating\n").empty()); }
  SUBCASE("duplicate key") {
    CHECK_THROWS_AS(parse("h\nu1\ti1\tArtist\t80\nu1\ti1\tArtist\t70\n"), DuplicateError);
  }
  SUBCASE("malformed row reports its line") {
    try {
      parse("h\nu1\ti1\tArtist\t80\nu2\ti1\tArtist\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse("h\nu1\ti1\tArtist\tabc\n"), ParseError);
    CHECK_THROWS_AS(parse("h\nu1\ti1\tPodcast\t10\n"), ParseError);
  }
  SUBCASE("rating outside 0..100") { CHECK_THROWS_AS(parse("h\nu1\ti1\tArtist\t101\n"), RangeError); }
  SUBCASE("item declared with two types") {
    CHECK_THROWS_AS(parse("h\nu1\ti1\tArtist\t10\nu2\ti1\tGenre\t10\n"), ParseError);
  }
}

TEST_CASE("write_ratings output loads back unchanged") {
  SyntheticConfig cfg;
  cfg.n_users = 20;
  cfg.n_artists = 15;
  cfg.n_genres = 4;
  cfg.density = 0.3;
  auto m = generate_synthetic(cfg).ratings;
  std::ostringstream out;
  write_ratings(out, m);
  auto back = parse(out.str());
  REQUIRE(back.size() == m.size());
  // Ids are reassigned on load, so compare by name.
  std::map<std::pair<std::string, std::string>, double> a, b;
  for (const auto& [k, v] : m) a[{m.catalog().user_names[k.first], m.catalog().item_names[k.second]}] = v;
  for (const auto& [k, v] : back) b[{back.catalog().user_names[k.first], back.catalog().item_names[k.second]}] = v;
  CHECK(a == b);
}

TEST_CASE("filter_density") {
  auto cat = oracle::make_catalog(3, 3);
  SUBCASE("zero thresholds are the identity") {
    auto m = oracle::from_table({{10, 20, std::nullopt}, {std::nullopt, 30, 40}, {50, std::nullopt, std::nullopt}});
    CHECK(filter_density(m, 0, {}) == m);
  }
  SUBCASE("hand-computed fixed point on 3x3") {
    // u2 has one rating and goes; item 2 then has a single rating and goes.
    auto m = oracle::from_table({{10, 20, 30}, {40, 50, std::nullopt}, {std::nullopt, std::nullopt, 60}});
    auto f = filter_density(m, 2, {{ItemType::Artist, 2}});
    std::set<RatingMatrix::Key> expected{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    CHECK(keys(f) == expected);
    CHECK(filter_density(f, 2, {{ItemType::Artist, 2}}) == f);
  }
  SUBCASE("thresholds apply per item type") {
    auto c = oracle::make_catalog(3, {ItemType::Artist, ItemType::Genre});
    auto m = oracle::from_table({{10, 20}, {30, std::nullopt}, {50, std::nullopt}}, Scale::Raw_0_100, c);
    auto f = filter_density(m, 0, {{ItemType::Genre, 2}});
    CHECK(f.size() == 3);
    CHECK_FALSE(f.contains(0, 1));
  }
}

TEST_CASE("filter_density output is a fixed point on random data") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    auto m = oracle::from_table(oracle::random_table(rng, 12, 9, 0.5));
    auto f = filter_density(m, 4, {{ItemType::Artist, 3}});
    CHECK(filter_density(f, 4, {{ItemType::Artist, 3}}) == f);
    for (UserId u : f.user_ids()) CHECK(f.row(u).size() >= 4);
  }
}

TEST_CASE("split_users") {
  SyntheticConfig cfg;
  cfg.n_users = 100;
  cfg.n_artists = 20;
  cfg.n_genres = 2;
  auto m = generate_synthetic(cfg).ratings;

  auto s = split_users(m, 0.9, 11);
  CHECK(s.cold_users.size() == 90);
  CHECK(s.warm_users.size() == 10);
  CHECK(s.cold.size() + s.warm.size() == m.size());
  for (const auto& [k, v] : s.cold) CHECK(std::binary_search(s.cold_users.begin(), s.cold_users.end(), k.first));

  auto none = split_users(m, 0.0, 11);
  CHECK(none.cold.empty());
  CHECK(none.warm == m);

  auto again = split_users(m, 0.9, 11);
  CHECK(again.cold_users == s.cold_users);
  CHECK(again.cold == s.cold);
  CHECK(split_users(m, 0.9, 12).cold_users != s.cold_users);
  CHECK_THROWS_AS(split_users(m, 1.5, 1), ArgumentError);
}

TEST_CASE("re_split counts and disjointness by enumeration") {
  // Five users with 0..6 artist ratings and some genre ratings.
  auto cat = oracle::make_catalog(5, {ItemType::Artist, ItemType::Artist, ItemType::Artist, ItemType::Artist,
                                      ItemType::Artist, ItemType::Artist, ItemType::Genre, ItemType::Genre});
  oracle::Table t(5, std::vector<std::optional<double>>(8));
  for (int u = 0; u < 5; ++u) {
    for (int i = 0; i < u + 2 && i < 6; ++i) t[u][i] = 10.0 * (u + i);
    t[u][6] = 55;
    if (u % 2) t[u][7] = 45;
  }
  auto d = oracle::from_table(t, Scale::Raw_0_100, cat);
  auto s = re_split(d, 1, 2, ItemType::Artist, 3);

  // u0 has 2 artist ratings < 3 needed.
  CHECK(s.dropped_users == std::vector<UserId>{0});
  CHECK(s.retained_users == std::vector<UserId>{1, 2, 3, 4});
  std::set<RatingMatrix::Key> all;
  for (const auto* part : {&s.known, &s.pool, &s.test})
    for (const auto& [k, v] : *part) CHECK(all.insert(k).second);  // pairwise disjoint
  std::set<RatingMatrix::Key> expected;
  for (const auto& [k, v] : d)
    if (k.first != 0) expected.insert(k);
  CHECK(all == expected);
  for (UserId u : s.retained_users) {
    int nk = 0, nt = 0;
    for (const auto& [k, v] : s.known)
      if (k.first == u) {
        ++nk;
        CHECK(d.type_of(k.second) == ItemType::Artist);
      }
    for (const auto& [k, v] : s.test)
      if (k.first == u) {
        ++nt;
        CHECK(d.type_of(k.second) == ItemType::Artist);
      }
    CHECK(nk == 1);
    CHECK(nt == 2);
  }
  for (const auto& [k, v] : s.known) CHECK(*d.find(k.first, k.second) == v);
}

TEST_CASE("re_split boundary and errors") {
  auto cat = oracle::make_catalog(1, {ItemType::Artist, ItemType::Artist, ItemType::Artist, ItemType::Genre});
  auto d = oracle::from_table({{10, 20, 30, 40}}, Scale::Raw_0_100, cat);
  auto s = re_split(d, 1, 2, ItemType::Artist, 1);
  REQUIRE(s.pool.size() == 1);
  CHECK(s.pool.contains(0, 3));
  CHECK_THROWS_AS(re_split(d, -1, 2, ItemType::Artist, 1), ArgumentError);

  auto again = re_split(d, 1, 2, ItemType::Artist, 1);
  CHECK(again.known == s.known);
  CHECK(again.test == s.test);
}

TEST_CASE("semi_binarize") {
  auto m = oracle::from_table({{50.0, 49.999, std::nullopt}, {100.0, 0.0, 75.0}});
  auto b = semi_binarize(m);
  CHECK(b.scale() == Scale::SemiBinary);
  CHECK(*b.find(0, 0) == 1.0);
  CHECK(*b.find(0, 1) == 0.01);
  CHECK_FALSE(b.contains(0, 2));
  CHECK(*b.find(1, 1) == 0.01);
  CHECK(b.same_keys(m));
  CHECK_THROWS_AS(semi_binarize(b), ArgumentError);
}

TEST_CASE("generate_synthetic") {
  SyntheticConfig cfg;
  cfg.n_users = 30;
  cfg.n_artists = 20;
  cfg.n_genres = 5;

  SUBCASE("density 1 observes every cell") {
    cfg.density = 1.0;
    auto d = generate_synthetic(cfg);
    CHECK(d.ratings.size() == 30u * 25u);
  }
  SUBCASE("same seed is bit-identical") {
    CHECK(generate_synthetic(cfg).ratings == generate_synthetic(cfg).ratings);
    auto other = cfg;
    other.seed = cfg.seed + 1;
    CHECK_FALSE(generate_synthetic(other).ratings == generate_synthetic(cfg).ratings);
  }
  SUBCASE("noise-free ratings are clamped latent dot products") {
    cfg.noise_sd = 0.0;
    auto d = generate_synthetic(cfg);
    for (const auto& [k, v] : d.ratings) {
      const auto& p = d.user_factors[k.first];
      const auto& q = d.item_factors[k.second];
      double dot = 0.0;
      for (std::size_t f = 0; f < p.size(); ++f) dot += p[f] * q[f];
      CHECK(v == std::min(100.0, std::max(0.0, dot)));
    }
  }
  SUBCASE("genre taste predicts artist taste") {
    cfg.n_users = 300;
    cfg.density = 1.0;
    cfg.noise_sd = 0.0;
    auto d = generate_synthetic(cfg);
    // Correlation between a user's rating of an artist and of its genre.
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0, n = 0;
    for (int u = 0; u < cfg.n_users; ++u)
      for (int a = 0; a < cfg.n_artists; ++a) {
        double x = *d.ratings.find(u, a);
        double y = *d.ratings.find(u, cfg.n_artists + d.artist_genre[a]);
        sx += x, sy += y, sxx += x * x, syy += y * y, sxy += x * y, n += 1;
      }
    double r = (sxy - sx * sy / n) / std::sqrt((sxx - sx * sx / n) * (syy - sy * sy / n));
    CHECK(r > 0.5);
  }
  SUBCASE("invalid configs") {
    cfg.density = 0.0;
    CHECK_THROWS_AS(generate_synthetic(cfg), ArgumentError);
    cfg.density = 0.5;
    cfg.n_users = 0;
    CHECK_THROWS_AS(generate_synthetic(cfg), ArgumentError);
  }
}

TEST_CASE("RatingMatrix invariants") {
  auto cat = oracle::make_catalog(2, 2);
  RatingMatrix m(cat, Scale::SemiBinary);
  m.insert(0, 0, 1.0);
  CHECK_THROWS_AS(m.insert(0, 0, 1.0), DuplicateError);
  CHECK_THROWS_AS(m.insert(0, 1, 0.5), RangeError);
  CHECK_THROWS_AS(m.insert(5, 1, 1.0), ArgumentError);
  RatingIndex idx(m);
  CHECK(*idx.find(0, 0) == 1.0);
  CHECK_FALSE(idx.find(1, 0));
}
