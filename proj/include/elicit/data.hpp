#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <vector>

#include "elicit/rating_matrix.hpp"

namespace elicit::data {

struct LoadOptions {
  char delimiter = '\t';
  bool has_header = true;
};

// Reads (user_id, item_id, item_type, rating) rows into a raw-scale matrix.
// Malformed rows throw ParseError, out-of-range ratings RangeError, repeated
// (user, item) pairs DuplicateError. An empty file yields an empty matrix.
RatingMatrix load_ratings(const std::filesystem::path& path, const LoadOptions& opts = {});
RatingMatrix read_ratings(std::istream& in, const LoadOptions& opts = {});

// Writes the same format load_ratings() accepts, header included. Values are
// printed in shortest round-trip form.
void write_ratings(std::ostream& out, const RatingMatrix& m);
void save_ratings(const std::filesystem::path& path, const RatingMatrix& m);

using TypeThresholds = std::map<ItemType, std::size_t>;

// Repeatedly drops users with fewer than `min_user_ratings` entries and items
// with fewer than their type's threshold until nothing changes. Types absent
// from `min_ratings_per_type` are unconstrained.
RatingMatrix filter_density(const RatingMatrix& m, std::size_t min_user_ratings,
                            const TypeThresholds& min_ratings_per_type);

struct UserSplit {
  RatingMatrix cold;
  RatingMatrix warm;
  std::vector<UserId> cold_users;
  std::vector<UserId> warm_users;
};

// Partitions users (not ratings) at random; round(cold_fraction * |users|)
// become cold-start users.
UserSplit split_users(const RatingMatrix& m, double cold_fraction, std::uint64_t seed);

struct ElicitationSplit {
  RatingMatrix known;    // K
  RatingMatrix pool;     // X
  RatingMatrix test;     // T
  std::vector<UserId> retained_users;
  std::vector<UserId> dropped_users;  // too few target-type ratings
};

// Per cold user: k_per_user random target-type ratings go to K, t_per_user
// further target-type ratings to T, the rest (any type) to X. Users without
// k_per_user + t_per_user target ratings are dropped entirely. Only the key
// set and the seed decide the split, never rating values.
ElicitationSplit re_split(const RatingMatrix& cold, int k_per_user, int t_per_user,
                          ItemType target_type, std::uint64_t seed);

// value >= threshold -> 1, below -> 0.01, missing stays missing.
RatingMatrix semi_binarize(const RatingMatrix& m, double threshold = 50.0);

struct SyntheticConfig {
  int n_users = 500;
  int n_artists = 300;
  int n_genres = 30;
  int n_factors = 8;
  double density = 0.3;
  double noise_sd = 5.0;
  std::uint64_t seed = 42;
  // Users are drawn around this many taste centroids.
  int n_clusters = 6;
  // Log-normal spread of per-item observation propensity.
  double popularity_skew = 1.0;
  // Genres are this many times likelier to be rated than an average artist.
  double genre_popularity = 3.0;
  // Users are likelier to have rated items they like: sampling weight is
  // scaled by exp(taste_propensity * (latent rating - 50) / 25).
  double taste_propensity = 0.0;
};

void validate(const SyntheticConfig& cfg);

struct SyntheticData {
  RatingMatrix ratings;
  // Augmented latent vectors (n_factors + 1 columns): the last user coordinate
  // is 1 and the last item coordinate is the rating midpoint, so the noiseless
  // rating of (u, i) is clamp(dot(user_factors[u], item_factors[i]), 0, 100).
  std::vector<std::vector<double>> user_factors;
  std::vector<std::vector<double>> item_factors;
  std::vector<int> artist_genre;  // genre index of each artist
};

// Artists are perturbations of their genre's latent vector, so a user's genre
// ratings predict their artist ratings. Every user rates exactly
// max(1, round(density * (n_artists + n_genres))) items.
SyntheticData generate_synthetic(const SyntheticConfig& cfg);

}  // namespace elicit::data
