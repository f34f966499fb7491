#include "elicit/rating_matrix.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "elicit/errors.hpp"

namespace elicit {

std::string_view to_string(ItemType t) {
  switch (t) {
    case ItemType::Artist: return "Artist";
    case ItemType::Genre: return "Genre";
    case ItemType::Track: return "Track";
    case ItemType::Album: return "Album";
  }
  return "?";
}

ItemType item_type_from_string(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "artist") return ItemType::Artist;
  if (lower == "genre") return ItemType::Genre;
  if (lower == "track") return ItemType::Track;
  if (lower == "album") return ItemType::Album;
  throw ArgumentError("unknown item type '" + std::string(name) + "'");
}

std::string_view to_string(Scale s) {
  return s == Scale::Raw_0_100 ? "raw_0_100" : "semi_binary";
}

ScaleRange scale_range(Scale s) {
  if (s == Scale::Raw_0_100) return {0.0, 100.0};
  return {kSemiBinaryDislike, kSemiBinaryLike};
}

bool valid_on_scale(double value, Scale s) {
  if (!std::isfinite(value)) return false;
  if (s == Scale::Raw_0_100) return value >= 0.0 && value <= 100.0;
  return value == kSemiBinaryLike || value == kSemiBinaryDislike;
}

RatingMatrix::RatingMatrix(std::shared_ptr<const Catalog> catalog, Scale scale)
    : catalog_(std::move(catalog)), scale_(scale) {
  if (!catalog_) throw ArgumentError("RatingMatrix needs a catalog");
}

void RatingMatrix::check(UserId user, ItemId item, double value) const {
  if (user < 0 || static_cast<std::size_t>(user) >= catalog_->n_users())
    throw ArgumentError("user id " + std::to_string(user) + " not in catalog");
  if (item < 0 || static_cast<std::size_t>(item) >= catalog_->n_items())
    throw ArgumentError("item id " + std::to_string(item) + " not in catalog");
  if (!valid_on_scale(value, scale_)) {
    std::ostringstream os;
    os << "rating " << value << " is not valid on scale " << to_string(scale_);
    throw RangeError(os.str());
  }
}

void RatingMatrix::insert(UserId user, ItemId item, double value) {
  check(user, item, value);
  auto [it, inserted] = entries_.emplace(Key{user, item}, value);
  if (!inserted) {
    throw DuplicateError("duplicate rating for user '" + catalog_->user_names[user] +
                         "' item '" + catalog_->item_names[item] + "'");
  }
}

void RatingMatrix::assign(UserId user, ItemId item, double value) {
  check(user, item, value);
  entries_[{user, item}] = value;
}

bool RatingMatrix::erase(UserId user, ItemId item) { return entries_.erase({user, item}) > 0; }

std::optional<double> RatingMatrix::find(UserId user, ItemId item) const {
  auto it = entries_.find({user, item});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<UserId> RatingMatrix::user_ids() const {
  std::vector<UserId> out;
  for (const auto& [key, v] : entries_) {
    if (out.empty() || out.back() != key.first) out.push_back(key.first);
  }
  return out;
}

std::vector<ItemId> RatingMatrix::item_ids() const {
  std::vector<char> seen(catalog_->n_items(), 0);
  for (const auto& [key, v] : entries_) seen[key.second] = 1;
  std::vector<ItemId> out;
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (seen[i]) out.push_back(static_cast<ItemId>(i));
  return out;
}

std::vector<std::pair<ItemId, double>> RatingMatrix::row(UserId user) const {
  std::vector<std::pair<ItemId, double>> out;
  for (auto it = entries_.lower_bound({user, 0}); it != entries_.end() && it->first.first == user; ++it)
    out.emplace_back(it->first.second, it->second);
  return out;
}

RatingMatrix RatingMatrix::with_scale(Scale scale) const {
  RatingMatrix out(catalog_, scale);
  for (const auto& [key, v] : entries_) out.insert(key.first, key.second, v);
  return out;
}

void RatingMatrix::merge(const RatingMatrix& other) {
  for (const auto& [key, v] : other.entries_) insert(key.first, key.second, v);
}

bool RatingMatrix::same_keys(const RatingMatrix& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  return std::equal(entries_.begin(), entries_.end(), other.entries_.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; });
}

RatingIndex::RatingIndex(const RatingMatrix& m) {
  const auto& cat = m.catalog();
  const std::size_t nu = cat.n_users();
  const std::size_t ni = cat.n_items();
  row_start_.assign(nu + 1, 0);
  col_start_.assign(ni + 1, 0);
  for (const auto& [key, v] : m) {
    ++row_start_[key.first + 1];
    ++col_start_[key.second + 1];
  }
  for (std::size_t u = 0; u < nu; ++u) row_start_[u + 1] += row_start_[u];
  for (std::size_t i = 0; i < ni; ++i) col_start_[i + 1] += col_start_[i];

  row_cells_.resize(m.size());
  col_cells_.resize(m.size());
  std::vector<std::size_t> col_fill(col_start_.begin(), col_start_.end() - 1);
  std::size_t r = 0;
  // Entries are (user, item)-ordered, so rows fill sequentially and each
  // column receives its users in ascending order.
  for (const auto& [key, v] : m) {
    row_cells_[r++] = {key.second, v};
    col_cells_[col_fill[key.second]++] = {key.first, v};
  }
}

std::optional<double> RatingIndex::find(UserId u, ItemId i) const {
  auto cells = row(u);
  auto it = std::lower_bound(cells.begin(), cells.end(), i,
                             [](const Cell& c, ItemId id) { return c.id < id; });
  if (it == cells.end() || it->id != i) return std::nullopt;
  return it->value;
}

}  // namespace elicit
