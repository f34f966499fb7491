#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace elicit {

using UserId = std::int32_t;
using ItemId = std::int32_t;

enum class ItemType : std::uint8_t { Artist, Genre, Track, Album };

std::string_view to_string(ItemType t);
// Case-insensitive. Throws ArgumentError on an unknown name.
ItemType item_type_from_string(std::string_view name);

enum class Scale : std::uint8_t { Raw_0_100, SemiBinary };

std::string_view to_string(Scale s);

struct ScaleRange {
  double lo;
  double hi;
};

ScaleRange scale_range(Scale s);

inline constexpr double kSemiBinaryLike = 1.0;
inline constexpr double kSemiBinaryDislike = 0.01;

// Whether `value` is a legal rating on `s`.
bool valid_on_scale(double value, Scale s);

// Names and item types of every user and item a dataset may mention. Shared,
// immutable, and referenced by all matrices derived from the same source.
struct Catalog {
  std::vector<std::string> user_names;
  std::vector<std::string> item_names;
  std::vector<ItemType> item_types;

  std::size_t n_users() const { return user_names.size(); }
  std::size_t n_items() const { return item_names.size(); }
};

struct Rating {
  UserId user;
  ItemId item;
  double value;

  friend bool operator==(const Rating&, const Rating&) = default;
};

// Sparse user x item ratings on a declared scale. Entries are kept ordered by
// (user, item) so iteration is deterministic and a user's row is contiguous.
class RatingMatrix {
 public:
  using Key = std::pair<UserId, ItemId>;
  using Entries = std::map<Key, double>;

  RatingMatrix() : RatingMatrix(std::make_shared<Catalog>(), Scale::Raw_0_100) {}
  RatingMatrix(std::shared_ptr<const Catalog> catalog, Scale scale);

  // Throws DuplicateError if (user, item) is present, RangeError if the value
  // is illegal on this scale, ArgumentError if user or item is not in the catalog.
  void insert(UserId user, ItemId item, double value);
  // Like insert() but overwrites an existing value.
  void assign(UserId user, ItemId item, double value);
  bool erase(UserId user, ItemId item);

  std::optional<double> find(UserId user, ItemId item) const;
  bool contains(UserId user, ItemId item) const { return entries_.count({user, item}) > 0; }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const Entries& entries() const { return entries_; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  // Users / items with at least one entry, ascending.
  std::vector<UserId> user_ids() const;
  std::vector<ItemId> item_ids() const;
  std::vector<std::pair<ItemId, double>> row(UserId user) const;

  ItemType type_of(ItemId item) const { return catalog_->item_types.at(item); }
  Scale scale() const { return scale_; }
  const Catalog& catalog() const { return *catalog_; }
  std::shared_ptr<const Catalog> catalog_ptr() const { return catalog_; }

  // Empty matrix sharing this catalog and scale.
  RatingMatrix empty_like() const { return RatingMatrix(catalog_, scale_); }
  RatingMatrix with_scale(Scale scale) const;

  // Entries of `other` are added; a key present in both is a DuplicateError.
  void merge(const RatingMatrix& other);

  bool same_keys(const RatingMatrix& other) const;
  friend bool operator==(const RatingMatrix& a, const RatingMatrix& b) {
    return a.scale_ == b.scale_ && a.entries_ == b.entries_;
  }

 private:
  void check(UserId user, ItemId item, double value) const;

  std::shared_ptr<const Catalog> catalog_;
  Scale scale_;
  Entries entries_;
};

// Compressed row/column view of a matrix for the hot loops of tree building
// and baseline scoring. Rows and columns are indexed by id over the full
// catalog; ids without entries have empty spans.
class RatingIndex {
 public:
  struct Cell {
    std::int32_t id;  // item id in a row, user id in a column
    double value;
  };

  explicit RatingIndex(const RatingMatrix& m);

  std::span<const Cell> row(UserId u) const {
    return {row_cells_.data() + row_start_[u], row_cells_.data() + row_start_[u + 1]};
  }
  std::span<const Cell> column(ItemId i) const {
    return {col_cells_.data() + col_start_[i], col_cells_.data() + col_start_[i + 1]};
  }
  std::optional<double> find(UserId u, ItemId i) const;

  std::size_t n_users() const { return row_start_.size() - 1; }
  std::size_t n_items() const { return col_start_.size() - 1; }

 private:
  std::vector<std::size_t> row_start_;
  std::vector<Cell> row_cells_;
  std::vector<std::size_t> col_start_;
  std::vector<Cell> col_cells_;
};

}  // namespace elicit
