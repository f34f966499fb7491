#pragma once

#include <iosfwd>

#include "json.hpp"

#include "elicit/tree.hpp"

namespace elicit::tree {

// depth_limit < 0 renders the whole tree; depth_limit = 1 renders the root
// with a user count per branch and no children.
nlohmann::json to_json(const ElicitationTree& tree, const Catalog& catalog, int depth_limit = -1);
void write_text(std::ostream& out, const ElicitationTree& tree, const Catalog& catalog, int depth_limit = -1);

// Inverse of to_json() for a full (unlimited) dump.
ElicitationTree tree_from_json(const nlohmann::json& j);

}  // namespace elicit::tree
