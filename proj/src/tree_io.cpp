#include "elicit/tree_io.hpp"

#include <ostream>
#include <string>

#include "elicit/errors.hpp"

namespace elicit::tree {

namespace {

using nlohmann::json;

json node_json(const TreeNode& n, const Catalog& cat, int depth_limit) {
  json ids = json::array({n.query.first});
  json names = json::array({cat.item_names.at(n.query.first)});
  if (n.query.is_pair()) {
    ids.push_back(n.query.second);
    names.push_back(cat.item_names.at(n.query.second));
  }
  json branches = json::array();
  for (int s = 0; s < 3; ++s) {
    json b{{"label", to_string(slot_label(n.query.is_pair(), s))}, {"n_users", n.branch_users[s]}};
    const bool expand = depth_limit < 0 || n.depth + 1 < depth_limit;
    b["child"] = (expand && n.children[s]) ? node_json(*n.children[s], cat, depth_limit) : json(nullptr);
    branches.push_back(std::move(b));
  }
  return json{{"query", {{"kind", n.query.is_pair() ? "pair" : "single"}, {"item_ids", ids}, {"items", names},
                         {"text", describe(n.query, cat)}}},
              {"depth", n.depth},
              {"n_users", n.n_users},
              {"split_error", n.split_error},
              {"branches", std::move(branches)}};
}

void node_text(std::ostream& out, const TreeNode& n, const Catalog& cat, int depth_limit, int indent) {
  out << describe(n.query, cat) << "  (users=" << n.n_users << ", E=" << n.split_error << ")\n";
  for (int s = 0; s < 3; ++s) {
    out << std::string(static_cast<std::size_t>(indent + 2), ' ') << to_string(slot_label(n.query.is_pair(), s))
        << " [" << n.branch_users[s] << "]: ";
    const bool expand = depth_limit < 0 || n.depth + 1 < depth_limit;
    if (!n.children[s]) {
      out << "leaf\n";
    } else if (!expand) {
      out << "...\n";
    } else {
      node_text(out, *n.children[s], cat, depth_limit, indent + 2);
    }
  }
}

std::unique_ptr<TreeNode> node_from_json(const json& j) {
  auto n = std::make_unique<TreeNode>();
  const auto& ids = j.at("query").at("item_ids");
  if (ids.size() == 1) {
    n->query = Query::single(ids[0].get<ItemId>());
  } else if (ids.size() == 2) {
    n->query = Query::pair(ids[0].get<ItemId>(), ids[1].get<ItemId>());
  } else {
    throw ArgumentError("tree node query must name one or two items");
  }
  n->depth = j.at("depth").get<int>();
  n->n_users = j.at("n_users").get<std::size_t>();
  n->split_error = j.at("split_error").get<double>();
  const auto& branches = j.at("branches");
  if (branches.size() != 3) throw ArgumentError("tree node must have three branches");
  for (int s = 0; s < 3; ++s) {
    const auto& b = branches[s];
    if (branch_label_from_string(b.at("label").get<std::string>()) != slot_label(n->query.is_pair(), s))
      throw ArgumentError("branch label does not match its slot");
    n->branch_users[s] = b.at("n_users").get<std::size_t>();
    if (!b.at("child").is_null()) n->children[s] = node_from_json(b.at("child"));
  }
  return n;
}

}  // namespace

json to_json(const ElicitationTree& tree, const Catalog& catalog, int depth_limit) {
  return json{{"root", tree.root ? node_json(*tree.root, catalog, depth_limit) : json(nullptr)}};
}

void write_text(std::ostream& out, const ElicitationTree& tree, const Catalog& catalog, int depth_limit) {
  if (!tree.root) {
    out << "(empty tree)\n";
    return;
  }
  node_text(out, *tree.root, catalog, depth_limit, 0);
}

ElicitationTree tree_from_json(const json& j) {
  const auto& root = j.at("root");
  if (root.is_null()) return {};
  return ElicitationTree{node_from_json(root)};
}

}  // namespace elicit::tree
