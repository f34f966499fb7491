#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "elicit/baselines.hpp"
#include "elicit/config.hpp"
#include "elicit/data.hpp"
#include "elicit/errors.hpp"
#include "elicit/mf.hpp"
#include "elicit/simulation.hpp"
#include "elicit/tree.hpp"
#include "elicit/tree_io.hpp"

namespace py = pybind11;
using namespace elicit;

namespace {

Scale parse_scale(const std::string& s) {
  if (s == "raw_0_100") return Scale::Raw_0_100;
  if (s == "semi_binary") return Scale::SemiBinary;
  throw ArgumentError("scale must be 'raw_0_100' or 'semi_binary'");
}

// (user name, item name, item type, value) rows, ids assigned in first-seen order.
RatingMatrix from_records(const std::vector<std::tuple<std::string, std::string, std::string, double>>& rows,
                          const std::string& scale) {
  std::ostringstream tsv;
  tsv.precision(17);
  for (const auto& [u, i, t, v] : rows) tsv << u << '\t' << i << '\t' << t << '\t' << v << '\n';
  std::istringstream in(tsv.str());
  auto m = data::read_ratings(in, data::LoadOptions{'\t', false});
  if (parse_scale(scale) == Scale::Raw_0_100) return m;
  RatingMatrix out(m.catalog_ptr(), Scale::SemiBinary);
  for (const auto& [k, v] : m) out.insert(k.first, k.second, v);
  return out;
}

std::vector<std::tuple<std::string, std::string, std::string, double>> to_records(const RatingMatrix& m) {
  std::vector<std::tuple<std::string, std::string, std::string, double>> out;
  const auto& c = m.catalog();
  for (const auto& [k, v] : m)
    out.emplace_back(c.user_names[k.first], c.item_names[k.second], std::string(to_string(c.item_types[k.second])), v);
  return out;
}

tree::Query to_query(const py::object& o) {
  if (py::isinstance<py::int_>(o)) return tree::Query::single(o.cast<ItemId>());
  auto t = o.cast<std::pair<ItemId, ItemId>>();
  return tree::Query::pair(t.first, t.second);
}

py::object from_query(const tree::Query& q) {
  if (q.is_pair()) return py::make_tuple(q.first, q.second);
  return py::int_(q.first);
}

std::vector<ItemType> parse_types(const std::vector<std::string>& names) {
  std::vector<ItemType> out;
  for (const auto& n : names) out.push_back(item_type_from_string(n));
  return out;
}

tree::TreeConfig tree_config(const std::string& mode, const std::string& pair_strategy,
                             const std::vector<std::string>& candidate_types, const std::string& target_type,
                             int pool_size, int max_depth, int min_node_users, double love_threshold) {
  tree::TreeConfig c;
  if (mode == "single") c.mode = tree::Mode::Single;
  else if (mode == "hybrid") c.mode = tree::Mode::Hybrid;
  else if (mode == "pairwise") c.mode = tree::Mode::Pairwise;
  else throw ArgumentError("mode must be single, hybrid or pairwise");
  if (pair_strategy == "first_two") c.pair_strategy = tree::PairStrategy::FirstTwo;
  else if (pair_strategy == "first_plus_most_similar") c.pair_strategy = tree::PairStrategy::FirstPlusMostSimilar;
  else throw ArgumentError("pair_strategy must be first_two or first_plus_most_similar");
  c.candidate_types = parse_types(candidate_types);
  c.target_type = item_type_from_string(target_type);
  c.pool_size = pool_size;
  c.max_depth = max_depth;
  c.min_node_users = min_node_users;
  c.love_threshold = love_threshold;
  return c;
}

struct PyTree {
  tree::ElicitationTree tree;
  std::shared_ptr<const Catalog> catalog;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Decision-tree rating elicitation core";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ProtocolError>(m, "ProtocolError", PyExc_RuntimeError);
  py::register_exception<DuplicateError>(m, "DuplicateError", PyExc_ValueError);

  py::class_<RatingMatrix>(m, "RatingMatrix")
      .def_static("from_records", &from_records, py::arg("rows"), py::arg("scale") = "raw_0_100")
      .def("records", &to_records)
      .def("__len__", &RatingMatrix::size)
      .def_property_readonly("scale", [](const RatingMatrix& r) { return std::string(to_string(r.scale())); })
      .def("user_ids", &RatingMatrix::user_ids)
      .def("item_ids", &RatingMatrix::item_ids)
      .def("get", [](const RatingMatrix& r, UserId u, ItemId i) { return r.find(u, i); })
      .def_property_readonly("user_names", [](const RatingMatrix& r) { return r.catalog().user_names; })
      .def_property_readonly("item_names", [](const RatingMatrix& r) { return r.catalog().item_names; })
      .def("item_type", [](const RatingMatrix& r, ItemId i) { return std::string(to_string(r.type_of(i))); })
      .def("__eq__", [](const RatingMatrix& a, const RatingMatrix& b) { return a == b; });

  m.def("load_ratings", [](const std::filesystem::path& p, bool header) {
    return data::load_ratings(p, data::LoadOptions{'\t', header});
  }, py::arg("path"), py::arg("has_header") = true);
  m.def("save_ratings", &data::save_ratings, py::arg("path"), py::arg("ratings"));

  m.def(
      "generate_synthetic",
      [](int n_users, int n_artists, int n_genres, int n_factors, double density, double noise_sd, std::uint64_t seed) {
        data::SyntheticConfig c;
        c.n_users = n_users;
        c.n_artists = n_artists;
        c.n_genres = n_genres;
        c.n_factors = n_factors;
        c.density = density;
        c.noise_sd = noise_sd;
        c.seed = seed;
        return data::generate_synthetic(c).ratings;
      },
      py::arg("n_users") = 500, py::arg("n_artists") = 300, py::arg("n_genres") = 30, py::arg("n_factors") = 8,
      py::arg("density") = 0.3, py::arg("noise_sd") = 5.0, py::arg("seed") = 42);

  m.def(
      "filter_density",
      [](const RatingMatrix& r, std::size_t min_user, const std::map<std::string, std::size_t>& per_type) {
        data::TypeThresholds t;
        for (const auto& [k, v] : per_type) t[item_type_from_string(k)] = v;
        return data::filter_density(r, min_user, t);
      },
      py::arg("ratings"), py::arg("min_user_ratings") = 0, py::arg("min_ratings_per_type") = std::map<std::string, std::size_t>{});
  m.def("semi_binarize", &data::semi_binarize, py::arg("ratings"), py::arg("threshold") = 50.0);
  m.def(
      "split_users",
      [](const RatingMatrix& r, double frac, std::uint64_t seed) {
        auto s = data::split_users(r, frac, seed);
        py::dict d;
        d["cold"] = s.cold;
        d["warm"] = s.warm;
        d["cold_users"] = s.cold_users;
        d["warm_users"] = s.warm_users;
        return d;
      },
      py::arg("ratings"), py::arg("cold_fraction") = 0.9, py::arg("seed") = 42);
  m.def(
      "re_split",
      [](const RatingMatrix& r, int k, int t, const std::string& target, std::uint64_t seed) {
        auto s = data::re_split(r, k, t, item_type_from_string(target), seed);
        py::dict d;
        d["known"] = s.known;
        d["pool"] = s.pool;
        d["test"] = s.test;
        d["retained_users"] = s.retained_users;
        d["dropped_users"] = s.dropped_users;
        return d;
      },
      py::arg("cold"), py::arg("k_per_user") = 1, py::arg("t_per_user") = 30, py::arg("target_type") = "artist",
      py::arg("seed") = 42);

  py::class_<mf::MFModel>(m, "MFModel")
      .def_readonly("factors", &mf::MFModel::factors)
      .def_readonly("global_mean", &mf::MFModel::global_mean)
      .def_readonly("user_bias", &mf::MFModel::user_bias)
      .def_readonly("item_bias", &mf::MFModel::item_bias)
      .def("predict", &mf::MFModel::predict, py::arg("user"), py::arg("item"))
      .def("rmse", [](const mf::MFModel& mdl, const RatingMatrix& t) { return mf::evaluate_rmse(mdl, t); });

  m.def(
      "fit",
      [](const RatingMatrix& k, int factors, double lr, double reg, int epochs, double init_sd, std::uint64_t seed) {
        return mf::fit(k, mf::MFHyperparams{factors, lr, reg, epochs, init_sd, seed});
      },
      py::arg("known"), py::arg("factors") = 20, py::arg("learning_rate") = 0.005, py::arg("l2_reg") = 0.02,
      py::arg("epochs") = 50, py::arg("init_sd") = 0.1, py::arg("seed") = 42);

  m.def(
      "split_error",
      [](const RatingMatrix& k, const std::vector<UserId>& users, ItemId cand, double thr) {
        return tree::split_error(k, users, cand, thr);
      },
      py::arg("known"), py::arg("users"), py::arg("candidate"), py::arg("love_threshold") = 50.0);
  m.def(
      "pair_branch",
      [](std::optional<double> a, std::optional<double> b) { return std::string(tree::to_string(tree::pair_branch(a, b))); },
      py::arg("first"), py::arg("second"));

  py::class_<PyTree>(m, "Tree")
      .def("to_json", [](const PyTree& t, int depth) { return tree::to_json(t.tree, *t.catalog, depth).dump(); },
           py::arg("depth_limit") = -1)
      .def("text", [](const PyTree& t, int depth) {
        std::ostringstream s;
        tree::write_text(s, t.tree, *t.catalog, depth);
        return s.str();
      }, py::arg("depth_limit") = -1)
      .def("node_count", [](const PyTree& t) { return t.tree.node_count(); })
      .def("height", [](const PyTree& t) { return t.tree.height(); })
      .def("next_query", [](const PyTree& t, const std::vector<std::pair<py::object, std::string>>& answers) -> py::object {
        tree::Answers a;
        for (const auto& [q, label] : answers) a[to_query(q)] = tree::branch_label_from_string(label);
        auto q = tree::next_query(t.tree, a);
        return q ? from_query(*q) : py::none();
      }, py::arg("answers") = std::vector<std::pair<py::object, std::string>>{});

  m.def(
      "build_tree",
      [](const RatingMatrix& k, std::optional<std::vector<UserId>> users, const std::string& mode,
         const std::string& pair_strategy, const std::vector<std::string>& candidate_types, const std::string& target,
         int pool_size, int max_depth, int min_node_users, double love) {
        auto cfg = tree_config(mode, pair_strategy, candidate_types, target, pool_size, max_depth, min_node_users, love);
        auto u = users ? *users : k.user_ids();
        return PyTree{tree::build_tree(k, u, cfg), k.catalog_ptr()};
      },
      py::arg("known"), py::arg("users") = py::none(), py::arg("mode") = "single",
      py::arg("pair_strategy") = "first_plus_most_similar", py::arg("candidate_types") = std::vector<std::string>{"artist"},
      py::arg("target_type") = "artist", py::arg("pool_size") = 20, py::arg("max_depth") = 25,
      py::arg("min_node_users") = 2, py::arg("love_threshold") = 50.0);

  m.def(
      "rank",
      [](const std::string& kind, const RatingMatrix& k, std::optional<std::vector<ItemId>> candidates, int bins) {
        baseline::Kind kd;
        if (kind == "popularity") kd = baseline::Kind::Popularity;
        else if (kind == "variance") kd = baseline::Kind::Variance;
        else if (kind == "entropy") kd = baseline::Kind::Entropy;
        else if (kind == "helf") kd = baseline::Kind::Helf;
        else throw ArgumentError("kind must be popularity, variance, entropy or helf");
        auto c = candidates ? *candidates : k.item_ids();
        auto r = baseline::rank(kd, k, c, bins);
        std::vector<std::pair<ItemId, double>> out;
        for (ItemId i : r.items) out.emplace_back(i, r.scores.at(i));
        return out;
      },
      py::arg("kind"), py::arg("known"), py::arg("candidates") = py::none(), py::arg("bins") = 5);

  m.def(
      "simulate_json",
      [](const std::string& config_json) {
        auto c = config::parse_config(nlohmann::json::parse(config_json));
        py::gil_scoped_release release;
        auto cmp = sim::run_comparison(config::load_dataset(c), config::simulation_variants(c));
        std::ostringstream csv;
        sim::write_csv(csv, cmp);
        return std::make_pair(csv.str(), sim::comparison_metadata(cmp).dump());
      },
      py::arg("config_json"));
  m.def("strategy_names", &sim::strategy_names);
}
