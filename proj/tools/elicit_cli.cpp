#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "elicit/config.hpp"
#include "elicit/data.hpp"
#include "elicit/errors.hpp"
#include "elicit/simulation.hpp"
#include "elicit/tree.hpp"
#include "elicit/tree_io.hpp"

#ifndef ELICIT_VERSION
#define ELICIT_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace elicit;

namespace {

struct Options {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int depth = 3;
  int max_answers = 0;
  std::string format = "text";
  std::string strategy;
};

config::RunConfig resolve_config(const Options& o) {
  config::RunConfig c = o.config_path.empty() ? config::parse_config(json::object()) : config::load_config(o.config_path);
  if (o.seed) config::set_seed(c, *o.seed);
  return c;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

void write_manifest(const fs::path& dir, const std::string& command, const Options& o, const config::RunConfig& c) {
  json versions{{"elicit", ELICIT_VERSION},
                {"compiler", __VERSION__},
                {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                {"cli11", CLI11_VERSION}};
  json manifest{{"command", command},
                {"config_path", o.config_path.empty() ? "" : fs::absolute(o.config_path).string()},
                {"output_dir", fs::absolute(dir).string()},
                {"timestamp", utc_timestamp()},
                {"seed", c.seed},
                {"versions", versions}};
  std::ofstream out(dir / "manifest.json");
  out << json{{"manifest", manifest}, {"config", config::to_json(c)}}.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
}

fs::path prepare_out(const Options& o) {
  fs::path dir(o.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

int cmd_generate(const Options& o) {
  auto c = resolve_config(o);
  auto dir = prepare_out(o);
  auto d = data::generate_synthetic(config::effective_synthetic(c));
  data::save_ratings(dir / "ratings.tsv", d.ratings);
  // The written file becomes the dataset of the echoed config.
  c.dataset.path = fs::absolute(dir / "ratings.tsv").string();
  write_manifest(dir, "generate", o, c);
  std::cout << "wrote " << d.ratings.size() << " ratings for " << d.ratings.user_ids().size() << " users to "
            << (dir / "ratings.tsv").string() << '\n';
  return 0;
}

void warn_dropped(const RatingMatrix& d, const config::RunConfig& c) {
  auto st = sim::prepare_partition(d, c.splits, c.seed);
  if (!st.dropped_users.empty())
    std::cerr << "warning: " << st.dropped_users.size() << " cold users have fewer than "
              << c.splits.k_per_user + c.splits.t_per_user << " " << to_string(c.splits.target_type)
              << " ratings and were dropped\n";
}

int cmd_simulate(const Options& o) {
  auto c = resolve_config(o);
  auto dir = prepare_out(o);
  auto d = config::load_dataset(c);
  warn_dropped(d, c);
  auto cmp = sim::run_comparison(d, config::simulation_variants(c));

  std::ofstream csv(dir / "results.csv");
  sim::write_csv(csv, cmp);
  if (!csv) throw std::runtime_error("cannot write " + (dir / "results.csv").string());
  std::ofstream(dir / "metadata.json") << sim::comparison_metadata(cmp).dump(2) << '\n';
  write_manifest(dir, "simulate", o, c);

  for (const auto& curve : cmp.curves)
    std::cout << curve.strategy << ": rmse " << curve.records.front().rmse << " -> " << curve.records.back().rmse
              << " (" << to_string(curve.scale) << ")\n";
  if (cmp.mixed_scales()) std::cerr << "warning: curves use different rating scales\n";
  return 0;
}

struct BuiltTree {
  RatingMatrix known;
  tree::ElicitationTree tree;
};

BuiltTree initial_tree(const Options& o, const config::RunConfig& c) {
  std::optional<sim::StrategySpec> spec;
  if (!o.strategy.empty()) {
    spec = sim::StrategySpec{sim::strategy_from_string(o.strategy), "", {}, std::nullopt};
    for (const auto& s : c.strategies)
      if (s.kind == spec->kind) spec = s;
  } else {
    for (const auto& s : c.strategies)
      if (!spec && sim::is_tree(s.kind)) spec = s;
    if (!spec) spec = sim::StrategySpec{sim::StrategyKind::TreeHybrid, "", {}, std::nullopt};
  }
  if (!sim::is_tree(spec->kind))
    throw ConfigError("strategy '" + std::string(to_string(spec->kind)) + "' does not build a tree");

  sim::SimConfig v = config::simulation_variants(c).front();
  v.strategy = *spec;
  sim::validate(v);
  auto d = config::load_dataset(c);
  warn_dropped(d, c);
  if (spec->uses_semi_binary()) d = data::semi_binarize(d, c.semi_binary_threshold);
  auto st = sim::prepare_partition(d, c.splits, c.seed);
  auto t = tree::build_tree(st.known, st.known.user_ids(), sim::effective_tree_config(v));
  return {std::move(st.known), std::move(t)};
}

int cmd_inspect(const Options& o) {
  if (o.format != "text" && o.format != "json") throw ConfigError("--format must be text or json");
  auto c = resolve_config(o);
  auto b = initial_tree(o, c);
  if (o.format == "json")
    std::cout << tree::to_json(b.tree, b.known.catalog(), o.depth).dump(2) << '\n';
  else
    tree::write_text(std::cout, b.tree, b.known.catalog(), o.depth);
  return 0;
}

std::optional<tree::BranchLabel> parse_answer(const std::string& word, bool pair) {
  using tree::BranchLabel;
  if (pair) {
    if (word == "first") return BranchLabel::PreferFirst;
    if (word == "second") return BranchLabel::PreferSecond;
    if (word == "same") return BranchLabel::Indifferent;
  } else {
    if (word == "like") return BranchLabel::Lover;
    if (word == "dislike") return BranchLabel::Hater;
    if (word == "skip") return BranchLabel::Unknown;
  }
  return std::nullopt;
}

int cmd_interactive(const Options& o, std::istream& in) {
  auto c = resolve_config(o);
  auto b = initial_tree(o, c);
  const auto& cat = b.known.catalog();

  tree::Answers answers;
  std::vector<std::pair<tree::Query, tree::BranchLabel>> path;
  while (auto q = tree::next_query(b.tree, answers)) {
    if (o.max_answers > 0 && static_cast<int>(path.size()) >= o.max_answers) break;
    const bool pair = q->is_pair();
    std::cout << tree::describe(*q, cat) << (pair ? " [first/second/same/quit]: " : " [like/dislike/skip/quit]: ")
              << std::flush;
    std::string line;
    if (!std::getline(in, line)) break;
    std::istringstream words(line);
    std::string word;
    words >> word;
    if (word == "quit") break;
    auto a = parse_answer(word, pair);
    if (!a) {
      std::cout << "unrecognized answer '" << word << "'\n";
      continue;
    }
    answers[*q] = *a;
    path.emplace_back(*q, *a);
  }
  std::cout << "\npath:";
  if (path.empty()) std::cout << " (empty)";
  std::cout << '\n';
  for (std::size_t j = 0; j < path.size(); ++j)
    std::cout << "  " << j + 1 << ". " << tree::describe(path[j].first, cat) << " -> " << to_string(path[j].second)
              << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decision-tree rating elicitation for cold-start users"};
  app.set_version_flag("--version", ELICIT_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--config", o.config_path, "JSON run config, or a manifest.json from an earlier run")
      ->check(CLI::ExistingFile);
  app.add_option("--out", o.out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", o.seed, "overrides the config seed");

  auto* gen = app.add_subcommand("generate", "write a synthetic ratings TSV");
  auto* simc = app.add_subcommand("simulate", "run the elicitation simulation for every configured strategy");
  auto* insp = app.add_subcommand("inspect-tree", "print the tree built from the initial known ratings");
  auto* inter = app.add_subcommand("interactive", "answer tree queries from the terminal");
  for (auto* sc : {insp, inter}) {
    sc->add_option("--strategy", o.strategy, "tree strategy (default: first tree strategy in the config)");
  }
  insp->add_option("--depth", o.depth, "levels to print (0 = all)")->capture_default_str();
  insp->add_option("--format", o.format, "text or json")->check(CLI::IsMember({"text", "json"}))->capture_default_str();
  inter->add_option("--depth", o.max_answers, "stop after this many answers (0 = tree depth)")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  if (o.depth == 0) o.depth = -1;

  try {
    if (gen->parsed()) return cmd_generate(o);
    if (simc->parsed()) return cmd_simulate(o);
    if (insp->parsed()) return cmd_inspect(o);
    if (inter->parsed()) return cmd_interactive(o, std::cin);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
