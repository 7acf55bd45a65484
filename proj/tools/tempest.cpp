// tempest: certified epidemic thresholds, simulations and oracles on
// aggregated-Markov dynamic graphs.
//
//   tempest threshold --preset iv --delta 0.05
//   tempest empirical --paths 100 --steps 1000 --threads 8
//   tempest --config run.json

#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tempest/errors.hpp"
#include "tempest/experiment.hpp"

using nlohmann::json;

namespace {

// Flags are collected into optionals and copied into the config document
// only when given, so they override a --config file field by field.
class Overrides {
 public:
  template <class T>
  void add(CLI::App* app, const std::string& flag, const std::string& section, const std::string& key,
           const std::string& help) {
    auto value = std::make_shared<std::optional<T>>();
    app->add_option(flag, *value, help);
    apply_.push_back([value, section, key](json& doc) {
      if (!*value) return;
      if (section.empty()) doc[key] = **value;
      else doc[section][key] = **value;
    });
  }
  void flag(CLI::App* app, const std::string& flag, const std::string& section, const std::string& key,
            const std::string& help) {
    auto value = std::make_shared<std::optional<bool>>();
    app->add_flag(flag, *value, help);
    apply_.push_back([value, section, key](json& doc) {
      if (*value) doc[section][key] = **value;
    });
  }
  void apply(json& doc) const {
    for (const auto& f : apply_) f(doc);
  }

 private:
  std::vector<std::function<void(json&)>> apply_;
};

void graph_flags(CLI::App* app, Overrides& o, std::string& graph_file) {
  app->add_option("--graph", graph_file, "graph specification JSON file");
  o.add<std::string>(app, "--preset", "graph", "preset", "iv | small_world | edge_markovian");
  o.add<int>(app, "--n", "graph", "n", "number of nodes");
  o.add<double>(app, "--er-prob", "graph", "er_prob", "edge probability of the ER skeleton");
  o.add<std::string>(app, "--scale", "graph", "scale", "variance | stddev reading of the rate spread");
  o.add<std::string>(app, "--time", "graph", "time", "ct | dt");
  o.add<double>(app, "--r", "graph", "r", "preset parameter r");
  o.add<double>(app, "--q", "graph", "q", "preset parameter q");
  o.add<std::uint64_t>(app, "--graph-seed", "graph", "seed", "seed of the random preset (default: --seed)");
}

void rate_flags(CLI::App* app, Overrides& o) {
  o.add<double>(app, "--beta", "epidemic", "beta", "infection rate (homogeneous)");
  o.add<double>(app, "--delta", "epidemic", "delta", "recovery rate (homogeneous)");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw tempest::ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& ex) {
    throw tempest::ConfigError(path + ": " + ex.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Epidemic thresholds on aggregated-Markov dynamic graphs"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  Overrides o;
  std::string config_file;
  std::string graph_file;
  app.add_option("--config", config_file, "experiment config JSON (validated against the bundled schema)");
  o.add<std::uint64_t>(&app, "--seed", "", "seed", "master seed");
  o.add<int>(&app, "--threads", "", "threads", "worker threads (default: TEMPEST_THREADS, then all cores)");
  o.add<std::string>(&app, "--out", "", "output", "output directory");
  bool print_schema = false;
  app.add_flag("--print-schema", print_schema, "print the config schema and exit");

  auto* threshold = app.add_subcommand("threshold", "certified threshold report, or search in beta");
  graph_flags(threshold, o, graph_file);
  rate_flags(threshold, o);
  o.add<std::string>(threshold, "--certificate", "threshold", "certificate", "t1 | t2 | t3 | t4 | static_ct | static_dt");
  o.add<double>(threshold, "--beta-lo", "threshold", "beta_lo", "lower end of the beta search");
  o.add<double>(threshold, "--beta-hi", "threshold", "beta_hi", "upper end of the beta search");
  o.flag(threshold, "--search", "threshold", "search", "search for the threshold even when --beta is given");

  auto* simulate = app.add_subcommand("simulate", "exact SIS trajectories");
  graph_flags(simulate, o, graph_file);
  rate_flags(simulate, o);
  o.add<int>(simulate, "--runs", "simulate", "runs", "number of trajectories");
  o.add<double>(simulate, "--horizon", "simulate", "horizon", "time horizon (continuous time)");
  o.add<int>(simulate, "--steps", "simulate", "steps", "number of steps (discrete time)");
  o.flag(simulate, "--reinfect", "simulate", "reinfect", "re-seed one node on extinction");

  auto* empirical = app.add_subcommand("empirical", "Monte-Carlo threshold over a beta grid");
  graph_flags(empirical, o, graph_file);
  rate_flags(empirical, o);
  o.add<double>(empirical, "--beta-lo", "empirical", "beta_lo", "first grid point");
  o.add<double>(empirical, "--beta-hi", "empirical", "beta_hi", "last grid point");
  o.add<int>(empirical, "--points", "empirical", "points", "grid size");
  o.add<int>(empirical, "--paths", "empirical", "paths", "paths per grid point");
  o.add<int>(empirical, "--steps", "empirical", "steps", "steps per path");

  auto* oracle = app.add_subcommand("oracle", "exact Kronecker-sum stability on small graphs");
  graph_flags(oracle, o, graph_file);
  rate_flags(oracle, o);
  o.add<int>(oracle, "--nodes", "oracle", "n", "nodes of each random instance");
  o.add<int>(oracle, "--edges", "oracle", "edges", "Markov edges of each random instance");
  o.add<int>(oracle, "--instances", "oracle", "instances", "number of random instances");

  auto* chung = app.add_subcommand("chung", "empirical tail against the matrix concentration bound");
  o.add<std::string>(chung, "--sampler", "chung", "sampler", "m1 | m2 | m3 | m4");
  o.add<int>(chung, "--n", "chung", "n", "matrix size");
  o.add<double>(chung, "--mean", "chung", "mean", "edge probability");
  o.add<int>(chung, "--draws", "chung", "draws", "number of samples");
  o.add<int>(chung, "--s-points", "chung", "s_points", "grid size in s");
  o.add<double>(chung, "--s-max", "chung", "s_max", "largest s");
  rate_flags(chung, o);

  auto* spectra = app.add_subcommand("spectra", "spectral quantities of a graph or a closed-form example");
  graph_flags(spectra, o, graph_file);
  o.add<std::string>(spectra, "--example", "spectra", "example", "graph | small_world | edge_markovian");

  auto* figure3 = app.add_subcommand("figure3", "xi_H surface data");
  o.add<std::string>(figure3, "--panel", "figure3", "panel", "a | b | c");
  o.add<int>(figure3, "--points", "figure3", "points", "grid size per axis");

  auto* figure456 = app.add_subcommand("figure456", "decay bound, empirical threshold and sample paths");
  graph_flags(figure456, o, graph_file);
  rate_flags(figure456, o);
  o.add<int>(figure456, "--paths", "figure456", "paths", "paths per grid point");
  o.add<int>(figure456, "--steps", "figure456", "steps", "steps per path");
  o.add<int>(figure456, "--points", "figure456", "points", "grid size");
  o.add<int>(figure456, "--sample-paths", "figure456", "sample_paths", "trajectories per sample beta");

  CLI11_PARSE(app, argc, argv);

  if (print_schema) {
    std::cout << tempest::config_schema().dump(2) << '\n';
    return 0;
  }

  try {
    json doc = config_file.empty() ? json::object() : read_json_file(config_file);
    const auto subs = app.get_subcommands();
    if (!subs.empty()) doc["task"] = subs.front()->get_name();
    o.apply(doc);
    if (!graph_file.empty()) {
      json g = read_json_file(graph_file);
      if (doc.contains("graph"))
        for (auto& [k, v] : doc["graph"].items()) g[k] = v;
      doc["graph"] = g;
    }
    if (!doc.contains("task")) throw tempest::ConfigError("no task: give a subcommand or a config with \"task\"");

    const auto config = tempest::parse_config(doc);
    const auto outcome = tempest::run(config);
    std::cout << outcome.summary.dump(2) << '\n';
    for (const auto& f : outcome.files) std::cerr << "wrote " << f.string() << '\n';
    return 0;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return tempest::exit_code_for(ex);
  }
}
