#include "tempest/graph_io.hpp"

#include "tempest/errors.hpp"

namespace tempest {

namespace {

using nlohmann::json;

std::vector<double> numbers(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  if (!j.at(key).is_array()) throw ConfigError(std::string("coxian '") + key + "' must be an array");
  return j.at(key).get<std::vector<double>>();
}

EdgeProcess edge_from_json(const json& model, TimeKind graph_time) {
  const std::string type = model.at("type").get<std::string>();
  const TimeKind time = model.contains("time") ? parse_time(model.at("time").get<std::string>()) : graph_time;
  const json params = model.value("params", json::object());
  if (type == "static") {
    const bool on = params.value("on", true);
    return on ? EdgeProcess::static_on(time) : EdgeProcess::static_off(time);
  }
  if (type == "markov2") {
    if (!params.contains("q") || !params.contains("r")) throw ConfigError("markov2 edge needs q and r");
    return build_edge_markovian(params.at("q").get<double>(), params.at("r").get<double>(), time);
  }
  if (type == "coxian") {
    if (time != TimeKind::Continuous) throw ConfigError("coxian edges are continuous-time");
    const auto up = numbers(params, "up"), exit = numbers(params, "exit");
    const auto down = numbers(params, "down"), ret = numbers(params, "ret");
    return build_coxian_edge(up, exit, down, ret);
  }
  throw ConfigError("unknown edge model type '" + type + "'");
}

json edge_to_json(const EdgeProcess& p) {
  json model;
  model["time"] = p.time() == TimeKind::Continuous ? "ct" : "dt";
  if (p.is_static()) {
    model["type"] = "static";
    model["params"] = {{"on", p.output(0) == 1}};
    return model;
  }
  const Matrix& d = p.chain().dynamics();
  if (p.is_markov2()) {
    model["type"] = "markov2";
    model["params"] = {{"q", d(0, 1)}, {"r", d(1, 0)}};
    return model;
  }
  // Coxian layout: on phases first, then off phases.
  std::size_t n_on = 0;
  while (n_on < p.chain().size() && p.output(n_on) == 1) ++n_on;
  const std::size_t n_off = p.chain().size() - n_on;
  std::vector<double> up, exit, down, ret;
  const auto idx = [](std::size_t k) { return static_cast<Eigen::Index>(k); };
  for (std::size_t k = 0; k < n_on; ++k) {
    if (k + 1 < n_on) up.push_back(d(idx(k), idx(k + 1)));
    exit.push_back(d(idx(k), idx(n_on)));
  }
  for (std::size_t k = 0; k < n_off; ++k) {
    if (k + 1 < n_off) down.push_back(d(idx(n_on + k), idx(n_on + k + 1)));
    ret.push_back(d(idx(n_on + k), 0));
  }
  model["type"] = "coxian";
  model["params"] = {{"up", up}, {"exit", exit}, {"down", down}, {"ret", ret}};
  return model;
}

}  // namespace

TimeKind parse_time(const std::string& s) {
  if (s == "ct") return TimeKind::Continuous;
  if (s == "dt") return TimeKind::Discrete;
  throw ConfigError("time must be 'ct' or 'dt', got '" + s + "'");
}

GraphKind parse_kind(const std::string& s) {
  if (s == "amei") return GraphKind::Amei;
  if (s == "amai") return GraphKind::Amai;
  throw ConfigError("kind must be 'amei' or 'amai', got '" + s + "'");
}

DynamicGraph graph_from_json(const json& spec) {
  try {
    const int n = spec.at("n").get<int>();
    const GraphKind kind = parse_kind(spec.value("kind", std::string("amei")));
    const TimeKind time = parse_time(spec.value("time", std::string("ct")));
    DynamicGraph g(n, kind, time);
    for (const auto& e : spec.value("edges", json::array()))
      g.add_edge(e.at("i").get<int>(), e.at("j").get<int>(), edge_from_json(e.at("model"), time));
    return g;
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("malformed graph specification: ") + ex.what());
  }
}

json graph_to_json(const DynamicGraph& g) {
  json spec;
  spec["n"] = g.size();
  spec["kind"] = g.kind() == GraphKind::Amei ? "amei" : "amai";
  spec["time"] = g.time() == TimeKind::Continuous ? "ct" : "dt";
  spec["edges"] = json::array();
  for (const Edge& e : g.edges()) spec["edges"].push_back({{"i", e.i}, {"j", e.j}, {"model", edge_to_json(e.process)}});
  return spec;
}

DynamicGraph graph_from_config(const json& spec, std::uint64_t seed) {
  if (!spec.contains("preset")) return graph_from_json(spec);
  try {
    const std::string preset = spec.at("preset").get<std::string>();
    const int n = spec.value("n", 500);
    const TimeKind time = parse_time(spec.value("time", std::string("ct")));
    if (preset == "iv") {
      const std::string scale = spec.value("scale", std::string("variance"));
      if (scale != "variance" && scale != "stddev") throw ConfigError("scale must be 'variance' or 'stddev'");
      return build_experiment_graph_iv(n, spec.value("er_prob", 0.2), spec.value("seed", seed),
                                       scale == "variance" ? GaussianScale::Variance : GaussianScale::StdDev)
          .graph;
    }
    if (preset == "small_world") return build_small_world(n, spec.value("r", 0.1), spec.value("rate", 1.0), time);
    if (preset == "edge_markovian")
      return build_edge_markovian_complete(n, spec.value("q", 1.0), spec.value("r", 1.0), time);
    throw ConfigError("unknown preset '" + preset + "'");
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("malformed preset: ") + ex.what());
  }
}

}  // namespace tempest
