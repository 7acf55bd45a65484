#include "tempest/experiment.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <omp.h>

#include "tempest/errors.hpp"
#include "tempest/graph_io.hpp"
#include "tempest/oracle.hpp"
#include "tempest/rng.hpp"
#include "tempest/schema_text.hpp"

namespace tempest {

using nlohmann::json;

// Schema --------------------------------------------------------------------

const json& config_schema() {
  static const json schema = json::parse(kConfigSchemaText);
  return schema;
}

namespace {

bool has_type(const json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "boolean") return v.is_boolean();
  if (t == "integer") return v.is_number_integer();
  if (t == "number") return v.is_number();
  if (t == "null") return v.is_null();
  return false;
}

void check_node(const json& v, const json& s, const std::string& where, std::vector<std::string>& errs) {
  if (s.contains("type")) {
    const json& t = s.at("type");
    bool ok = false;
    if (t.is_string()) ok = has_type(v, t.get<std::string>());
    else
      for (const auto& alt : t) ok = ok || has_type(v, alt.get<std::string>());
    if (!ok) {
      errs.push_back(where + ": expected type " + t.dump());
      return;
    }
  }
  if (s.contains("enum")) {
    bool found = false;
    for (const auto& e : s.at("enum")) found = found || e == v;
    if (!found) errs.push_back(where + ": value " + v.dump() + " not in " + s.at("enum").dump());
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (s.contains("minimum") && x < s.at("minimum").get<double>())
      errs.push_back(where + ": " + v.dump() + " < minimum " + s.at("minimum").dump());
    if (s.contains("maximum") && x > s.at("maximum").get<double>())
      errs.push_back(where + ": " + v.dump() + " > maximum " + s.at("maximum").dump());
    if (s.contains("exclusiveMinimum") && x <= s.at("exclusiveMinimum").get<double>())
      errs.push_back(where + ": " + v.dump() + " <= exclusiveMinimum " + s.at("exclusiveMinimum").dump());
  }
  if (v.is_object()) {
    const json props = s.value("properties", json::object());
    for (const auto& r : s.value("required", json::array()))
      if (!v.contains(r.get<std::string>())) errs.push_back(where + ": missing required '" + r.get<std::string>() + "'");
    for (const auto& [key, val] : v.items()) {
      if (props.contains(key)) check_node(val, props.at(key), where + "/" + key, errs);
      else if (s.contains("additionalProperties") && s.at("additionalProperties") == false)
        errs.push_back(where + ": unknown property '" + key + "'");
    }
  }
  if (v.is_array()) {
    if (s.contains("minItems") && v.size() < s.at("minItems").get<std::size_t>())
      errs.push_back(where + ": fewer than " + s.at("minItems").dump() + " items");
    if (s.contains("items"))
      for (std::size_t k = 0; k < v.size(); ++k) check_node(v[k], s.at("items"), where + "/" + std::to_string(k), errs);
  }
}

}  // namespace

std::vector<std::string> schema_errors(const json& doc, const json& schema) {
  std::vector<std::string> errs;
  check_node(doc, schema, "", errs);
  return errs;
}

ExperimentConfig parse_config(const json& doc) {
  const auto errs = schema_errors(doc, config_schema());
  if (!errs.empty()) {
    std::string msg = "config does not match the schema:";
    for (const auto& e : errs) msg += "\n  " + (e.empty() ? std::string("/") : e);
    throw ConfigError(msg);
  }
  ExperimentConfig c;
  c.doc = doc;
  c.task = doc.at("task").get<std::string>();
  c.seed = doc.value("seed", std::uint64_t{0});
  c.threads = doc.value("threads", 0);
  c.output = doc.value("output", std::string("."));
  return c;
}

std::string config_hash(const json& doc) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(tag(doc.dump())));
  return buf;
}

// CSV -----------------------------------------------------------------------

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_csv(const std::filesystem::path& path, const json& header, const CsvTable& table) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "# " << header.dump() << '\n';
  for (std::size_t k = 0; k < table.columns.size(); ++k) out << (k ? "," : "") << table.columns[k];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << row[k];
    out << '\n';
  }
}

json read_csv_header(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw ConfigError(path.string() + " has no header line");
  return json::parse(line.substr(2));
}

// Plot data -----------------------------------------------------------------

CsvTable figure4_table(const Figure4Data& d) {
  CsvTable t{{"beta", "gamma_D", "marker"}, {}};
  for (std::size_t k = 0; k < d.beta.size(); ++k)
    t.rows.push_back({format_number(d.beta[k]), d.gamma_d[k] ? format_number(*d.gamma_d[k]) : "", ""});
  if (d.threshold) t.rows.push_back({format_number(*d.threshold), "", "threshold"});
  return t;
}

CsvTable figure5_table(const Figure5Data& d) {
  CsvTable t{{"beta", "z_star", "marker"}, {}};
  for (std::size_t k = 0; k < d.report.beta_grid.size(); ++k)
    t.rows.push_back({format_number(d.report.beta_grid[k]), format_number(d.report.z_star[k]), ""});
  if (d.certified) t.rows.push_back({format_number(*d.certified), "", "certified"});
  if (d.static_threshold) t.rows.push_back({format_number(*d.static_threshold), "", "static"});
  return t;
}

CsvTable empirical_table(const EmpiricalThresholdReport& r) {
  CsvTable t{{"beta", "y_star", "z_star"}, {}};
  for (std::size_t k = 0; k < r.beta_grid.size(); ++k)
    t.rows.push_back({format_number(r.beta_grid[k]), format_number(r.y_star[k]), format_number(r.z_star[k])});
  return t;
}

CsvTable trace_table(const std::vector<SimulationTrace>& traces) {
  CsvTable t{{"path_id", "t_or_k", "infected_count"}, {}};
  for (std::size_t p = 0; p < traces.size(); ++p)
    for (std::size_t k = 0; k < traces[p].times.size(); ++k)
      t.rows.push_back({std::to_string(p), format_number(traces[p].times[k]),
                        std::to_string(traces[p].infected_counts[k])});
  return t;
}

Figure3Panel figure3_panel(char panel) {
  switch (panel) {
    case 'a': return {100, 10.0};
    case 'b': return {1000, 100.0};
    case 'c': return {10000, 1000.0};
  }
  throw ConfigError(std::string("unknown figure 3 panel '") + panel + "'");
}

CsvTable figure3_table(const Figure3Panel& panel, int points) {
  CsvTable t{{"rho", "omega", "delta_over_beta", "Delta3", "xi_H"}, {}};
  for (int a = 1; a <= points; ++a) {
    const double rho = static_cast<double>(a) / points;
    for (int b = 1; b <= points; ++b) {
      const double omega = static_cast<double>(b) / points;
      const double dob = rho * panel.eta_support;
      const double d3 = omega * panel.eta_support / 4.0;
      const XiResult xi = xi_h(panel.n, panel.eta_support, d3, dob);
      t.rows.push_back(
          {format_number(rho), format_number(omega), format_number(dob), format_number(d3), format_number(xi.xi)});
    }
  }
  return t;
}

// Running -------------------------------------------------------------------

int exit_code_for(const std::exception& ex) {
  if (const auto* e = dynamic_cast<const Error*>(&ex)) {
    switch (e->error_class()) {
      case ErrorClass::Config: return 1;
      case ErrorClass::Numerical: return 2;
      case ErrorClass::Resource: return 3;
    }
  }
  if (dynamic_cast<const json::exception*>(&ex)) return 1;
  return 2;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("TEMPEST_THREADS")) {
    int v = 0;
    const auto* end = env + std::char_traits<char>::length(env);
    if (std::from_chars(env, end, v).ec == std::errc{} && v > 0) return v;
  }
  return omp_get_max_threads();
}

namespace {

struct Context {
  const ExperimentConfig& cfg;
  json header;
  RunOutcome out;

  explicit Context(const ExperimentConfig& c) : cfg(c) {
    header = {{"config_hash", config_hash(c.doc)}, {"seed", c.seed}, {"task", c.task}, {"config", c.doc}};
  }
  json section(const char* name) const { return cfg.doc.value(name, json::object()); }
  void csv(const std::string& name, const CsvTable& t) {
    const auto path = cfg.output / name;
    write_csv(path, header, t);
    out.files.push_back(path);
  }
  void report(const std::string& name, json body) {
    json doc = header;
    doc["result"] = std::move(body);
    const auto path = cfg.output / name;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream(path) << doc.dump(2) << '\n';
    out.files.push_back(path);
    out.summary = doc["result"];
  }
};

json default_graph(const std::string& task) {
  if (task == "oracle" || task == "simulate") return json::object();
  return {{"preset", "iv"}, {"n", 500}, {"er_prob", 0.2}, {"time", "dt"}};
}

DynamicGraph config_graph(const Context& c) {
  json spec = c.cfg.doc.contains("graph") ? c.cfg.doc.at("graph") : default_graph(c.cfg.task);
  if (spec.empty()) throw ConfigError("task '" + c.cfg.task + "' needs a graph");
  return graph_from_config(spec, c.cfg.seed);
}

Vector rate_vector(const json& v, int n, double fallback) {
  if (v.is_null()) return Vector::Constant(n, fallback);
  if (v.is_number()) return Vector::Constant(n, v.get<double>());
  const auto xs = v.get<std::vector<double>>();
  if (static_cast<int>(xs.size()) != n) throw ConfigError("rate array length must equal n");
  return Eigen::Map<const Vector>(xs.data(), n);
}

EpidemicParams config_params(const Context& c, int n, double beta_default, double delta_default) {
  const json e = c.section("epidemic");
  return {rate_vector(e.value("beta", json()), n, beta_default), rate_vector(e.value("delta", json()), n, delta_default)};
}

double scalar_delta(const Context& c, double fallback) {
  const json e = c.section("epidemic");
  if (!e.contains("delta")) return fallback;
  if (!e.at("delta").is_number()) throw ConfigError("this task needs a scalar delta");
  return e.at("delta").get<double>();
}

Certificate default_certificate(const DynamicGraph& g) {
  if (g.time() == TimeKind::Discrete) return Certificate::T4;
  return g.kind() == GraphKind::Amai ? Certificate::T1 : Certificate::T2;
}

std::vector<double> linspace(double lo, double hi, int points) {
  std::vector<double> v;
  for (int k = 0; k < points; ++k) v.push_back(points == 1 ? lo : lo + (hi - lo) * k / (points - 1));
  return v;
}

void task_threshold(Context& c) {
  const DynamicGraph g = config_graph(c);
  const json t = c.section("threshold");
  const Certificate cert =
      t.contains("certificate") ? certificate_from_string(t.at("certificate").get<std::string>()) : default_certificate(g);
  const bool dt = cert == Certificate::T4 || cert == Certificate::StaticDt;
  const MeanMatrix mean = mean_matrix(g);
  json body{{"certificate", to_string(cert)}, {"n", g.size()}};
  const json e = c.section("epidemic");
  if (e.contains("beta")) {
    const EpidemicParams params = config_params(c, g.size(), 0.0, dt ? 0.05 : 1.0);
    body["report"] = to_json(cert == Certificate::T3 ? certify_homogeneous(g, params.beta[0], params.delta[0])
                                                     : certify(mean, params, cert));
  }
  if (t.value("search", !e.contains("beta"))) {
    const double delta = scalar_delta(c, dt ? 0.05 : 1.0);
    const double lo = t.value("beta_lo", 1e-6);
    const double hi = t.value("beta_hi", dt ? 1.0 : 10.0);
    const double beta = threshold_in_beta(g, delta, cert, lo, hi);
    body["delta"] = delta;
    body["beta_threshold"] = beta;
    body["static_threshold"] =
        threshold_in_beta(mean, delta, dt ? Certificate::StaticDt : Certificate::StaticCt, lo, hi);
  }
  c.report("threshold.json", body);
}

void task_simulate(Context& c) {
  const DynamicGraph g = config_graph(c);
  const json s = c.section("simulate");
  const bool dt = g.time() == TimeKind::Discrete;
  const EpidemicParams params = config_params(c, g.size(), dt ? 7e-4 : 0.5, dt ? 0.05 : 1.0);
  const int runs = s.value("runs", 1);
  const std::vector<int> init = s.contains("init_infected") ? s.at("init_infected").get<std::vector<int>>()
                                                             : all_nodes(g.size());
  SimOptions opts;
  opts.path.stationary_start = s.value("stationary_start", true);
  std::vector<SimulationTrace> traces(static_cast<std::size_t>(runs));
  std::vector<std::string> errors(static_cast<std::size_t>(runs));
#pragma omp parallel for schedule(dynamic, 1)
  for (int r = 0; r < runs; ++r) {
    try {
      const auto seed = path_seed(c.cfg.seed, static_cast<std::size_t>(r));
      traces[static_cast<std::size_t>(r)] =
          dt ? simulate_dt_exact(g, params, s.value("steps", 1000), init, s.value("reinfect", false), seed, opts)
             : simulate_ct_exact(g, params, s.value("horizon", 100.0), init, seed, opts);
    } catch (const std::exception& ex) {
      errors[static_cast<std::size_t>(r)] = ex.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw ParamRange(e);
  c.csv("trace.csv", trace_table(traces));
  json finals = json::array();
  for (const auto& tr : traces) finals.push_back(tr.infected_counts.back());
  c.report("simulate.json", {{"runs", runs}, {"final_infected", finals}});
}

std::vector<double> empirical_grid(const json& s, double lo_default, double hi_default, int points_default) {
  if (s.contains("beta_grid")) return s.at("beta_grid").get<std::vector<double>>();
  return linspace(s.value("beta_lo", lo_default), s.value("beta_hi", hi_default), s.value("points", points_default));
}

void task_empirical(Context& c) {
  const DynamicGraph g = config_graph(c);
  const json s = c.section("empirical");
  const double delta = scalar_delta(c, 0.05);
  const auto grid = empirical_grid(s, 5e-4, 1e-3, 12);
  EmpiricalOptions opts;
  if (s.contains("init_infected")) opts.init_infected = s.at("init_infected").get<std::vector<int>>();
  opts.path.stationary_start = s.value("stationary_start", true);
  const auto r = empirical_threshold(g, delta, grid, s.value("paths", 100), s.value("steps", 1000), c.cfg.seed, opts);
  c.csv("empirical.csv", empirical_table(r));
  c.report("empirical.json", {{"beta_star", r.beta_star ? json(*r.beta_star) : json(nullptr)},
                              {"paths", r.paths},
                              {"steps", r.steps},
                              {"z_star", r.z_star}});
}

void task_oracle(Context& c) {
  const json o = c.section("oracle");
  std::vector<DynamicGraph> graphs;
  if (c.cfg.doc.contains("graph")) {
    graphs.push_back(config_graph(c));
  } else {
    const int n = o.value("n", 4);
    const int m = o.value("edges", 3);
    for (int k = 0; k < o.value("instances", 1); ++k)
      graphs.push_back(random_markov_graph(n, m, GraphKind::Amei, derive_seed(c.cfg.seed, {tag("oracle"), std::uint64_t(k)})));
  }
  CsvTable t{{"instance_id", "eta", "verdict"}, {}};
  json list = json::array();
  for (std::size_t k = 0; k < graphs.size(); ++k) {
    const auto& g = graphs[k];
    const EpidemicParams params = config_params(c, g.size(), 0.3, 1.0);
    const ExponentialVerdict v = exponential_condition(g, params);
    t.rows.push_back({std::to_string(k), format_number(v.eta), v.stable ? "stable" : "unstable"});
    json item{{"instance_id", k}, {"eta", v.eta}, {"stable", v.stable}, {"dimension", v.dimension},
              {"graph", graph_to_json(g)}};
    if (g.kind() == GraphKind::Amei) item["t2"] = to_json(certify_amei_ct(g, params));
    list.push_back(item);
  }
  c.csv("oracle.csv", t);
  c.report("oracle.json", {{"instances", list}});
}

SamplerKind parse_sampler(const std::string& s) {
  if (s == "m1") return SamplerKind::M1;
  if (s == "m2") return SamplerKind::M2;
  if (s == "m3") return SamplerKind::M3;
  if (s == "m4") return SamplerKind::M4;
  throw ConfigError("unknown sampler '" + s + "'");
}

void task_chung(Context& c) {
  const json s = c.section("chung");
  const int n = s.value("n", 10);
  const double mean = s.value("mean", 0.5);
  const EpidemicParams p = config_params(c, n, 1.0, 1.0);
  Matrix means = Matrix::Constant(n, n, mean);
  means.diagonal().setZero();
  const RandomMatrixSampler sampler{parse_sampler(s.value("sampler", std::string("m2"))), means, p.beta, p.delta};
  const auto [cc, v2] = chung_constants(sampler);
  const double s_max = s.value("s_max", v2 > 0.0 ? 3.0 * kappa_inv_at_one({cc, v2, n}) : 1.0);
  const auto grid = linspace(0.0, s_max, s.value("s_points", 20));
  const auto points = chung_tail_check(sampler, grid, s.value("draws", 100000), c.cfg.seed);
  CsvTable t{{"s", "empirical", "bound"}, {}};
  bool ok = true;
  for (const auto& pt : points) {
    t.rows.push_back({format_number(pt.s), format_number(pt.empirical), format_number(pt.bound)});
    ok = ok && pt.within_bound();
  }
  c.csv("chung.csv", t);
  c.report("chung.json", {{"C", cc}, {"v2", v2}, {"within_bound", ok}});
}

void task_spectra(Context& c) {
  const json s = c.section("spectra");
  const std::string example = s.value("example", std::string("graph"));
  const json g_spec = c.cfg.doc.value("graph", json::object());
  json body{{"example", example}};
  if (example == "small_world" || example == "edge_markovian") {
    const int n = g_spec.value("n", 10);
    const double r = g_spec.value("r", 0.5);
    const double q = g_spec.value("q", 1.0);
    const DynamicGraph g = example == "small_world" ? build_small_world(n, r) : build_edge_markovian_complete(n, q, r);
    const double eta = spectral_abscissa(mean_matrix(g).values);
    const double closed = example == "small_world" ? 1.0 + r * (n - 2) : (n - 1) * q / (q + r);
    body["eta"] = eta;
    body["closed_form"] = closed;
    body["relative_error"] = std::abs(eta - closed) / std::abs(closed);
  } else {
    const DynamicGraph g = config_graph(c);
    const MeanMatrix mean = mean_matrix(g);
    const Vector ones = Vector::Ones(g.size());
    body["eta_mean"] = spectral_abscissa(mean.values);
    body["eta_support"] = spectral_abscissa(support_matrix(mean));
    body["mu_mean"] = matrix_measure(mean.values);
    body["Delta1"] = delta1(mean.values, ones);
    body["Delta2"] = delta2(mean.values, ones);
    body["Delta3"] = delta3(mean.values);
  }
  c.report("spectra.json", body);
}

void task_figure3(Context& c) {
  const json s = c.section("figure3");
  const std::string panel = s.value("panel", std::string("a"));
  const Figure3Panel p = figure3_panel(panel.at(0));
  c.csv("figure3" + panel + ".csv", figure3_table(p, s.value("points", 20)));
  c.report("figure3" + panel + ".json", {{"n", p.n}, {"eta_support", p.eta_support}});
}

void task_figure456(Context& c) {
  const json s = c.section("figure456");
  const DynamicGraph g = config_graph(c);
  const double delta = scalar_delta(c, 0.05);
  const MeanMatrix mean = mean_matrix(g);
  const auto grid = linspace(s.value("beta_lo", 5e-4), s.value("beta_hi", 1e-3), s.value("points", 12));

  Figure4Data f4;
  f4.beta = grid;
  for (double beta : grid) {
    const auto r = certify_amei_dt(mean, EpidemicParams::homogeneous(g.size(), beta, delta));
    f4.gamma_d.push_back(r.decay_rate_bound);
  }
  f4.threshold = threshold_in_beta(mean, delta, Certificate::T4, 1e-6, 1.0);
  c.csv("figure4.csv", figure4_table(f4));

  Figure5Data f5;
  f5.report = empirical_threshold(g, delta, grid, s.value("paths", 100), s.value("steps", 1000), c.cfg.seed);
  f5.certified = f4.threshold;
  f5.static_threshold = threshold_in_beta(mean, delta, Certificate::StaticDt, 1e-6, 1.0);
  c.csv("figure5.csv", figure5_table(f5));

  const auto betas = s.value("sample_betas", std::vector<double>{6.0e-4, 7.5e-4, 9.0e-4});
  const int sample_paths = s.value("sample_paths", 5);
  CsvTable t6{{"beta", "path_id", "k", "infected_count"}, {}};
  for (double beta : betas)
    for (int p = 0; p < sample_paths; ++p) {
      const auto tr = simulate_dt_exact(g, EpidemicParams::homogeneous(g.size(), beta, delta), s.value("steps", 1000),
                                        all_nodes(g.size()), true, path_seed(c.cfg.seed, static_cast<std::size_t>(p)));
      for (std::size_t k = 0; k < tr.times.size(); ++k)
        t6.rows.push_back({format_number(beta), std::to_string(p), format_number(tr.times[k]),
                           std::to_string(tr.infected_counts[k])});
    }
  c.csv("figure6.csv", t6);
  c.report("figure456.json", {{"certified_threshold", *f4.threshold},
                              {"static_threshold", *f5.static_threshold},
                              {"beta_star", f5.report.beta_star ? json(*f5.report.beta_star) : json(nullptr)}});
}

}  // namespace

RunOutcome run(const ExperimentConfig& config) {
  omp_set_num_threads(resolve_threads(config.threads));
  Context c(config);
  if (config.task == "threshold") task_threshold(c);
  else if (config.task == "simulate") task_simulate(c);
  else if (config.task == "empirical") task_empirical(c);
  else if (config.task == "oracle") task_oracle(c);
  else if (config.task == "chung") task_chung(c);
  else if (config.task == "spectra") task_spectra(c);
  else if (config.task == "figure3") task_figure3(c);
  else if (config.task == "figure456") task_figure456(c);
  else throw ConfigError("unknown task '" + config.task + "'");
  return c.out;
}

}  // namespace tempest
