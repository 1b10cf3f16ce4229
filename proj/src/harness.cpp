#include "qerg/harness.hpp"

#include "qerg/acceptance.hpp"
#include "qerg/clifford.hpp"
#include "qerg/commutant.hpp"
#include "qerg/exterior.hpp"
#include "qerg/frameflow.hpp"
#include "qerg/rng.hpp"
#include "qerg/torus.hpp"

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace qerg::harness {

namespace {

constexpr double kPi = std::numbers::pi;

// ─── Schema ──────────────────────────────────────────────────────────────────

enum class Kind { Number, Integer, String, Boolean, Array, Object, Any };

struct Field {
  Kind kind;
  json fallback;  // null: optional without default
};

using Schema = std::vector<std::pair<std::string, Field>>;

bool matches(const json& v, Kind kind) {
  switch (kind) {
    case Kind::Number: return v.is_number();
    case Kind::Integer: return v.is_number_integer();
    case Kind::String: return v.is_string();
    case Kind::Boolean: return v.is_boolean();
    case Kind::Array: return v.is_array();
    case Kind::Object: return v.is_object();
    case Kind::Any: return true;
  }
  return false;
}

const char* kind_name(Kind kind) {
  switch (kind) {
    case Kind::Number: return "number";
    case Kind::Integer: return "integer";
    case Kind::String: return "string";
    case Kind::Boolean: return "boolean";
    case Kind::Array: return "array";
    case Kind::Object: return "object";
    case Kind::Any: return "value";
  }
  return "value";
}

json apply_schema(const json& given, const Schema& schema, const std::string& where) {
  if (!given.is_object()) throw SchemaError(where + ": expected an object");
  json out = json::object();
  for (const auto& [key, value] : given.items()) {
    auto it = std::find_if(schema.begin(), schema.end(), [&](const auto& f) { return f.first == key; });
    if (it == schema.end()) throw SchemaError(where + ": unknown key '" + key + "'");
    if (!value.is_null() && !matches(value, it->second.kind)) {
      throw SchemaError(where + "." + key + ": expected " + kind_name(it->second.kind));
    }
    out[key] = value;
  }
  for (const auto& [key, field] : schema) {
    if (!out.contains(key)) out[key] = field.fallback;
  }
  return out;
}

json default_matrix_symbol() {
  return {{"label", "b"}, {"terms", json::array({{{"coeff", json::array({{1.0, 0.5}, {0.5, -1.0}})}}})}};
}

json scalar_term(double c, json fourier = nullptr, json xi = nullptr, json monomial = nullptr) {
  json t = {{"coeff", c}};
  if (!fourier.is_null()) t["fourier"] = fourier;
  if (!xi.is_null()) t["xi"] = xi;
  if (!monomial.is_null()) t["monomial"] = monomial;
  return t;
}

const Schema& manifold_schema() {
  static const Schema s = {
      {"name", {Kind::String, "genus2"}},
      {"n", {Kind::Integer, 2}},
      {"periods", {Kind::Array, nullptr}},
      {"kaehler", {Kind::Array, nullptr}},
  };
  return s;
}

Schema bundle_schema(const char* preset) {
  return {
      {"preset", {Kind::String, preset}}, {"n", {Kind::Integer, 2}},    {"r", {Kind::Integer, nullptr}},
      {"K", {Kind::Integer, 16}},         {"shift", {Kind::Number, nullptr}}, {"A", {Kind::Array, nullptr}},
      {"V", {Kind::Array, nullptr}},
  };
}

const Schema& symbol_schema() {
  static const Schema s = {{"label", {Kind::String, "b"}}, {"terms", {Kind::Array, json::array()}}};
  return s;
}

struct ExperimentSchema {
  std::string name;
  bool has_model;
  Schema model;
  Schema params;
};

const std::vector<ExperimentSchema>& schemas() {
  static const std::vector<ExperimentSchema> s = {
      {"frameflow", true, manifold_schema(),
       {{"k", {Kind::Integer, 2}},
        {"ensemble", {Kind::Integer, 10}},
        {"T", {Kind::Number, 100.0}},
        {"h", {Kind::Number, 1e-2}},
        {"space_samples", {Kind::Integer, 20000}},
        {"observables", {Kind::Array, json::array({"x1"})}}}},
      {"commutant", false, {},
       {{"algebra", {Kind::String, "spinor"}},
        {"n", {Kind::Integer, 3}},
        {"p", {Kind::Integer, 1}},
        {"restriction", {Kind::String, "none"}},
        {"xi", {Kind::Array, nullptr}}}},
      {"states", false, {},
       {{"algebra", {Kind::String, "spinor"}},
        {"n", {Kind::Integer, 3}},
        {"p", {Kind::Integer, 1}},
        {"samples", {Kind::Integer, 100}}}},
      {"decay", true, manifold_schema(),
       {{"connection", {Kind::String, "trivial"}},
        {"p", {Kind::Integer, 1}},
        {"symbol", {Kind::Object, {{"label", "x1"}, {"terms", json::array({scalar_term(1.0, nullptr, nullptr, json::array({1, 0}))})}}}},
        {"state", {Kind::String, "tr"}},
        {"T_grid", {Kind::Array, json::array({1.0, 10.0, 100.0})}},
        {"trajectories", {Kind::Integer, 100}},
        {"h", {Kind::Number, 1e-2}}}},
      {"egorov", true, bundle_schema("matrix"),
       {{"t", {Kind::Number, 1.0}},
        {"shells", {Kind::Array, nullptr}},
        {"symbol", {Kind::Object, default_matrix_symbol()}},
        {"flow_step", {Kind::Number, 1e-3}},
        {"width", {Kind::Number, 0.0}}}},
      {"weyl", true, bundle_schema("scalar"),
       {{"symbol",
         {Kind::Object,
          {{"label", "1+cos(x1)/2"},
           {"terms", json::array({scalar_term(1.0), scalar_term(0.25, json::array({1, 0})),
                                  scalar_term(0.25, json::array({-1, 0}))})}}}},
        {"Ns", {Kind::Array, nullptr}},
        {"lambda_lo", {Kind::Number, nullptr}},
        {"lambda_hi", {Kind::Number, nullptr}}}},
      {"variance", true, bundle_schema("free"),
       {{"symbol",
         {Kind::Object,
          {{"label", "xi1^2-xi2^2"},
           {"terms", json::array({scalar_term(1.0, nullptr, json::array({2, 0})),
                                  scalar_term(-1.0, nullptr, json::array({0, 2}))})}}}},
        {"Ns", {Kind::Array, nullptr}}}},
      {"suite", false, {}, {{"name", {Kind::String, nullptr}}}},
  };
  return s;
}

const ExperimentSchema& schema_for(const std::string& name) {
  for (const auto& s : schemas()) {
    if (s.name == name) return s;
  }
  throw SchemaError("unknown experiment '" + name + "'");
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigurationError(message);
}

cplx complex_from_json(const json& v) {
  if (v.is_number()) return cplx(v.get<double>(), 0.0);
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return cplx(v[0].get<double>(), v[1].get<double>());
  }
  throw SchemaError("expected a number or [re, im]");
}

std::vector<int> ints_from_json(const json& v, const std::string& what) {
  if (!v.is_array()) throw SchemaError(what + ": expected an integer array");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) throw SchemaError(what + ": expected an integer array");
    out.push_back(e.get<int>());
  }
  return out;
}

std::vector<double> doubles_from_json(const json& v, const std::string& what) {
  if (!v.is_array()) throw SchemaError(what + ": expected a number array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw SchemaError(what + ": expected a number array");
    out.push_back(e.get<double>());
  }
  return out;
}

RVec random_unit(int n, Rng& rng) {
  std::normal_distribution<double> normal;
  RVec v(n);
  for (int i = 0; i < n; ++i) v(i) = normal(rng);
  return v.normalized();
}

CMat random_matrix(int d, Rng& rng) {
  std::normal_distribution<double> normal;
  CMat a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = cplx(normal(rng), normal(rng));
  return a;
}

std::string format_number(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

// ─── Experiments ─────────────────────────────────────────────────────────────

frameflow::FrameObservable observable_from_name(const geometry::ManifoldModel& model, const std::string& name) {
  if (name == "x1") return frameflow::base_observable([](int, const Vec& x) { return x(0); }, name);
  if (name == "x2") return frameflow::base_observable([](int, const Vec& x) { return x(1); }, name);
  if (name == "x1x2") return frameflow::base_observable([](int, const Vec& x) { return x(0) * x(1); }, name);
  if (name == "x1^2-x2^2") {
    return frameflow::base_observable([](int, const Vec& x) { return x(0) * x(0) - x(1) * x(1); }, name);
  }
  if (name == "cos_x1") return frameflow::base_observable([](int, const Vec& x) { return std::cos(x(0)); }, name);
  if (name.rfind("frame:", 0) == 0) {
    int a = 0, c = 0;
    if (std::sscanf(name.c_str(), "frame:%d:%d", &a, &c) == 2) {
      return frameflow::frame_component_observable(model, a, c, name);
    }
  }
  throw ConfigurationError("unknown observable '" + name + "'");
}

void run_frameflow(const ExperimentConfig& cfg, ResultRecord& rec) {
  const auto model = manifold_from_json(cfg.model);
  frameflow::ErgodicityParams p;
  p.k = cfg.params["k"].get<int>();
  p.ensemble = cfg.params["ensemble"].get<int>();
  p.T = cfg.params["T"].get<double>();
  p.h = cfg.params["h"].get<double>();
  p.space_samples = cfg.params["space_samples"].get<int>();
  p.seed = cfg.seed;
  require(p.k >= 1 && p.k <= model.dim, "frameflow: k must be in 1..dim");
  require(p.ensemble >= 1 && p.T > 0.0 && p.h > 0.0 && p.space_samples >= 1, "frameflow: bad numeric parameters");
  std::vector<frameflow::FrameObservable> observables;
  for (const auto& o : cfg.params["observables"]) {
    if (!o.is_string()) throw SchemaError("params.observables: expected strings");
    observables.push_back(observable_from_name(model, o.get<std::string>()));
  }
  const auto report = frameflow::ergodicity_report(model, p, observables);
  for (const auto& s : report.summary) {
    rec.metrics[s.observable + ".mean_deviation"] = {s.mean_deviation, s.stderr_deviation};
    rec.metrics[s.observable + ".ensemble_deviation"] = {s.ensemble_deviation, std::nullopt};
    rec.metrics[s.observable + ".space_average"] = {s.space_average, std::nullopt};
  }
  std::ostringstream csv;
  frameflow::write_report_csv(csv, report);
  rec.tables.push_back({"report", csv.str()});
}

void run_commutant(const ExperimentConfig& cfg, ResultRecord& rec) {
  const std::string kind = cfg.params["algebra"].get<std::string>();
  const int n = cfg.params["n"].get<int>();
  const int p = cfg.params["p"].get<int>();
  const std::string restriction = cfg.params["restriction"].get<std::string>();
  require(n >= 2 && n <= 8, "commutant: n must be in 2..8");
  RVec xi;
  if (cfg.params["xi"].is_null()) {
    Rng rng = make_rng(cfg.seed, 0xc0, 0);
    xi = random_unit(n, rng);
  } else {
    const auto v = doubles_from_json(cfg.params["xi"], "params.xi");
    require(static_cast<int>(v.size()) == n, "commutant: xi must have n components");
    xi = RVec::Map(v.data(), n).normalized();
  }
  std::vector<CMat> gens;
  std::vector<std::pair<std::string, CMat>> candidates;
  if (kind == "spinor") {
    const auto rep = clifford::build_clifford(n);
    gens = clifford::spin_stabilizer_generators(rep, xi);
    candidates = clifford::commutant_candidates(rep, xi);
  } else if (kind == "forms") {
    require(p >= 1 && p < n, "commutant: forms need 0 < p < n");
    const auto f = exterior::make_fiber(n, p);
    gens = exterior::so_stabilizer_generators(f, xi);
    candidates = exterior::commutant_candidates_forms(f, xi);
  } else {
    throw ConfigurationError("commutant: algebra must be 'spinor' or 'forms'");
  }
  std::optional<CMat> Q;
  if (restriction != "none") {
    for (const auto& [label, m] : candidates) {
      if (label == restriction) Q = m;
    }
    if (!Q) throw CapabilityError("commutant: restriction '" + restriction + "' does not exist in this case");
  }
  const auto result = algebra::commutant(gens, Q ? &*Q : nullptr);
  rec.metrics["dimension"] = {static_cast<double>(result.dimension), std::nullopt};
  rec.metrics["gap"] = {result.gap, std::nullopt};
  rec.metrics["threshold"] = {result.threshold, std::nullopt};
  std::ostringstream csv;
  csv << "index,label\n";
  const auto labels = algebra::label_basis(result.basis, candidates);
  for (std::size_t i = 0; i < labels.size(); ++i) csv << i << ',' << labels[i] << '\n';
  rec.tables.push_back({"basis", csv.str()});
}

void run_states(const ExperimentConfig& cfg, ResultRecord& rec) {
  const auto r = state_identities(cfg.params["algebra"].get<std::string>(), cfg.params["n"].get<int>(),
                                  cfg.params["p"].get<int>(), cfg.params["samples"].get<int>(), cfg.seed);
  for (const auto& [name, value] : r) rec.metrics[name] = {value, std::nullopt};
}

transport::ConnectionSpec connection_from(const std::string& kind, int n, int p, int rank) {
  if (kind == "trivial") return transport::trivial_connection(rank);
  if (kind == "spinor") return transport::levi_civita_spinor(n);
  if (kind == "forms") return transport::levi_civita_forms(n, p);
  throw ConfigurationError("connection must be 'trivial', 'spinor' or 'forms'");
}

void run_decay(const ExperimentConfig& cfg, ResultRecord& rec) {
  const auto model = manifold_from_json(cfg.model);
  const std::string ck = cfg.params["connection"].get<std::string>();
  const int p = cfg.params["p"].get<int>();
  int rank = 1;
  if (ck == "spinor") rank = clifford::build_clifford(model.dim).rank;
  if (ck == "forms") rank = static_cast<int>(exterior::binomial(model.dim, p));
  const auto conn = connection_from(ck, model.dim, p, rank);
  const auto symbol = symbol_from_json(cfg.params["symbol"], model, rank);
  transport::DecayParams dp;
  dp.T_grid = doubles_from_json(cfg.params["T_grid"], "params.T_grid");
  dp.trajectories = cfg.params["trajectories"].get<int>();
  dp.h = cfg.params["h"].get<double>();
  dp.seed = cfg.seed;
  dp.kind = transport::parse_state_kind(cfg.params["state"].get<std::string>());
  require(!dp.T_grid.empty() && dp.trajectories >= 1 && dp.h > 0.0, "decay: bad numeric parameters");
  const auto table = transport::cesaro_and_decay(model, conn, symbol, dp);
  rec.metrics["centre"] = {table.centre.value, table.centre.standard_error};
  rec.metrics["subtracted"] = {table.subtracted, std::nullopt};
  for (const auto& row : table.rows) {
    rec.metrics["T=" + format_number(row.T)] = {row.estimate, row.standard_error};
  }
  const double first = table.rows.front().estimate;
  const double last = table.rows.back().estimate;
  rec.metrics["ratio_last_first"] = {first != 0.0 ? last / first : 0.0, std::nullopt};
  std::ostringstream csv;
  transport::write_decay_csv(csv, table);
  rec.tables.push_back({"decay", csv.str()});
}

void run_egorov(const ExperimentConfig& cfg, ResultRecord& rec) {
  const auto model = bundle_from_json(cfg.model);
  const auto base = torus::base_model(model);
  const auto symbol = symbol_from_json(cfg.params["symbol"], base, model.r);
  std::vector<double> shells = cfg.params["shells"].is_null()
                                   ? std::vector<double>{model.K / 4.0, model.K / 2.0}
                                   : doubles_from_json(cfg.params["shells"], "params.shells");
  torus::EgorovOptions opt;
  opt.flow_step = cfg.params["flow_step"].get<double>();
  opt.packet.width = cfg.params["width"].get<double>();
  require(opt.flow_step > 0.0, "egorov: flow_step must be positive");
  const auto rows = torus::egorov_compare(model, symbol, cfg.params["t"].get<double>(), shells, opt);
  for (const auto& row : rows) {
    const std::string key = "shell=" + format_number(row.shell);
    rec.metrics[key + ".max_rel_err"] = {row.max_rel_err, std::nullopt};
    rec.metrics[key + ".mean_rel_err"] = {row.mean_rel_err, std::nullopt};
  }
  std::ostringstream csv;
  torus::write_egorov_csv(csv, rows);
  rec.tables.push_back({"egorov", csv.str()});
}

std::vector<int> Ns_from(const json& v, int count) {
  if (v.is_null()) return {std::min(100, count), count};
  return ints_from_json(v, "params.Ns");
}

void run_weyl(const ExperimentConfig& cfg, ResultRecord& rec, bool variance) {
  const auto model = bundle_from_json(cfg.model);
  const auto base = torus::base_model(model);
  const auto symbol = symbol_from_json(cfg.params["symbol"], base, model.r);
  const auto eig = torus::low_spectrum(model);
  const auto Ns = Ns_from(cfg.params["Ns"], eig.count());
  const auto rows = variance ? torus::qe_variance(model, eig, symbol, Ns) : torus::weyl_mean(model, eig, symbol, Ns);
  rec.metrics["count"] = {static_cast<double>(eig.count()), std::nullopt};
  for (const auto& row : rows) {
    const std::string key = "N=" + std::to_string(row.N);
    if (variance) {
      rec.metrics[key + ".variance"] = {row.mean, std::nullopt};
    } else {
      rec.metrics[key + ".mean"] = {row.mean, std::nullopt};
      rec.metrics[key + ".relative_deviation"] = {
          row.target != 0.0 ? row.deviation / std::abs(row.target) : row.deviation, std::nullopt};
    }
  }
  rec.metrics["target"] = {rows.front().target, std::nullopt};
  if (variance) {
    const double first = rows.front().mean;
    rec.metrics["ratio_last_first"] = {first != 0.0 ? rows.back().mean / first : 0.0, std::nullopt};
  } else {
    const double K = model.K;
    const double lo = cfg.params["lambda_lo"].is_null() ? K * K / 16.0 : cfg.params["lambda_lo"].get<double>();
    const double hi = cfg.params["lambda_hi"].is_null() ? K * K / 4.0 : cfg.params["lambda_hi"].get<double>();
    rec.metrics["weyl_exponent"] = {torus::weyl_exponent(model, eig, lo, hi), std::nullopt};
  }
  std::ostringstream csv;
  torus::write_weyl_csv(csv, rows);
  rec.tables.push_back({variance ? "variance" : "weyl", csv.str()});
}

}  // namespace

// ─── Public API ──────────────────────────────────────────────────────────────

int exit_code(const std::exception& e) {
  if (dynamic_cast<const SchemaError*>(&e)) return kExitSchema;
  if (dynamic_cast<const ConfigurationError*>(&e)) return kExitConfiguration;
  if (dynamic_cast<const ArgumentError*>(&e)) return kExitArgument;
  if (dynamic_cast<const DomainError*>(&e)) return kExitDomain;
  if (dynamic_cast<const GeometryError*>(&e)) return kExitGeometry;
  if (dynamic_cast<const CapabilityError*>(&e)) return kExitCapability;
  if (dynamic_cast<const DegreeError*>(&e)) return kExitDegree;
  if (dynamic_cast<const TruncationError*>(&e)) return kExitTruncation;
  if (dynamic_cast<const ModelError*>(&e)) return kExitModel;
  if (dynamic_cast<const IoError*>(&e)) return kExitIo;
  return kExitInternal;
}

bool ResultRecord::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

json ResultRecord::to_json() const {
  json j;
  j["experiment"] = experiment;
  j["config"] = config;
  json m = json::object();
  for (const auto& [name, metric] : metrics) {
    json e = {{"value", metric.value}};
    if (metric.standard_error) e["stderr"] = *metric.standard_error;
    m[name] = e;
  }
  j["metrics"] = m;
  json checks_json = json::array();
  for (const auto& c : checks) {
    json e = {{"metric", c.metric}, {"value", c.value}, {"pass", c.pass}};
    if (c.min) e["min"] = *c.min;
    if (c.max) e["max"] = *c.max;
    checks_json.push_back(e);
  }
  j["checks"] = checks_json;
  j["passed"] = passed();
  j["wall_clock_seconds"] = wall_clock_seconds;
  return j;
}

json ExperimentConfig::to_json() const {
  json j = {{"experiment", experiment}, {"seed", seed}};
  if (!out.empty()) j["out"] = out;
  if (experiment == "suite") {
    if (runs.empty()) {
      j["params"] = params;
      return j;
    }
    json r = json::array();
    for (const auto& run : runs) r.push_back(run.to_json());
    j["runs"] = r;
    return j;
  }
  if (schema_for(experiment).has_model) j["model"] = model;
  j["params"] = params;
  if (!thresholds.empty()) j["thresholds"] = thresholds;
  return j;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& s : schemas()) out.push_back(s.name);
    return out;
  }();
  return names;
}

ExperimentConfig parse_config(const json& j) {
  const Schema top = {
      {"experiment", {Kind::String, nullptr}}, {"seed", {Kind::Integer, 0}},
      {"out", {Kind::String, ""}},             {"model", {Kind::Object, json::object()}},
      {"params", {Kind::Object, json::object()}}, {"thresholds", {Kind::Object, json::object()}},
      {"runs", {Kind::Array, nullptr}},
  };
  const json t = apply_schema(j, top, "config");
  if (t["experiment"].is_null()) throw SchemaError("config: missing key 'experiment'");
  ExperimentConfig cfg;
  cfg.experiment = t["experiment"].get<std::string>();
  const auto& schema = schema_for(cfg.experiment);
  if (t["seed"].get<long long>() < 0) throw ConfigurationError("config: seed must be nonnegative");
  cfg.seed = t["seed"].get<std::uint64_t>();
  cfg.out = t["out"].get<std::string>();
  if (cfg.experiment == "suite") {
    if (!t["model"].empty()) throw SchemaError("suite: takes no model");
    cfg.params = apply_schema(t["params"], schema.params, "params");
    if (t["runs"].is_null()) {
      if (cfg.params["name"].is_null()) throw SchemaError("suite: give params.name or 'runs'");
      try {
        acceptance::group(cfg.params["name"].get<std::string>());
      } catch (const ArgumentError& e) {
        throw ConfigurationError(e.what());
      }
      return cfg;
    }
    if (!cfg.params["name"].is_null()) throw SchemaError("suite: params.name and 'runs' are exclusive");
    if (!t["runs"].is_array() || t["runs"].empty()) throw SchemaError("suite: 'runs' must be a nonempty array");
    for (const auto& r : t["runs"]) {
      ExperimentConfig sub = parse_config(r);
      if (sub.experiment == "suite") throw SchemaError("suite: nested suites are not allowed");
      cfg.runs.push_back(std::move(sub));
    }
    return cfg;
  }
  if (!t["runs"].is_null()) throw SchemaError("config: 'runs' is only valid for a suite");
  if (!schema.has_model && !t["model"].empty()) throw SchemaError(cfg.experiment + ": takes no model");
  if (schema.has_model) cfg.model = apply_schema(t["model"], schema.model, "model");
  cfg.params = apply_schema(t["params"], schema.params, "params");
  for (const auto& [name, bounds] : t["thresholds"].items()) {
    const json b = apply_schema(bounds, {{"min", {Kind::Number, nullptr}}, {"max", {Kind::Number, nullptr}}},
                                "thresholds." + name);
    cfg.thresholds[name] = b;
  }
  return cfg;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot read config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigurationError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

CMat matrix_from_json(const json& j, int rank) {
  if (j.is_number() || (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())) {
    return complex_from_json(j) * CMat::Identity(rank, rank);
  }
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw SchemaError("expected a matrix as nested rows");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  if (rows != rank || cols != rank) {
    throw ConfigurationError("matrix is " + std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
                             std::to_string(rank) + "x" + std::to_string(rank));
  }
  CMat m(rows, cols);
  for (int a = 0; a < rows; ++a) {
    if (!j[a].is_array() || static_cast<int>(j[a].size()) != cols) throw SchemaError("ragged matrix rows");
    for (int b = 0; b < cols; ++b) m(a, b) = complex_from_json(j[a][b]);
  }
  return m;
}

geometry::ManifoldModel manifold_from_json(const json& raw) {
  const json j = apply_schema(raw, manifold_schema(), "model");
  const std::string name = j["name"].get<std::string>();
  const int n = j["n"].get<int>();
  if (name == "flat-torus") {
    std::vector<double> periods(static_cast<std::size_t>(n), 2.0 * kPi);
    if (!j["periods"].is_null()) periods = doubles_from_json(j["periods"], "model.periods");
    require(!periods.empty() && periods.size() <= 4, "flat-torus: 1..4 periods");
    for (double p : periods) require(p > 0.0, "flat-torus: periods must be positive");
    return geometry::flat_torus(periods);
  }
  if (name == "round-sphere") {
    require(n >= 2 && n <= 4, "round-sphere: n must be 2..4");
    return geometry::round_sphere(n);
  }
  if (name == "genus2") return geometry::genus2_hyperbolic();
  if (name == "kaehler-torus") {
    auto modes = geometry::default_kaehler_potential();
    if (!j["kaehler"].is_null()) {
      modes.clear();
      for (const auto& m : j["kaehler"]) {
        const json e = apply_schema(m,
                                    {{"k", {Kind::Array, nullptr}},
                                     {"amplitude", {Kind::Number, 0.0}},
                                     {"phase", {Kind::Number, 0.0}}},
                                    "model.kaehler");
        const auto k = ints_from_json(e["k"], "model.kaehler.k");
        require(k.size() == 4, "kaehler-torus: mode vectors have 4 entries");
        geometry::KaehlerMode mode;
        std::copy(k.begin(), k.end(), mode.k.begin());
        mode.amplitude = e["amplitude"].get<double>();
        mode.phase = e["phase"].get<double>();
        modes.push_back(mode);
      }
    }
    return geometry::kaehler_torus(modes);
  }
  throw ConfigurationError("unknown manifold '" + name + "'");
}

torus::TorusBundleModel bundle_from_json(const json& raw) {
  const json j = apply_schema(raw, bundle_schema("matrix"), "model");
  const std::string preset = j["preset"].get<std::string>();
  const int K = j["K"].get<int>();
  require(K >= 1, "bundle: K must be positive");
  torus::TorusBundleModel m;
  if (preset == "matrix") {
    m = torus::default_matrix_bundle(K);
  } else if (preset == "scalar") {
    m = torus::default_scalar_bundle(K);
  } else if (preset == "free" || preset == "custom") {
    const int n = j["n"].get<int>();
    const int r = j["r"].is_null() ? 1 : j["r"].get<int>();
    require(n >= 1 && n <= 3 && r >= 1, "bundle: need 1 <= n <= 3 and r >= 1");
    m = torus::free_bundle(n, r, K);
  } else {
    throw ConfigurationError("bundle: unknown preset '" + preset + "'");
  }
  if (!j["r"].is_null() && j["r"].get<int>() != m.r) throw ConfigurationError("bundle: r conflicts with the preset");
  if (preset != "free" && preset != "custom" && j["n"].get<int>() != m.n) {
    throw ConfigurationError("bundle: n conflicts with the preset");
  }
  if (!j["shift"].is_null()) m.shift = j["shift"].get<double>();
  auto field = [&](const json& list, const char* what) {
    torus::FourierMatrixField f{m.n, m.r, {}};
    for (const auto& e : list) {
      const json t = apply_schema(e, {{"mode", {Kind::Array, nullptr}}, {"coeff", {Kind::Any, nullptr}}}, what);
      const auto mode = ints_from_json(t["mode"], what);
      require(static_cast<int>(mode.size()) == m.n, std::string(what) + ": mode has the wrong dimension");
      const CMat c = matrix_from_json(t["coeff"], m.r);
      auto [it, fresh] = f.coeffs.emplace(mode, c);
      if (!fresh) it->second += c;
    }
    return f;
  };
  if (!j["A"].is_null()) {
    require(static_cast<int>(j["A"].size()) == m.n, "bundle: A needs one list per direction");
    m.A.clear();
    for (const auto& list : j["A"]) m.A.push_back(field(list, "model.A"));
  }
  if (!j["V"].is_null()) m.V = field(j["V"], "model.V");
  m.validate();
  return m;
}

transport::SymbolField symbol_from_json(const json& raw, const geometry::ManifoldModel& model, int rank) {
  const json j = apply_schema(raw, symbol_schema(), "symbol");
  struct Term {
    CMat coeff;
    std::vector<int> fourier, monomial, xi;
  };
  std::vector<Term> terms;
  int degree = 0;
  bool trig = true;
  const int n = model.dim;
  for (const auto& e : j["terms"]) {
    const json t = apply_schema(e,
                                {{"coeff", {Kind::Any, nullptr}},
                                 {"fourier", {Kind::Array, nullptr}},
                                 {"monomial", {Kind::Array, nullptr}},
                                 {"xi", {Kind::Array, nullptr}}},
                                "symbol.terms");
    if (t["coeff"].is_null()) throw SchemaError("symbol.terms: missing 'coeff'");
    Term term;
    term.coeff = matrix_from_json(t["coeff"], rank);
    auto vec_or = [&](const json& v, const char* what) {
      if (v.is_null()) return std::vector<int>(static_cast<std::size_t>(n), 0);
      auto out = ints_from_json(v, what);
      require(static_cast<int>(out.size()) == n, std::string(what) + ": needs one entry per dimension");
      return out;
    };
    term.fourier = vec_or(t["fourier"], "symbol.fourier");
    term.monomial = vec_or(t["monomial"], "symbol.monomial");
    term.xi = vec_or(t["xi"], "symbol.xi");
    for (int v : term.fourier) degree = std::max(degree, std::abs(v));
    for (int v : term.monomial) {
      require(v >= 0, "symbol: monomial powers must be nonnegative");
      if (v > 0) trig = false;
    }
    for (int v : term.xi) require(v >= 0, "symbol: xi powers must be nonnegative");
    terms.push_back(std::move(term));
  }
  const std::string label = j["label"].get<std::string>();
  return transport::matrix_symbol(
      [terms, model, n, rank](const Vec& x, const Vec& xi) {
        transport::CotangentPoint z;
        z.x = x;
        z.xi = xi;
        const RVec unit = transport::coframe_unit(model, z);
        CMat out = CMat::Zero(rank, rank);
        for (const auto& t : terms) {
          double phase = 0.0, factor = 1.0;
          for (int i = 0; i < n; ++i) {
            phase += t.fourier[static_cast<std::size_t>(i)] * x(i);
            factor *= std::pow(x(i), t.monomial[static_cast<std::size_t>(i)]) *
                      std::pow(unit(i), t.xi[static_cast<std::size_t>(i)]);
          }
          out += t.coeff * (std::exp(cplx(0.0, phase)) * factor);
        }
        return out;
      },
      rank, label, trig ? degree : -1);
}

ResultRecord run_experiment(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  ResultRecord rec;
  rec.experiment = cfg.experiment;
  rec.config = cfg.to_json();
  if (cfg.experiment == "frameflow") run_frameflow(cfg, rec);
  else if (cfg.experiment == "commutant") run_commutant(cfg, rec);
  else if (cfg.experiment == "states") run_states(cfg, rec);
  else if (cfg.experiment == "decay") run_decay(cfg, rec);
  else if (cfg.experiment == "egorov") run_egorov(cfg, rec);
  else if (cfg.experiment == "weyl") run_weyl(cfg, rec, false);
  else if (cfg.experiment == "variance") run_weyl(cfg, rec, true);
  else throw ArgumentError("run_experiment: '" + cfg.experiment + "' is not a single experiment");
  for (const auto& [name, bounds] : cfg.thresholds.items()) {
    auto it = rec.metrics.find(name);
    if (it == rec.metrics.end()) throw ConfigurationError("threshold on unknown metric '" + name + "'");
    Check c;
    c.metric = name;
    c.value = it->second.value;
    if (!bounds["min"].is_null()) c.min = bounds["min"].get<double>();
    if (!bounds["max"].is_null()) c.max = bounds["max"].get<double>();
    c.pass = (!c.min || c.value >= *c.min) && (!c.max || c.value <= *c.max);
    rec.checks.push_back(c);
  }
  rec.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

ResultRecord run_battery(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  ResultRecord rec;
  rec.experiment = "suite";
  rec.config = cfg.to_json();
  std::ostringstream csv;
  csv << "criterion,pass,seconds,summary\n";
  for (int id : acceptance::group(cfg.params["name"].get<std::string>())) {
    const auto r = acceptance::run_criterion(id, cfg.seed);
    const std::string key = "criterion." + std::to_string(id);
    rec.metrics[key] = {r.pass ? 1.0 : 0.0, std::nullopt};
    rec.metrics[key + ".seconds"] = {r.seconds, std::nullopt};
    rec.checks.push_back({key, 1.0, std::nullopt, r.pass ? 1.0 : 0.0, r.pass});
    std::string summary = r.summary;
    std::replace(summary.begin(), summary.end(), '"', '\'');
    csv << id << ',' << (r.pass ? 1 : 0) << ',' << r.seconds << ",\"" << summary << "\"\n";
  }
  rec.tables.push_back({"criteria", csv.str()});
  rec.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::vector<ResultRecord> run(const ExperimentConfig& cfg) {
  if (cfg.experiment != "suite") return {run_experiment(cfg)};
  if (cfg.runs.empty()) return {run_battery(cfg)};
  std::vector<ResultRecord> out;
  for (const auto& r : cfg.runs) out.push_back(run_experiment(r));
  return out;
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write to '" + tmp + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename result into '" + path + "'");
  }
}

void write_results(const std::string& path, const std::vector<ResultRecord>& records) {
  json doc;
  if (records.size() == 1) {
    doc = records.front().to_json();
  } else {
    doc = json::array();
    for (const auto& r : records) doc.push_back(r.to_json());
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (const auto& t : records[i].tables) {
      const std::string prefix = records.size() == 1 ? path : path + "." + std::to_string(i);
      write_atomic(prefix + "." + t.name + ".csv", t.csv);
    }
  }
  write_atomic(path, doc.dump(2) + "\n");
}

// ─── State identities ────────────────────────────────────────────────────────

std::map<std::string, double> state_identities(const std::string& kind, int n, int p, int samples,
                                               std::uint64_t seed) {
  require(samples >= 1, "states: samples must be positive");
  std::map<std::string, double> out;
  auto bump = [&](const std::string& key, double v) { out[key] = std::max(out[key], v); };
  if (kind == "spinor") {
    require(n >= 2 && n <= 8, "states: n must be in 2..8");
    const auto rep = clifford::build_clifford(n);
    const CMat id = CMat::Identity(rep.rank, rep.rank);
    out["residual.omega_mean_pm"] = 0.0;
    out["residual.unital"] = 0.0;
    out["positivity.min"] = 1e300;
    if (n % 2 == 0) out["residual.omega_mean_12"] = 0.0;
    for (int s = 0; s < samples; ++s) {
      Rng rng = make_rng(seed, 0x57, static_cast<std::uint64_t>(s));
      const RVec xi = random_unit(n, rng);
      const CMat a = random_matrix(rep.rank, rng);
      const auto st = clifford::fiber_states(rep, xi, a);
      bump("residual.omega_mean_pm", std::abs(st.omega - 0.5 * (st.omega_plus + st.omega_minus)) / a.norm());
      const auto one = clifford::fiber_states(rep, xi, id);
      double unital = std::max({std::abs(one.omega - 1.0), std::abs(one.omega_plus - 1.0),
                                std::abs(one.omega_minus - 1.0)});
      if (one.omega_1) unital = std::max({unital, std::abs(*one.omega_1 - 1.0), std::abs(*one.omega_2 - 1.0)});
      bump("residual.unital", unital);
      if (st.omega_1) {
        bump("residual.omega_mean_12", std::abs(st.omega - 0.5 * (*st.omega_1 + *st.omega_2)) / a.norm());
      }
      const CMat pos = a.adjoint() * a;
      const auto sp = clifford::fiber_states(rep, xi, pos);
      double lo = std::min({sp.omega.real(), sp.omega_plus.real(), sp.omega_minus.real()});
      if (sp.omega_1) lo = std::min({lo, sp.omega_1->real(), sp.omega_2->real()});
      out["positivity.min"] = std::min(out["positivity.min"], lo / pos.norm());
    }
    return out;
  }
  if (kind == "forms") {
    require(n >= 2 && n <= 8 && p >= 1 && p < n, "states: forms need 2 <= n <= 8 and 0 < p < n");
    const auto f = exterior::make_fiber(n, p);
    const CMat id = CMat::Identity(f.dim, f.dim);
    out["residual.tr_decomposition"] = 0.0;
    out["residual.unital"] = 0.0;
    out["positivity.min"] = 1e300;
    if (2 * p == n - 1) out["residual.t_mean_pm"] = 0.0;
    for (int s = 0; s < samples; ++s) {
      Rng rng = make_rng(seed, 0x58, static_cast<std::uint64_t>(s));
      const RVec xi = random_unit(n, rng);
      const CMat a = random_matrix(f.dim, rng);
      const auto st = exterior::fiber_states_forms(f, xi, a);
      const double nn = n;
      bump("residual.tr_decomposition",
           std::abs(st.omega_tr - ((nn - p) / nn) * st.omega_t - (p / nn) * st.omega_l) / a.norm());
      if (st.omega_plus) {
        bump("residual.t_mean_pm", std::abs(st.omega_t - 0.5 * (*st.omega_plus + *st.omega_minus)) / a.norm());
      }
      const auto one = exterior::fiber_states_forms(f, xi, id);
      double unital = std::max({std::abs(one.omega_tr - 1.0), std::abs(one.omega_t - 1.0),
                                std::abs(one.omega_l - 1.0)});
      if (one.omega_plus) {
        unital = std::max({unital, std::abs(*one.omega_plus - 1.0), std::abs(*one.omega_minus - 1.0)});
      }
      bump("residual.unital", unital);
      const CMat pos = a.adjoint() * a;
      const auto sp = exterior::fiber_states_forms(f, xi, pos);
      double lo = std::min({sp.omega_tr.real(), sp.omega_t.real(), sp.omega_l.real()});
      if (sp.omega_plus) lo = std::min({lo, sp.omega_plus->real(), sp.omega_minus->real()});
      out["positivity.min"] = std::min(out["positivity.min"], lo / pos.norm());
    }
    return out;
  }
  throw ConfigurationError("states: algebra must be 'spinor' or 'forms'");
}

}  // namespace qerg::harness
