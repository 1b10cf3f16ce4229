#include "qerg/harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

using qerg::harness::json;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  // frameflow / decay
  std::optional<std::string> manifold;
  std::optional<double> T, h;
  std::optional<int> ensemble, trajectories;
  // commutant / states
  std::optional<std::string> algebra, restriction;
  std::optional<int> n, p, samples;
  // torus
  std::optional<int> K, r;
  std::optional<std::string> preset;
  std::optional<double> t;
  std::vector<double> shells;
  std::vector<int> Ns;
  // suite
  std::optional<std::string> name;
};

template <class T>
void put(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

json build_config(const std::string& experiment, const Flags& f) {
  json cfg = f.config.empty() ? json::object() : qerg::harness::read_json_file(f.config);
  if (!cfg.is_object()) throw qerg::SchemaError("config: expected an object");
  if (cfg.contains("experiment") && cfg["experiment"] != experiment) {
    throw qerg::ConfigurationError("config file is for '" + cfg["experiment"].dump() + "', not '" + experiment + "'");
  }
  cfg["experiment"] = experiment;
  if (f.seed) cfg["seed"] = *f.seed;
  if (!f.out.empty()) cfg["out"] = f.out;
  json& params = cfg["params"];
  if (params.is_null()) params = json::object();
  if (experiment == "frameflow" || experiment == "decay" || experiment == "egorov" || experiment == "weyl" ||
      experiment == "variance") {
    json& model = cfg["model"];
    if (model.is_null()) model = json::object();
    put(model, "name", f.manifold);
    put(model, "K", f.K);
    put(model, "r", f.r);
    put(model, "preset", f.preset);
    if (experiment == "egorov" || experiment == "weyl" || experiment == "variance") put(model, "n", f.n);
  }
  put(params, "T", f.T);
  put(params, "h", f.h);
  put(params, "ensemble", f.ensemble);
  put(params, "trajectories", f.trajectories);
  put(params, "algebra", f.algebra);
  put(params, "restriction", f.restriction);
  if (experiment == "commutant" || experiment == "states") put(params, "n", f.n);
  put(params, "p", f.p);
  put(params, "samples", f.samples);
  put(params, "t", f.t);
  if (!f.shells.empty()) params["shells"] = f.shells;
  if (!f.Ns.empty()) params["Ns"] = f.Ns;
  put(params, "name", f.name);
  return cfg;
}

int execute(const std::string& experiment, const Flags& f) {
  try {
    const auto cfg = qerg::harness::parse_config(build_config(experiment, f));
    const auto records = qerg::harness::run(cfg);
    bool passed = true;
    for (const auto& rec : records) {
      for (const auto& t : rec.tables) std::cout << "# " << rec.experiment << ' ' << t.name << '\n' << t.csv;
      for (const auto& c : rec.checks) {
        std::cerr << c.metric << " = " << c.value << (c.pass ? " pass" : " FAIL") << '\n';
      }
      passed = passed && rec.passed();
    }
    if (!cfg.out.empty()) qerg::harness::write_results(cfg.out, records);
    return passed ? qerg::harness::kExitOk : qerg::harness::kExitThresholdFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return qerg::harness::exit_code(e);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum ergodicity experiments"};
  app.require_subcommand(1);
  Flags f;
  std::string chosen;
  for (const auto& name : qerg::harness::experiment_names()) {
    auto* sub = app.add_subcommand(name, "Run the " + name + " experiment");
    sub->add_option("--config", f.config, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", f.seed, "Global seed");
    sub->add_option("--out", f.out, "JSON result path (CSV tables are written next to it)");
    if (name == "frameflow" || name == "decay") {
      sub->add_option("--manifold", f.manifold, "flat-torus | round-sphere | genus2 | kaehler-torus");
      sub->add_option("--T", f.T, "Time horizon");
      sub->add_option("--step", f.h, "Integration step h");
    }
    if (name == "frameflow") sub->add_option("--ensemble", f.ensemble, "Number of trajectories");
    if (name == "decay") {
      sub->add_option("--trajectories", f.trajectories, "Number of trajectories");
      sub->add_option("--p", f.p, "Form degree for the forms connection");
    }
    if (name == "commutant" || name == "states") {
      sub->add_option("--algebra", f.algebra, "spinor | forms");
      sub->add_option("--n", f.n, "Dimension");
      sub->add_option("--p", f.p, "Form degree");
    }
    if (name == "commutant") sub->add_option("--restriction", f.restriction, "none or a candidate label (P+, P-, P)");
    if (name == "states") sub->add_option("--samples", f.samples, "Random endomorphisms");
    if (name == "egorov" || name == "weyl" || name == "variance") {
      sub->add_option("--preset", f.preset, "free | matrix | scalar");
      sub->add_option("--n", f.n, "Torus dimension");
      sub->add_option("--r", f.r, "Fiber rank");
      sub->add_option("--K", f.K, "Fourier cutoff");
    }
    if (name == "egorov") {
      sub->add_option("--t", f.t, "Propagation time");
      sub->add_option("--shells", f.shells, "Packet shells");
    }
    if (name == "weyl" || name == "variance") sub->add_option("--Ns", f.Ns, "Cesaro lengths");
    if (name == "suite") sub->add_option("--name", f.name, "algebra | dynamics | egorov | all");
    sub->callback([&chosen, name] { chosen = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : qerg::harness::kExitArgument;
  }
  return execute(chosen, f);
}
