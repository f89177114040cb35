// Command-line front end: one subcommand per experiment kind, or a config file.
//
//   catenoid_cli --config run.cfg [--out DIR] [--seed N]
//   catenoid_cli construct --dim 3 --neck 4 --metric g.metric --q -0.5 --tol 1e-8
//
// Exit status: 0 all checks pass, 1 a check failed, 2 invalid configuration,
// 3 module error.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>

#include "catenoid/harness.hpp"

using namespace catenoid::harness;

namespace {

const std::map<std::string, std::string>& flag_help() {
  static const std::map<std::string, std::string> h = {
      {"neck", "catenoid neck size c"},
      {"necks", "comma-separated neck sizes"},
      {"mass", "mass m"},
      {"masses", "comma-separated masses"},
      {"window", "integration window V"},
      {"v_max", "half-width of the v window"},
      {"n_v", "number of v nodes"},
      {"n_u", "number of u nodes"},
      {"max_iter", "iteration cap"},
      {"omega", "zero, sech, or a CSV file v,omega,domega,ddomega"},
      {"amplitude", "amplitude of the test field"},
      {"e_amplitude", "amplitude of the radial metric perturbation"},
      {"e_power", "decay power of the radial metric perturbation"},
      {"j", "Fourier mode"},
      {"flavor", "cosine or sine"},
      {"terms", "number of random manufactured terms"},
      {"j_max", "band limit of the random Parseval field"},
      {"dim", "dimension n of the catenoid"},
      {"q", "decay weight in (-(n-2), 0)"},
      {"tol", "Newton tolerance on sup|H|"},
      {"s_max", "half-width of the s grid"},
      {"n_s", "number of s nodes (odd)"},
      {"metric", "flat, schwarzschild, spline, or a metric file"},
      {"r0", "radius beyond which the metric is defined"},
      {"table", "r,h table for a spline metric"},
      {"tail_power", "power-law tail of a spline metric"},
      {"epsilon", "smallness threshold on the metric norm"},
  };
  return h;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Catenoid obstruction and construction experiments"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  std::string config_file, out_dir;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_file, "key = value experiment file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "seed for randomized suites");

  std::map<std::string, std::map<std::string, std::string>> flags;
  for (const auto& kind : experiment_kinds()) {
    auto* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
    for (const auto& key : catenoid::harness::detail::allowed_params().at(kind))
      sub->add_option("--" + key, flags[kind][key], flag_help().at(key));
  }
  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = config_file.empty() ? ExperimentConfig{} : ExperimentConfig::load(config_file);
    for (auto* sub : app.get_subcommands()) {
      const std::string kind = sub->get_name();
      if (!cfg.kind.empty() && cfg.kind != kind)
        throw ConfigError("kind", "config says '" + cfg.kind + "' but subcommand is '" + kind + "'");
      cfg.kind = kind;
      for (const auto& [key, value] : flags[kind])
        if (sub->count("--" + key) > 0) cfg.set(key, value);
    }
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed) cfg.seed = *seed;
    if (cfg.kind.empty()) throw ConfigError("kind", "give a subcommand or a config file with kind = ...");

    const RunReport rep = run(cfg);
    rep.write(std::cout);
    return rep.ok() ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
