// idrift: run a verification suite or draw beta samples.
//
//   idrift verify-laplace --replicas 20000 --out runs/laplace
//   idrift --config run.json --suite all --workers 1
//
// Flags override the config file. Exit status: 0 all checks pass, 1 a check
// failed (or a module error), 2 bad input, 3 numerical abort.

#include <CLI11.hpp>

#include <iostream>

#include "idrift/experiment.hpp"

int main(int argc, char** argv) {
  using namespace idrift;
  CLI::App app{"Interacting-drift S.D.E. toolkit: samplers and verification suites"};
  app.set_version_flag("--version", std::string(kToolkitVersion));

  std::string config_path;
  std::optional<std::string> suite;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::optional<std::string> out;
  std::optional<unsigned> workers;
  app.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--suite", suite, "Suite to run (default: all)");
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--replicas", replicas, "Replicas per check (overrides each check's default)");
  app.add_option("--out", out, "Output directory");
  app.add_option("--workers", workers, "Worker threads; results do not depend on it");

  std::string chosen;
  app.fallthrough();  // flags after the subcommand belong to the app
  for (const std::string& name : suite_names()) {
    app.add_subcommand(name, "Run the " + name + " suite")->callback([&chosen, name] { chosen = name; });
  }
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  ExperimentConfig config;
  try {
    if (!config_path.empty()) config = parse_config(config_path);
    if (!chosen.empty() && suite && *suite != chosen) {
      fail(ErrorKind::InvalidParams, "--suite " + *suite + " conflicts with subcommand " + chosen);
    }
    if (!chosen.empty()) config.suite = chosen;
    else if (suite) config.suite = *suite;
    if (seed) config.seed = *seed;
    if (replicas) config.replicas = *replicas;
    if (out) config.output_dir = *out;
    if (workers) config.workers = *workers;
    config.validate();
  } catch (const Error& e) {
    // Anything wrong with the inputs (a negative weight, say) is a config error.
    std::cerr << Json{{"error", std::string(to_string(e.kind()))}, {"message", e.what()}}.dump() << std::endl;
    return kExitUsage;
  }
  return run_suite(config);
}
