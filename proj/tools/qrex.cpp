// qrex: command-line driver. Exit codes: 0 ok/accept, 2 protocol abort, 3 nonpositive rate,
// 4 config or domain error, 5 numerical failure.
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qrex/commands.hpp"
#include "qrex/sdp.hpp"

int main(int argc, char** argv) {
  using namespace qrex;
  CLI::App app{"Randomness expansion: certificates, finite-size rates, simulation and extraction"};
  app.require_subcommand(1);

  std::string config_path;
  int workers = 0;
  std::string out_dir;
  long long seed = -1;

  struct Cmd {
    const char* name;
    const char* help;
    int (*fn)(const RunConfig&, std::ostream&);
  };
  const Cmd cmds[] = {
      {"rate", "certificate, entropy rate and finite-size output length for one parameter point", cmd_rate},
      {"sweep", "rate over the grid in the sweep section, one CSV row per point", cmd_sweep},
      {"simulate", "simulate one run and apply the acceptance test", cmd_simulate},
      {"certify", "simulate or ingest a run, test it and extract on accept", cmd_certify},
      {"extract", "Toeplitz extraction of a raw bit file with a seed file", cmd_extract},
      {"device", "modulator intensity and phase curves plus working points", cmd_device},
      {"calibrate-delta", "tolerances delta for the completeness target", cmd_calibrate_delta},
  };
  for (const auto& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("-c,--config", config_path, "JSON configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("-w,--workers", workers, "worker threads (QREX_WORKERS overrides)")->check(CLI::PositiveNumber);
    sub->add_option("-o,--out-dir", out_dir, "output directory");
    sub->add_option("-s,--seed", seed, "simulation seed")->check(CLI::NonNegativeNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (workers > 0) cfg.workers = workers;
    if (!out_dir.empty()) cfg.paths.out_dir = out_dir;
    if (seed >= 0) cfg.simulation.seed = static_cast<std::uint64_t>(seed);
    for (const auto& c : cmds)
      if (app.got_subcommand(c.name)) return c.fn(cfg, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitConfig;
}
