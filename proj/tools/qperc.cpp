#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

#include "qperc/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Spectra and integrated density of states of percolation Hamiltonians"};
  app.require_subcommand(1);
  qperc::cli::RunOptions options;
  app.add_option("--workers", options.workers, "worker threads (default: QPERC_WORKERS or 1)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--emit-gnuplot-hints", options.gnuplot_hints, "write companion gnuplot scripts");

  const std::map<std::string, std::string> help = {
      {"ids", "IDS curves along the box schedule and their convergence report"},
      {"bc-compare", "sup-norm IDS distance between two boundary treatments per box"},
      {"moments", "spectral moments against closed-walk counts"},
      {"enumerate", "eigenvalues of all finite cluster shapes up to a size"},
      {"jumps", "ensemble estimate of the IDS jump at an energy"},
      {"molecular", "certified compactly supported eigenstates in a box"},
      {"validate-config", "print the resolved configuration"},
  };
  std::string config;
  for (const auto& name : qperc::cli::subcommands()) {
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("config", config, "run configuration file")->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qperc::cli::kConfigError;
  }
  return qperc::cli::run_command(app.get_subcommands().front()->get_name(), config, options, std::cout, std::cerr);
}
