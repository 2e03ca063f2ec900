#pragma once

#include <optional>

#include "qperc/cli.hpp"
#include "qperc/operator.hpp"
#include "qperc/percolation.hpp"

namespace qperc::cli {

/// The objects a validated config describes.
struct Setup {
  PeriodicGraph graph;
  HoppingKernel kernel;
  PercolationLaw law;
  SiteOverrides overrides;
  double bound = 0.0;

  Configuration configuration(std::uint64_t realization = 0) const;
};

Setup build_setup(const RunConfig& config);

/// nullopt for `free`.
std::optional<BoundaryPerturbation> make_perturbation(const RunConfig& config, const std::string& kind);

std::string read_file(const std::filesystem::path& path, const std::string& field);

}  // namespace qperc::cli
