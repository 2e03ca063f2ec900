#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qperc/operator.hpp"
#include "qperc/spectral.hpp"

namespace qperc {

enum class Normalization {
  box,     // divide by the number of box vertices (consistent with the trace formula)
  active,  // divide by the number of compressed vertices (mass one)
};

struct IdsOptions {
  std::size_t grid_points = 2001;
  Normalization normalization = Normalization::box;
  std::optional<double> tau_deg;  // defaults to default_tau_deg(K)
  int workers = 1;
};

/// Uniform grid of `points` energies on [-bound, bound].
std::vector<double> uniform_grid(double bound, std::size_t points);
/// Sorted union of a grid and extra probe energies.
std::vector<double> merge_probes(std::vector<double> grid, std::span<const double> probes);

/// A sampled integrated density of states: nondecreasing values on a
/// strictly increasing energy grid that ends at +K.
struct IDSCurve {
  std::vector<double> energy;
  std::vector<double> value;
  std::vector<double> stderr_;  // zero for single-configuration curves
  std::string estimator;
  std::size_t samples = 1;
  std::string box;

  double mass() const { return value.empty() ? 0.0 : value.back(); }
};

struct ConvergenceReport {
  std::string estimator;
  std::vector<std::int64_t> schedule;
  std::vector<double> distances;  // sup-norm between consecutive curves at continuity probes
  std::size_t probes = 0;
  std::size_t excluded_probes = 0;
  std::vector<double> probe_energies;
  std::vector<std::vector<double>> probe_values;  // [probe][box]

  std::string to_text() const;
};

struct ExhaustionResult {
  std::vector<IDSCurve> curves;
  ConvergenceReport report;
};

/// N_omega^j for every box of the schedule, all from the same configuration,
/// on one shared grid: uniform on [-K, K] plus every degeneracy level of every
/// curve. Probes within tau of a degenerate level (a candidate jump) are left
/// out of the convergence distances.
ExhaustionResult ids_exhaustion(const PeriodicGraph& g, const HoppingKernel& k, const Configuration& cfg,
                                const ExhaustionSchedule& schedule, const IdsOptions& options = {},
                                const BoundaryPerturbation* pert = nullptr);

/// Same as ids_exhaustion with the operator restricted to the clusters that
/// touch the box boundary. The normalizer stays the full box count.
ExhaustionResult ids_infinite_cluster(const PeriodicGraph& g, const HoppingKernel& k, const Configuration& cfg,
                                      const ExhaustionSchedule& schedule, const IdsOptions& options = {});

/// Ensemble estimate |F|^-1 E{Tr(chi_F P(]-inf, E[))}: the spectral projector
/// of the box operator is traced over every translate of the fundamental
/// domain whose cells are at least `buffer` cells inside the box, then averaged
/// over realizations 0..n-1 of the law. Values carry standard errors over
/// realizations. Evaluated on `grid` (uniform on [-K, K] when empty).
IDSCurve ids_trace_formula(const PeriodicGraph& g, const HoppingKernel& k, const PercolationLaw& law,
                           std::size_t realizations, const BoxRegion& box, int buffer,
                           const IdsOptions& options = {}, std::span<const double> grid = {});

struct BoundaryDistance {
  std::int64_t side = 0;
  double distance = 0.0;
};

/// sup over the grid of |N_A - N_B| per box size, for two boundary treatments
/// (nullptr = free boundary) of the same configuration.
std::vector<BoundaryDistance> compare_boundary(const PeriodicGraph& g, const HoppingKernel& k,
                                               const Configuration& cfg, const ExhaustionSchedule& schedule,
                                               const BoundaryPerturbation* pert_a,
                                               const BoundaryPerturbation* pert_b, const IdsOptions& options = {});

struct JumpSample {
  std::int64_t side = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
};

struct JumpEstimate {
  double energy = 0.0;
  double tau = 0.0;
  std::vector<JumpSample> trend;
  double height = 0.0;  // value at the largest box
  double stderr_ = 0.0;
  bool present = false;
};

/// Fraction of eigenvalues within tau of E per box vertex, averaged over
/// realizations, per box size. Reported present when the two largest sizes
/// agree within 20% and the largest-size height exceeds three standard errors.
JumpEstimate jump_estimate(const PeriodicGraph& g, const HoppingKernel& k, const PercolationLaw& law, double energy,
                           std::size_t realizations, const ExhaustionSchedule& schedule,
                           const IdsOptions& options = {});

/// CSV `energy,value,stderr` with 17 significant digits, after a `#` provenance line.
void write_ids_csv(std::ostream& out, const IDSCurve& curve, const std::string& provenance);

/// Mean and standard error (sample standard deviation / sqrt(n)).
std::pair<double, double> mean_and_stderr(std::span<const double> samples);

}  // namespace qperc
