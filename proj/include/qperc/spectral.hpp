#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qperc/operator.hpp"

namespace qperc {

/// Sorted eigenvalues of a compressed operator, with multiplicity.
struct Spectrum {
  std::vector<double> values;
  std::string provenance;

  std::size_t dim() const { return values.size(); }
};

Spectrum eigenvalues(const SymMatrix& m, int workers = 1);
Spectrum eigenvalues(const CompressedOperator& op, int workers = 1);

/// Default degeneracy tolerance for a spectrum bounded by K.
inline double default_tau_deg(double norm_bound) { return 1e-8 * norm_bound; }

struct DegeneracyLevel {
  double energy = 0.0;  // mean of the cluster
  std::size_t multiplicity = 0;
};

using DegeneracyList = std::vector<DegeneracyLevel>;

/// Single-linkage clustering of the sorted eigenvalues: consecutive values
/// closer than tau share a level.
DegeneracyList degeneracy_cluster(const Spectrum& spec, double tau);

/// #{levels below E} / normalizer, counting each level with its multiplicity.
/// The inequality is strict: a level within tau of E is not below E.
double counting(const Spectrum& spec, double energy, double normalizer, double tau);
double counting(const DegeneracyList& levels, double energy, double normalizer, double tau);

/// counting() at every grid point.
std::vector<double> counting_curve(const DegeneracyList& levels, std::span<const double> grid, double normalizer,
                                   double tau);

/// sum_i lambda_i^m / normalizer.
double moment_spectral(const Spectrum& spec, int m, double normalizer);

/// Default cap on walk length for the closed-walk expansion.
inline constexpr int kDefaultMaxWalkLength = 8;

/// Tr(M^m) as a sum over closed walks, by repeated sparse products with
/// blocks of indicator columns. Never touches an eigensolver.
double closed_walk_trace(const SymMatrix& m, int length);

/// (M^m)(r, r) for each requested row.
std::vector<double> closed_walk_diagonal(const SymMatrix& m, int length, std::span<const std::size_t> rows);

/// Closed-walk moment of the active compression in a box, optionally with a
/// boundary perturbation: Tr((H + B)^m) / normalizer.
double moment_walks(const PeriodicGraph& g, const HoppingKernel& k, const Configuration& cfg, const BoxRegion& box,
                    int m, const BoundaryPerturbation* pert, double normalizer,
                    int max_length = kDefaultMaxWalkLength);

/// |Tr((H^box)^m) - Tr(chi_box H^m)| / |box|. The second trace is exact: the
/// diagonal of H^m at v only sees the ball of radius m R around v, so it is
/// computed on the box enlarged by m times the kernel's cell reach.
double boundary_trace_gap(const PeriodicGraph& g, const HoppingKernel& k, const Configuration& cfg,
                          const BoxRegion& box, int m);

/// |shell of width R m| * deg_+^(m^2 R) / |box|.
double boundary_trace_gap_bound(const PeriodicGraph& g, const HoppingKernel& k, const BoxRegion& box, int m);

/// One eigenvalue per line with 17 significant digits after a provenance line.
void write_spectrum(std::ostream& out, const Spectrum& spec);

std::string format_double(double x);

}  // namespace qperc
