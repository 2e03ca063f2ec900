#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qperc/operator.hpp"

namespace qperc {

/// Default cap on the enumerated shape size.
inline constexpr int kDefaultMaxShapeSize = 10;

/// A finite connected induced subgraph up to translation. Vertices are in box
/// order and the smallest one sits in cell 0.
struct ClusterShape {
  std::vector<Vertex> vertices;

  std::size_t size() const { return vertices.size(); }
  friend auto operator<=>(const ClusterShape&, const ClusterShape&) = default;
};

ClusterShape canonical_shape(std::vector<Vertex> vertices);

/// Every connected induced subgraph with at most max_size vertices, one per
/// translation class, sorted by size and then vertex list. Grows shapes one
/// neighbor at a time with canonical-form deduplication.
std::vector<ClusterShape> enumerate_shapes(const PeriodicGraph& g, int max_size, int cap = kDefaultMaxShapeSize);

struct SigmaWitness {
  std::size_t shape = 0;  // index into SigmaTilde::shapes
  std::size_t multiplicity = 0;
};

struct SigmaLevel {
  double energy = 0.0;
  std::size_t min_witness_size = 0;
  std::vector<SigmaWitness> witnesses;  // distinct shapes, ascending index

  std::size_t witness_count() const { return witnesses.size(); }
};

/// Eigenvalues of compressions to all finite connected shapes up to a size,
/// clustered within tau.
struct SigmaTilde {
  int max_size = 0;
  double tau = 0.0;
  std::vector<ClusterShape> shapes;
  std::vector<SigmaLevel> levels;

  /// Level within `tolerance` of E, if any.
  const SigmaLevel* find(double energy, double tolerance) const;
};

SigmaTilde sigma_tilde(const PeriodicGraph& g, const HoppingKernel& k, int max_size,
                       std::optional<double> tau = std::nullopt, int cap = kDefaultMaxShapeSize, int workers = 1);

/// CSV `energy,min_witness_size,witness_count`.
void write_sigma_csv(std::ostream& out, const SigmaTilde& sigma, const std::string& provenance);

/// A finitely supported eigenvector of H_omega.
struct CompactEigenstate {
  double energy = 0.0;
  std::vector<Vertex> support;
  std::vector<double> amplitudes;  // parallel to support
  int diameter = 0;                // graph diameter of the support within X
  double residual = 0.0;           // relative residual at enlargement R
  bool on_boundary_cluster = false;
  BoxRegion region;                // box the state was found in
};

/// Default residual tolerance 1e-9 K sqrt(support size).
double default_tau_res(double norm_bound, std::size_t support_size);

struct Verification {
  bool certified = false;
  double residual = 0.0;
  double tolerance = 0.0;
};

/// Zero-extends the state to every vertex within `enlargement` of its support,
/// applies H compressed to the active vertices there, and compares
/// ||H f - E f|| / ||f|| with the tolerance (default_tau_res when absent).
/// Throws ConfigError when enlargement < R or the support is not active, and
/// when the support leaves the state's region.
Verification verify_compact_eigenstate(const PeriodicGraph& g, const HoppingKernel& k, const Configuration& cfg,
                                       const CompactEigenstate& state, int enlargement,
                                       std::optional<double> tau_res = std::nullopt);

struct MolecularOptions {
  std::optional<double> tau_deg;
  std::optional<double> tau_res;
};

/// Eigenvectors of the box compression at E that vanish on the shell of
/// width R, found as the null space of the shell restriction inside the
/// numerical eigenspace of each cluster. Every returned state is certified.
std::vector<CompactEigenstate> molecular_search(const PeriodicGraph& g, const HoppingKernel& k,
                                                const Configuration& cfg, const BoxRegion& box, double energy,
                                                const MolecularOptions& options = {});

}  // namespace qperc
