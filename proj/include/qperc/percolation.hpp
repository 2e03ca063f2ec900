#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qperc/lattice.hpp"

namespace qperc {

/// Counter-based site hash. The value depends only on the arguments:
///   h = mix64(seed); h = mix64(h ^ realization); h = mix64(h ^ orbit);
///   h = mix64(h ^ zigzag(c_k)) for each of the d cell coordinates,
/// where mix64 is the SplitMix64 finalizer and zigzag(c) = (c << 1) ^ (c >> 63).
std::uint64_t site_hash(std::uint64_t seed, std::uint64_t realization, int orbit,
                        std::span<const std::int64_t> cell);

/// Independent Bernoulli site percolation with one activation probability per orbit.
struct PercolationLaw {
  std::vector<double> probabilities;
  std::uint64_t seed = 0;
  std::uint64_t realization = 0;

  static PercolationLaw uniform(int orbit_count, double p, std::uint64_t seed,
                                std::uint64_t realization = 0);
  PercolationLaw with_realization(std::uint64_t r) const;
  /// Throws ConfigError naming `p` when a probability is outside [0, 1].
  void validate(const PeriodicGraph& g) const;
};

/// Activation threshold: a site is active iff its hash is below floor(p * 2^64);
/// p == 1 activates every site.
struct ActivationThreshold {
  std::uint64_t threshold = 0;
  bool always = false;
  explicit ActivationThreshold(double p);
  bool accepts(std::uint64_t u) const { return always || u < threshold; }
};

using SiteOverrides = std::unordered_map<Vertex, bool, VertexHash>;

/// A configuration omega: a pure function vertex -> {active, deleted}. Site
/// statuses never depend on which box is queried, so nested boxes see the same omega.
class Configuration {
 public:
  Configuration(const PeriodicGraph& g, PercolationLaw law);

  /// Explicit statuses that take precedence over the law.
  Configuration with_overrides(SiteOverrides overrides) const;

  bool is_active(const Vertex& v) const;
  /// Status of every vertex of the box, in box order (1 = active).
  std::vector<std::uint8_t> box_mask(const BoxRegion& box) const;

  const PercolationLaw& law() const { return law_; }
  int dimension() const { return dimension_; }
  bool has_overrides() const { return overrides_ && !overrides_->empty(); }
  std::string describe() const;

 private:
  int dimension_;
  int orbit_count_;
  PercolationLaw law_;
  std::vector<ActivationThreshold> thresholds_;
  std::shared_ptr<const SiteOverrides> overrides_;
};

/// Explicit-configuration text: lines `orbit c_1 ... c_d status`, status in {0,1}.
SiteOverrides parse_site_overrides(std::string_view text, const PeriodicGraph& g);
std::string format_site_overrides(const SiteOverrides& overrides, int dimension);

/// The active vertices of a box with lookup tables in both directions.
struct ActiveSet {
  BoxRegion box;
  std::vector<std::uint8_t> mask;      // per box index
  std::vector<std::size_t> box_index;  // active position -> box index, ascending
  std::vector<std::int64_t> position;  // box index -> active position or -1

  std::size_t size() const { return box_index.size(); }
};

ActiveSet active_set(const PeriodicGraph& g, const Configuration& cfg, const BoxRegion& box);

std::vector<Vertex> active_vertices(const PeriodicGraph& g, const Configuration& cfg, const BoxRegion& box);

/// Edges of the induced subgraph on active box vertices, each once, ordered
/// by (first, second) in box order with first < second.
std::vector<std::pair<Vertex, Vertex>> active_subgraph_edges(const PeriodicGraph& g, const Configuration& cfg,
                                                             const BoxRegion& box);

struct Cluster {
  std::vector<Vertex> members;  // box order; members.front() is the label
  bool touches_boundary = false;
  std::size_t size() const { return members.size(); }
};

/// Connected components of the active induced subgraph within a box, sorted
/// by their smallest member.
struct ClusterDecomposition {
  std::vector<Cluster> clusters;
  std::size_t active_count() const;
};

ClusterDecomposition clusters(const PeriodicGraph& g, const Configuration& cfg, const BoxRegion& box);

/// Union of clusters meeting the unit boundary shell: the finite-volume stand-in
/// for the infinite cluster. Box order.
std::vector<Vertex> boundary_touching(const PeriodicGraph& g, const Configuration& cfg, const BoxRegion& box);

}  // namespace qperc
