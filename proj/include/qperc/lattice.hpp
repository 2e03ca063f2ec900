#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace qperc {

/// Largest supported lattice dimension. Unused trailing cell components are zero.
inline constexpr int kMaxDim = 4;

using Cell = std::array<std::int64_t, kMaxDim>;

Cell operator+(const Cell& a, const Cell& b);
Cell operator-(const Cell& a, const Cell& b);
Cell operator-(const Cell& a);

/// A vertex of the periodic graph: an orbit of the translation action and a
/// cell. Translations act by shifting the cell and never change the orbit.
struct Vertex {
  int orbit = 0;
  Cell cell{};

  /// Box order: cells lexicographically (first coordinate slowest), then orbit.
  friend std::strong_ordering operator<=>(const Vertex& a, const Vertex& b) {
    if (auto c = a.cell <=> b.cell; c != 0) return c;
    return a.orbit <=> b.orbit;
  }
  friend bool operator==(const Vertex&, const Vertex&) = default;

  Vertex translated(const Cell& shift) const { return {orbit, cell + shift}; }
};

struct VertexHash {
  std::size_t operator()(const Vertex& v) const noexcept;
};

using VertexSet = std::unordered_set<Vertex, VertexHash>;

/// One orbit of edges: joins (orbit_a, c) with (orbit_b, c + offset) for all cells c.
struct EdgeGenerator {
  int orbit_a = 0;
  int orbit_b = 0;
  Cell offset{};
  friend bool operator==(const EdgeGenerator&, const EdgeGenerator&) = default;
};

/// An incident edge seen from one orbit.
struct Hop {
  int orbit = 0;
  Cell offset{};
};

/// A Z^d-periodic simple graph given by its finite quotient.
///
/// The constructor validates the quotient description: no self loops, no edge
/// listed twice (in either orientation), and connectedness of the lifted graph.
class PeriodicGraph {
 public:
  PeriodicGraph(int dimension, int orbit_count, std::vector<EdgeGenerator> generators,
                std::string name = "custom");

  int dimension() const { return dimension_; }
  int orbit_count() const { return orbit_count_; }
  const std::vector<EdgeGenerator>& generators() const { return generators_; }
  const std::string& name() const { return name_; }

  /// Maximum vertex degree over all orbits.
  int max_degree() const { return max_degree_; }
  int degree(int orbit) const { return static_cast<int>(hops_.at(orbit).size()); }

  /// Largest absolute cell-coordinate change along a single edge.
  std::int64_t max_cell_step() const { return max_cell_step_; }

  const std::vector<Hop>& hops(int orbit) const { return hops_.at(orbit); }
  std::vector<Vertex> neighbors(const Vertex& v) const;

  friend bool operator==(const PeriodicGraph& a, const PeriodicGraph& b) {
    return a.dimension_ == b.dimension_ && a.orbit_count_ == b.orbit_count_ &&
           a.generators_ == b.generators_;
  }

 private:
  int dimension_;
  int orbit_count_;
  std::vector<EdgeGenerator> generators_;
  std::string name_;
  std::vector<std::vector<Hop>> hops_;
  int max_degree_ = 0;
  std::int64_t max_cell_step_ = 0;
};

enum class Preset { chain, square, cubic, triangular, honeycomb };

std::optional<Preset> parse_preset(std::string_view name);
PeriodicGraph build_preset(Preset preset);
/// Throws ConfigError for unknown names.
PeriodicGraph build_preset(std::string_view name);

/// Crystal-graph text format: a header `d orbit_count`, then one generator per
/// line `orbit_a orbit_b o_1 ... o_d`. `#` starts a comment.
PeriodicGraph parse_crystal(std::string_view text, std::string name = "custom");
std::string format_crystal(const PeriodicGraph& g);

/// Shortest path length, or nullopt when it exceeds `cutoff`. With
/// `restrict_to`, paths may only visit vertices of that set (both endpoints
/// must belong to it).
std::optional<int> graph_distance(const PeriodicGraph& g, const Vertex& from, const Vertex& to,
                                  int cutoff, const VertexSet* restrict_to = nullptr);

/// Axis-aligned box of cells; its vertex set holds every orbit of every cell.
struct BoxRegion {
  int dimension = 1;
  Cell lower{};
  Cell sides{};

  static BoxRegion cube(int dimension, std::int64_t side, const Cell& lower = {});

  std::size_t cell_count() const;
  std::size_t vertex_count(const PeriodicGraph& g) const { return cell_count() * g.orbit_count(); }
  bool contains(const Cell& c) const;
  bool contains(const Vertex& v) const { return contains(v.cell); }
  BoxRegion enlarged(std::int64_t margin) const;
  BoxRegion translated(const Cell& shift) const;
  std::string describe() const;

  friend bool operator==(const BoxRegion&, const BoxRegion&) = default;
};

/// Bijection between the vertices of a box and 0..vertex_count-1 in box order.
class BoxIndexer {
 public:
  BoxIndexer(const PeriodicGraph& g, const BoxRegion& box);

  std::size_t size() const { return size_; }
  std::size_t cell_index(const Cell& c) const;
  std::size_t index(const Vertex& v) const { return cell_index(v.cell) * orbits_ + v.orbit; }
  std::optional<std::size_t> find(const Vertex& v) const;
  Vertex vertex(std::size_t index) const;
  const BoxRegion& box() const { return box_; }

 private:
  BoxRegion box_;
  std::size_t orbits_;
  std::size_t size_;
  std::array<std::size_t, kMaxDim> stride_{};
};

std::vector<Vertex> box_vertices(const PeriodicGraph& g, const BoxRegion& box);

/// dist(v, complement of box) in the full graph for every box vertex, in box
/// order. Values above `cutoff` are reported as cutoff + 1.
std::vector<int> boundary_distances(const PeriodicGraph& g, const BoxRegion& box, int cutoff);

/// Thickened boundary {v in box : dist(v, complement) <= h}, in box order.
std::vector<Vertex> boundary_shell(const PeriodicGraph& g, const BoxRegion& box, int h);
double boundary_ratio(const PeriodicGraph& g, const BoxRegion& box, int h);

/// Nested cubes anchored at a common corner with strictly increasing sides.
class ExhaustionSchedule {
 public:
  ExhaustionSchedule(std::vector<std::int64_t> sides, Cell lower = {});

  const std::vector<std::int64_t>& sides() const { return sides_; }
  std::size_t size() const { return sides_.size(); }
  BoxRegion box(const PeriodicGraph& g, std::size_t j) const;

 private:
  std::vector<std::int64_t> sides_;
  Cell lower_;
};

std::string format_cell(const Cell& c, int dimension);
std::string format_vertex(const Vertex& v, int dimension);

}  // namespace qperc
