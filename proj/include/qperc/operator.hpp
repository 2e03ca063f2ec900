#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qperc/lattice.hpp"
#include "qperc/percolation.hpp"
#include "qperc/simd.hpp"

namespace qperc {

/// H((orbit_a, c), (orbit_b, c + offset)) = value for every cell c.
struct KernelEntry {
  int orbit_a = 0;
  int orbit_b = 0;
  Cell offset{};
  double value = 0.0;
  int source_line = 0;  // for error messages; 0 when not read from a file
};

/// A symmetric, translation-equivariant kernel of finite hopping range.
///
/// Entries may be given in one orientation; the mirrored entry
/// (orbit_b, orbit_a, -offset) is added automatically. The range R is the
/// smallest integer with H(v, w) = 0 whenever dist(v, w) >= R, and the bound C
/// is the largest |entry|.
class HoppingKernel {
 public:
  struct Term {
    int orbit = 0;
    Cell offset{};
    double value = 0.0;
  };

  HoppingKernel(const PeriodicGraph& g, std::vector<KernelEntry> entries, std::string name = "custom");

  int range() const { return range_; }
  double bound() const { return bound_; }
  const std::string& name() const { return name_; }
  std::int64_t max_cell_step() const { return max_cell_step_; }

  /// Both orientations of every entry, sorted.
  const std::vector<KernelEntry>& entries() const { return entries_; }
  /// Row of the kernel seen from (orbit, 0).
  const std::vector<Term>& terms(int orbit) const { return terms_.at(orbit); }
  double entry(int orbit_a, int orbit_b, const Cell& offset) const;
  bool has_diagonal() const;

 private:
  std::string name_;
  std::vector<KernelEntry> entries_;
  std::vector<std::vector<Term>> terms_;
  int range_ = 0;
  double bound_ = 0.0;
  std::int64_t max_cell_step_ = 0;
};

enum class KernelPreset { adjacency, laplacian, nnn };

struct KernelParams {
  double t1 = 1.0;
  double t2 = 0.0;
};

std::optional<KernelPreset> parse_kernel_preset(std::string_view name);
/// adjacency: 1 on every edge. laplacian: adjacency minus deg_X on the
/// diagonal. nnn: t1 at graph distance 1, t2 at graph distance 2.
HoppingKernel kernel_preset(const PeriodicGraph& g, KernelPreset preset, KernelParams params = {});
HoppingKernel kernel_preset(const PeriodicGraph& g, std::string_view name, KernelParams params = {});

/// Kernel file: lines `orbit_a orbit_b o_1 ... o_d value`.
HoppingKernel parse_kernel(std::string_view text, const PeriodicGraph& g, std::string name = "custom");

/// K = C * 2 * deg_+^R; every compression has its spectrum in [-K, K].
double operator_norm_bound(const HoppingKernel& k, const PeriodicGraph& g);

struct MatrixEntry {
  std::uint32_t row = 0;
  std::uint32_t col = 0;  // row <= col
  double value = 0.0;
};

/// Full symmetric matrix in compressed rows.
struct Csr {
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<std::uint32_t> col;
  std::vector<double> val;

  simd::CsrView view() const { return {n, row_ptr.data(), col.data(), val.data()}; }
};

/// Real symmetric matrix stored as the sorted upper triangle; each entry once.
class SymMatrix {
 public:
  explicit SymMatrix(std::size_t dim = 0) : dim_(dim) {}
  /// Entries with row > col are mirrored. Repeated positions are an error.
  SymMatrix(std::size_t dim, std::vector<MatrixEntry> entries);

  std::size_t dim() const { return dim_; }
  const std::vector<MatrixEntry>& entries() const { return entries_; }
  double at(std::size_t i, std::size_t j) const;
  double trace() const;
  double frobenius_squared() const;
  double max_abs() const;
  std::size_t bandwidth() const;
  bool all_finite() const;
  Csr to_csr() const;
  std::vector<double> to_dense() const;  // column-major dim x dim

  SymMatrix operator+(const SymMatrix& other) const;

 private:
  std::size_t dim_;
  std::vector<MatrixEntry> entries_;
};

struct Provenance {
  std::string kernel;
  std::string configuration;
  std::string box;
  std::string perturbation = "free";

  std::string header() const;
};

/// The principal submatrix H^G on an ordered vertex list.
struct CompressedOperator {
  std::vector<Vertex> vertices;
  SymMatrix matrix;
  Provenance provenance;

  std::size_t dim() const { return vertices.size(); }
};

/// Throws ConfigError on duplicate vertices.
CompressedOperator compress(const PeriodicGraph& g, const HoppingKernel& k, std::span<const Vertex> vertices);

/// Compression to box vertices given by ascending box indices.
CompressedOperator compress_box_subset(const PeriodicGraph& g, const HoppingKernel& k, const BoxRegion& box,
                                       std::span<const std::size_t> box_indices);

/// H restricted to the active vertices of a box (active_vertices order).
CompressedOperator compress_active(const PeriodicGraph& g, const HoppingKernel& k, const Configuration& cfg,
                                   const BoxRegion& box);

struct BoundaryPerturbation {
  enum class Kind { periodic_wrap, diagonal_potential, random_symmetric };
  Kind kind = Kind::periodic_wrap;
  double strength = 0.0;  // bound on |entries| for the potential kinds
  int width = 0;          // shell width for the potential kinds
  std::uint64_t seed = 0;

  std::string describe() const;
};

/// "free" parses to nullopt; other names to the matching kind.
std::optional<BoundaryPerturbation::Kind> parse_perturbation_kind(std::string_view name, bool* is_free);

/// A concrete boundary operator B on the active vertices of the box, in
/// active_vertices order.
///
///  - periodic_wrap: every kernel term leaving the box is wrapped around to the
///    opposite face (torus closure); needs sides > 2 * kernel cell reach.
///  - diagonal_potential: `strength` on the diagonal of the shell of width `width`.
///  - random_symmetric: hash-addressed values in [-strength, strength] on the
///    diagonal and on kernel-range pairs inside the shell of width `width`.
///
/// Realized matrices are checked: symmetric, bounded, and supported on pairs
/// with dist(v, complement) + dist(w, complement) <= R~, where R~ = 2R for
/// periodic_wrap and 2 * width otherwise. Violations throw InvariantViolation
/// naming the failing condition.
SymMatrix realize_perturbation(const PeriodicGraph& g, const HoppingKernel& k, const Configuration& cfg,
                               const BoxRegion& box, const BoundaryPerturbation& pert);

/// op + B, entrywise.
CompressedOperator add(const CompressedOperator& op, const SymMatrix& b, const std::string& label);

}  // namespace qperc
