#include "qperc/operator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <map>
#include <sstream>
#include <unordered_map>

#include "qperc/error.hpp"

namespace qperc {

namespace {

std::string entry_label(const KernelEntry& e, std::size_t index) {
  if (e.source_line > 0) return "kernel line " + std::to_string(e.source_line);
  return "kernel entry " + std::to_string(index);
}

auto entry_key(int a, int b, const Cell& o) { return std::tuple(a, b, o); }

// Largest graph distance probed when deriving the range of a kernel.
constexpr int kRangeSearchCutoff = 64;

}  // namespace

HoppingKernel::HoppingKernel(const PeriodicGraph& g, std::vector<KernelEntry> entries, std::string name)
    : name_(std::move(name)) {
  std::map<std::tuple<int, int, Cell>, std::pair<double, std::size_t>> given;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.orbit_a < 0 || e.orbit_a >= g.orbit_count() || e.orbit_b < 0 || e.orbit_b >= g.orbit_count()) {
      throw ConfigError(entry_label(e, i) + ": orbit index out of range");
    }
    for (int k = g.dimension(); k < kMaxDim; ++k) {
      if (e.offset[k] != 0) throw ConfigError(entry_label(e, i) + ": offset has too many components");
    }
    if (!std::isfinite(e.value)) throw ConfigError(entry_label(e, i) + ": value is not finite");
    if (!given.emplace(entry_key(e.orbit_a, e.orbit_b, e.offset), std::pair(e.value, i)).second) {
      throw ConfigError(entry_label(e, i) + ": duplicate entry");
    }
  }
  // Symmetry completion; a mirrored pair given twice must agree exactly.
  std::map<std::tuple<int, int, Cell>, double> full;
  for (const auto& [key, vi] : given) {
    const auto& [a, b, o] = key;
    const auto mirror = entry_key(b, a, -o);
    if (auto it = given.find(mirror); it != given.end() && it->second.first != vi.first) {
      throw ConfigError(entry_label(entries[vi.second], vi.second) + ": violates symmetry H(v,w) = H(w,v)");
    }
    if (vi.first == 0.0) continue;
    full[key] = vi.first;
    full[mirror] = vi.first;
  }

  terms_.assign(g.orbit_count(), {});
  for (const auto& [key, value] : full) {
    const auto& [a, b, o] = key;
    entries_.push_back({a, b, o, value, 0});
    terms_[a].push_back({b, o, value});
    bound_ = std::max(bound_, std::abs(value));
    for (int k = 0; k < g.dimension(); ++k) {
      max_cell_step_ = std::max(max_cell_step_, static_cast<std::int64_t>(std::llabs(o[k])));
    }
    const auto dist = graph_distance(g, Vertex{a, Cell{}}, Vertex{b, o}, kRangeSearchCutoff);
    if (!dist) {
      throw ConfigError("kernel entry (" + std::to_string(a) + "," + std::to_string(b) + "," +
                        format_cell(o, g.dimension()) + ") exceeds the supported hopping range");
    }
    range_ = std::max(range_, *dist + 1);
  }
}

double HoppingKernel::entry(int orbit_a, int orbit_b, const Cell& offset) const {
  for (const auto& t : terms_.at(orbit_a)) {
    if (t.orbit == orbit_b && t.offset == offset) return t.value;
  }
  return 0.0;
}

bool HoppingKernel::has_diagonal() const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [](const KernelEntry& e) { return e.orbit_a == e.orbit_b && e.offset == Cell{}; });
}

std::optional<KernelPreset> parse_kernel_preset(std::string_view name) {
  if (name == "adjacency") return KernelPreset::adjacency;
  if (name == "laplacian") return KernelPreset::laplacian;
  if (name == "nnn") return KernelPreset::nnn;
  return std::nullopt;
}

HoppingKernel kernel_preset(const PeriodicGraph& g, KernelPreset preset, KernelParams params) {
  std::vector<KernelEntry> entries;
  switch (preset) {
    case KernelPreset::adjacency:
    case KernelPreset::laplacian:
      for (const auto& e : g.generators()) entries.push_back({e.orbit_a, e.orbit_b, e.offset, 1.0, 0});
      if (preset == KernelPreset::laplacian) {
        // Degree in the full graph X keeps the kernel equivariant.
        for (int a = 0; a < g.orbit_count(); ++a) {
          entries.push_back({a, a, Cell{}, -static_cast<double>(g.degree(a)), 0});
        }
      }
      return HoppingKernel(g, std::move(entries), preset == KernelPreset::adjacency ? "adjacency" : "laplacian");
    case KernelPreset::nnn: {
      std::map<std::tuple<int, int, Cell>, double> found;
      for (int a = 0; a < g.orbit_count(); ++a) {
        const Vertex origin{a, Cell{}};
        std::unordered_map<Vertex, int, VertexHash> dist{{origin, 0}};
        std::deque<Vertex> queue{origin};
        while (!queue.empty()) {
          const Vertex v = queue.front();
          queue.pop_front();
          const int dv = dist[v];
          if (dv == 2) continue;
          for (const auto& w : g.neighbors(v)) {
            if (dist.emplace(w, dv + 1).second) queue.push_back(w);
          }
        }
        for (const auto& [w, dw] : dist) {
          if (dw == 1) found[entry_key(a, w.orbit, w.cell)] = params.t1;
          if (dw == 2) found[entry_key(a, w.orbit, w.cell)] = params.t2;
        }
      }
      for (const auto& [key, value] : found) {
        const auto& [a, b, o] = key;
        entries.push_back({a, b, o, value, 0});
      }
      return HoppingKernel(g, std::move(entries), "nnn");
    }
  }
  throw ConfigError("unknown kernel preset");
}

HoppingKernel kernel_preset(const PeriodicGraph& g, std::string_view name, KernelParams params) {
  auto p = parse_kernel_preset(name);
  if (!p) throw ConfigError("unknown kernel preset '" + std::string(name) + "'");
  return kernel_preset(g, *p, params);
}

HoppingKernel parse_kernel(std::string_view text, const PeriodicGraph& g, std::string name) {
  std::vector<KernelEntry> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  const int d = g.dimension();
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string where = "kernel line " + std::to_string(lineno);
    if (tok.size() != static_cast<std::size_t>(d + 3)) {
      throw ConfigError(where + ": expected " + std::to_string(d + 3) + " fields");
    }
    auto integer = [&](const std::string& s) {
      std::size_t used = 0;
      long long v = 0;
      try {
        v = std::stoll(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != s.size()) throw ConfigError(where + ": '" + s + "' is not an integer");
      return static_cast<std::int64_t>(v);
    };
    KernelEntry e;
    e.orbit_a = static_cast<int>(integer(tok[0]));
    e.orbit_b = static_cast<int>(integer(tok[1]));
    for (int k = 0; k < d; ++k) e.offset[k] = integer(tok[2 + k]);
    char* end = nullptr;
    e.value = std::strtod(tok.back().c_str(), &end);
    if (end != tok.back().c_str() + tok.back().size()) {
      throw ConfigError(where + ": '" + tok.back() + "' is not a number");
    }
    e.source_line = lineno;
    entries.push_back(e);
  }
  return HoppingKernel(g, std::move(entries), std::move(name));
}

double operator_norm_bound(const HoppingKernel& k, const PeriodicGraph& g) {
  return k.bound() * 2.0 * std::pow(static_cast<double>(g.max_degree()), k.range());
}

SymMatrix::SymMatrix(std::size_t dim, std::vector<MatrixEntry> entries) : dim_(dim), entries_(std::move(entries)) {
  for (auto& e : entries_) {
    if (e.row >= dim_ || e.col >= dim_) throw InvariantViolation("matrix entry outside dimension");
    if (e.row > e.col) std::swap(e.row, e.col);
  }
  std::sort(entries_.begin(), entries_.end(),
            [](const MatrixEntry& a, const MatrixEntry& b) { return std::tie(a.row, a.col) < std::tie(b.row, b.col); });
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (entries_[i].row == entries_[i - 1].row && entries_[i].col == entries_[i - 1].col) {
      throw InvariantViolation("matrix entry (" + std::to_string(entries_[i].row) + "," +
                               std::to_string(entries_[i].col) + ") stored twice");
    }
  }
}

double SymMatrix::at(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  auto it = std::lower_bound(entries_.begin(), entries_.end(), std::pair(i, j), [](const MatrixEntry& e, auto key) {
    return std::pair<std::size_t, std::size_t>(e.row, e.col) < key;
  });
  if (it != entries_.end() && it->row == i && it->col == j) return it->value;
  return 0.0;
}

double SymMatrix::trace() const {
  double t = 0.0;
  for (const auto& e : entries_) {
    if (e.row == e.col) t += e.value;
  }
  return t;
}

double SymMatrix::frobenius_squared() const {
  double s = 0.0;
  for (const auto& e : entries_) s += (e.row == e.col ? 1.0 : 2.0) * e.value * e.value;
  return s;
}

double SymMatrix::max_abs() const {
  double m = 0.0;
  for (const auto& e : entries_) m = std::max(m, std::abs(e.value));
  return m;
}

std::size_t SymMatrix::bandwidth() const {
  std::size_t b = 0;
  for (const auto& e : entries_) b = std::max<std::size_t>(b, e.col - e.row);
  return b;
}

bool SymMatrix::all_finite() const {
  return std::all_of(entries_.begin(), entries_.end(), [](const MatrixEntry& e) { return std::isfinite(e.value); });
}

Csr SymMatrix::to_csr() const {
  Csr c;
  c.n = dim_;
  std::vector<std::size_t> count(dim_ + 1, 0);
  for (const auto& e : entries_) {
    ++count[e.row];
    if (e.row != e.col) ++count[e.col];
  }
  c.row_ptr.assign(dim_ + 1, 0);
  for (std::size_t i = 0; i < dim_; ++i) c.row_ptr[i + 1] = c.row_ptr[i] + count[i];
  c.col.resize(c.row_ptr[dim_]);
  c.val.resize(c.row_ptr[dim_]);
  std::vector<std::size_t> fill(c.row_ptr.begin(), c.row_ptr.end() - 1);
  // Lower-triangle entries of row r come from upper entries (c', r) with c' < r,
  // which appear in ascending c' order; pushing them first keeps rows sorted.
  for (const auto& e : entries_) {
    if (e.row != e.col) {
      c.col[fill[e.col]] = e.row;
      c.val[fill[e.col]++] = e.value;
    }
  }
  for (const auto& e : entries_) {
    c.col[fill[e.row]] = e.col;
    c.val[fill[e.row]++] = e.value;
  }
  return c;
}

std::vector<double> SymMatrix::to_dense() const {
  std::vector<double> a(dim_ * dim_, 0.0);
  for (const auto& e : entries_) {
    a[e.col * dim_ + e.row] = e.value;
    a[e.row * dim_ + e.col] = e.value;
  }
  return a;
}

SymMatrix SymMatrix::operator+(const SymMatrix& other) const {
  if (other.dim_ != dim_) throw InvariantViolation("matrix dimensions differ in sum");
  std::vector<MatrixEntry> out;
  out.reserve(entries_.size() + other.entries_.size());
  auto less = [](const MatrixEntry& a, const MatrixEntry& b) { return std::tie(a.row, a.col) < std::tie(b.row, b.col); };
  std::size_t i = 0, j = 0;
  while (i < entries_.size() || j < other.entries_.size()) {
    if (j == other.entries_.size() || (i < entries_.size() && less(entries_[i], other.entries_[j]))) {
      out.push_back(entries_[i++]);
    } else if (i == entries_.size() || less(other.entries_[j], entries_[i])) {
      out.push_back(other.entries_[j++]);
    } else {
      out.push_back({entries_[i].row, entries_[i].col, entries_[i].value + other.entries_[j].value});
      ++i;
      ++j;
    }
  }
  SymMatrix m(dim_);
  m.entries_ = std::move(out);
  return m;
}

std::string Provenance::header() const {
  return "# kernel=" + kernel + " " + configuration + " box=" + box + " pert=" + perturbation;
}

namespace {

template <typename Lookup>
SymMatrix assemble(const HoppingKernel& k, std::span<const Vertex> vertices, Lookup&& lookup) {
  std::vector<MatrixEntry> entries;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Vertex& v = vertices[i];
    for (const auto& t : k.terms(v.orbit)) {
      auto j = lookup(Vertex{t.orbit, v.cell + t.offset});
      if (j && *j >= i) {
        entries.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(*j), t.value});
      }
    }
  }
  return SymMatrix(vertices.size(), std::move(entries));
}

}  // namespace

CompressedOperator compress(const PeriodicGraph& g, const HoppingKernel& k, std::span<const Vertex> vertices) {
  std::unordered_map<Vertex, std::size_t, VertexHash> index;
  index.reserve(vertices.size());
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (vertices[i].orbit < 0 || vertices[i].orbit >= g.orbit_count()) {
      throw ConfigError("compress: orbit out of range");
    }
    if (!index.emplace(vertices[i], i).second) {
      throw ConfigError("compress: duplicate vertex " + format_vertex(vertices[i], g.dimension()));
    }
  }
  CompressedOperator op;
  op.vertices.assign(vertices.begin(), vertices.end());
  op.matrix = assemble(k, vertices, [&](const Vertex& w) -> std::optional<std::size_t> {
    auto it = index.find(w);
    if (it == index.end()) return std::nullopt;
    return it->second;
  });
  op.provenance.kernel = k.name();
  op.provenance.configuration = "explicit";
  op.provenance.box = "none";
  return op;
}

CompressedOperator compress_box_subset(const PeriodicGraph& g, const HoppingKernel& k, const BoxRegion& box,
                                       std::span<const std::size_t> box_indices) {
  BoxIndexer idx(g, box);
  std::vector<std::int64_t> position(idx.size(), -1);
  CompressedOperator op;
  op.vertices.reserve(box_indices.size());
  for (std::size_t a = 0; a < box_indices.size(); ++a) {
    if (a > 0 && box_indices[a] <= box_indices[a - 1]) {
      throw ConfigError("compress: box indices must be strictly ascending");
    }
    position.at(box_indices[a]) = static_cast<std::int64_t>(a);
    op.vertices.push_back(idx.vertex(box_indices[a]));
  }
  op.matrix = assemble(k, op.vertices, [&](const Vertex& w) -> std::optional<std::size_t> {
    auto j = idx.find(w);
    if (!j || position[*j] < 0) return std::nullopt;
    return static_cast<std::size_t>(position[*j]);
  });
  op.provenance.kernel = k.name();
  op.provenance.box = box.describe();
  return op;
}

CompressedOperator compress_active(const PeriodicGraph& g, const HoppingKernel& k, const Configuration& cfg,
                                   const BoxRegion& box) {
  const auto s = active_set(g, cfg, box);
  auto op = compress_box_subset(g, k, box, s.box_index);
  op.provenance.configuration = cfg.describe();
  return op;
}

std::string BoundaryPerturbation::describe() const {
  std::ostringstream out;
  switch (kind) {
    case Kind::periodic_wrap:
      out << "periodic_wrap";
      break;
    case Kind::diagonal_potential:
      out << "diagonal_potential(strength=" << strength << ",width=" << width << ")";
      break;
    case Kind::random_symmetric:
      out << "random_symmetric(strength=" << strength << ",width=" << width << ",seed=" << seed << ")";
      break;
  }
  return out.str();
}

std::optional<BoundaryPerturbation::Kind> parse_perturbation_kind(std::string_view name, bool* is_free) {
  if (is_free) *is_free = false;
  if (name == "free") {
    if (is_free) *is_free = true;
    return std::nullopt;
  }
  if (name == "periodic_wrap") return BoundaryPerturbation::Kind::periodic_wrap;
  if (name == "diagonal_potential") return BoundaryPerturbation::Kind::diagonal_potential;
  if (name == "random_symmetric") return BoundaryPerturbation::Kind::random_symmetric;
  return std::nullopt;
}

namespace {

double pair_value(std::uint64_t seed, const Vertex& v, const Vertex& w, int d, double strength) {
  std::uint64_t h = simd::mix64(seed);
  for (const Vertex* x : {&v, &w}) {
    h = simd::mix64(h ^ static_cast<std::uint64_t>(x->orbit));
    for (int k = 0; k < d; ++k) h = simd::mix64(h ^ simd::zigzag(x->cell[k]));
  }
  const double unit = static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
  return strength * (2.0 * unit - 1.0);
}

}  // namespace

SymMatrix realize_perturbation(const PeriodicGraph& g, const HoppingKernel& k, const Configuration& cfg,
                               const BoxRegion& box, const BoundaryPerturbation& pert) {
  BoxIndexer idx(g, box);
  const auto s = active_set(g, cfg, box);
  const int d = g.dimension();
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> acc;
  auto put = [&](std::size_t i, std::size_t j, double value) {
    auto a = static_cast<std::uint32_t>(s.position[i]);
    auto b = static_cast<std::uint32_t>(s.position[j]);
    if (a > b) std::swap(a, b);
    acc[{a, b}] += value;
  };

  int admissible_width = 0;
  double admissible_bound = 0.0;
  const int reach = std::max(k.range(), 2 * pert.width + 1);
  const auto dist = boundary_distances(g, box, reach);

  switch (pert.kind) {
    case BoundaryPerturbation::Kind::periodic_wrap: {
      for (int q = 0; q < d; ++q) {
        if (box.sides[q] <= 2 * k.max_cell_step()) {
          throw ConfigError("periodic_wrap: box side " + std::to_string(box.sides[q]) +
                            " too small for the kernel reach");
        }
      }
      admissible_width = 2 * k.range();
      admissible_bound = k.bound();
      for (auto i : s.box_index) {
        const Vertex v = idx.vertex(i);
        for (const auto& t : k.terms(v.orbit)) {
          Vertex w{t.orbit, v.cell + t.offset};
          if (box.contains(w.cell)) continue;
          for (int q = 0; q < d; ++q) {
            const auto side = box.sides[q];
            w.cell[q] = box.lower[q] + (((w.cell[q] - box.lower[q]) % side) + side) % side;
          }
          const auto j = idx.index(w);
          // Each wrapped pair is seen from both ends; keep one orientation.
          if (s.mask[j] && i < j) put(i, j, t.value);
        }
      }
      break;
    }
    case BoundaryPerturbation::Kind::diagonal_potential:
      if (pert.width < 0 || pert.strength < 0) throw ConfigError("diagonal_potential: width and strength must be >= 0");
      admissible_width = 2 * pert.width;
      admissible_bound = pert.strength;
      if (pert.strength != 0.0) {
        for (auto i : s.box_index) {
          if (dist[i] <= pert.width) put(i, i, pert.strength);
        }
      }
      break;
    case BoundaryPerturbation::Kind::random_symmetric:
      if (pert.width < 0 || pert.strength < 0) throw ConfigError("random_symmetric: width and strength must be >= 0");
      admissible_width = 2 * pert.width;
      admissible_bound = pert.strength;
      if (pert.strength != 0.0) {
        for (auto i : s.box_index) {
          if (dist[i] > pert.width) continue;
          const Vertex v = idx.vertex(i);
          put(i, i, pair_value(pert.seed, v, v, d, pert.strength));
          for (const auto& t : k.terms(v.orbit)) {
            const Vertex w{t.orbit, v.cell + t.offset};
            auto j = idx.find(w);
            if (!j || *j <= i || !s.mask[*j] || dist[*j] > pert.width) continue;
            put(i, *j, pair_value(pert.seed, v, w, d, pert.strength));
          }
        }
      }
      break;
  }

  std::vector<MatrixEntry> entries;
  entries.reserve(acc.size());
  for (const auto& [key, value] : acc) {
    if (value == 0.0) continue;
    const auto bi = s.box_index[key.first];
    const auto bj = s.box_index[key.second];
    if (std::abs(value) > admissible_bound) {
      throw InvariantViolation(pert.describe() + ": entry exceeds the bound |B(v,w)| <= C~");
    }
    if (dist[bi] + dist[bj] > admissible_width) {
      throw InvariantViolation(pert.describe() +
                               ": entry violates the support condition dist(v,out)+dist(w,out) <= R~");
    }
    entries.push_back({key.first, key.second, value});
  }
  return SymMatrix(s.size(), std::move(entries));
}

CompressedOperator add(const CompressedOperator& op, const SymMatrix& b, const std::string& label) {
  CompressedOperator out = op;
  out.matrix = op.matrix + b;
  out.provenance.perturbation = label;
  return out;
}

}  // namespace qperc
