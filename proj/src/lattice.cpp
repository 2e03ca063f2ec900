#include "qperc/lattice.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "qperc/error.hpp"

namespace qperc {

Cell operator+(const Cell& a, const Cell& b) {
  Cell r{};
  for (int i = 0; i < kMaxDim; ++i) r[i] = a[i] + b[i];
  return r;
}

Cell operator-(const Cell& a, const Cell& b) {
  Cell r{};
  for (int i = 0; i < kMaxDim; ++i) r[i] = a[i] - b[i];
  return r;
}

Cell operator-(const Cell& a) {
  Cell r{};
  for (int i = 0; i < kMaxDim; ++i) r[i] = -a[i];
  return r;
}

std::size_t VertexHash::operator()(const Vertex& v) const noexcept {
  std::uint64_t h = 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint64_t>(v.orbit);
  for (auto c : v.cell) {
    h ^= static_cast<std::uint64_t>(c) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

namespace {

// Rank and |det| of the integer lattice spanned by `rows` (d columns), by
// Euclidean row reduction.
bool spans_integer_lattice(std::vector<Cell> rows, int d) {
  std::size_t pivot_row = 0;
  for (int col = 0; col < d; ++col) {
    while (true) {
      std::size_t best = rows.size();
      for (std::size_t r = pivot_row; r < rows.size(); ++r) {
        if (rows[r][col] == 0) continue;
        if (best == rows.size() || std::llabs(rows[r][col]) < std::llabs(rows[best][col])) best = r;
      }
      if (best == rows.size()) return false;  // rank deficient
      std::swap(rows[pivot_row], rows[best]);
      bool reduced = true;
      for (std::size_t r = pivot_row + 1; r < rows.size(); ++r) {
        const std::int64_t q = rows[r][col] / rows[pivot_row][col];
        if (q != 0) {
          for (int k = 0; k < d; ++k) rows[r][k] -= q * rows[pivot_row][k];
        }
        if (rows[r][col] != 0) reduced = false;
      }
      if (reduced) break;
    }
    if (std::llabs(rows[pivot_row][col]) != 1) return false;
    ++pivot_row;
  }
  return true;
}

std::pair<EdgeGenerator, EdgeGenerator> orientations(const EdgeGenerator& e) {
  return {e, EdgeGenerator{e.orbit_b, e.orbit_a, -e.offset}};
}

auto generator_key(const EdgeGenerator& e) {
  return std::tuple(e.orbit_a, e.orbit_b, e.offset);
}

}  // namespace

PeriodicGraph::PeriodicGraph(int dimension, int orbit_count, std::vector<EdgeGenerator> generators,
                             std::string name)
    : dimension_(dimension),
      orbit_count_(orbit_count),
      generators_(std::move(generators)),
      name_(std::move(name)) {
  if (dimension_ < 1 || dimension_ > kMaxDim) {
    throw ConfigError("graph dimension must be in 1.." + std::to_string(kMaxDim));
  }
  if (orbit_count_ < 1) throw ConfigError("graph orbit_count must be positive");
  if (generators_.empty()) throw ConfigError("graph has no edge generators");

  std::set<decltype(generator_key(generators_[0]))> seen;
  hops_.assign(orbit_count_, {});
  for (std::size_t i = 0; i < generators_.size(); ++i) {
    const auto& e = generators_[i];
    const std::string where = "edge generator " + std::to_string(i);
    if (e.orbit_a < 0 || e.orbit_a >= orbit_count_ || e.orbit_b < 0 || e.orbit_b >= orbit_count_) {
      throw ConfigError(where + ": orbit index out of range");
    }
    for (int k = dimension_; k < kMaxDim; ++k) {
      if (e.offset[k] != 0) throw ConfigError(where + ": offset has too many components");
    }
    if (e.orbit_a == e.orbit_b && e.offset == Cell{}) throw ConfigError(where + ": self-loop");
    auto [fwd, rev] = orientations(e);
    auto key = std::min(generator_key(fwd), generator_key(rev));
    if (!seen.insert(key).second) throw ConfigError(where + ": duplicate edge");
    hops_[e.orbit_a].push_back({e.orbit_b, e.offset});
    hops_[e.orbit_b].push_back({e.orbit_a, -e.offset});
    for (int k = 0; k < dimension_; ++k) {
      max_cell_step_ = std::max(max_cell_step_, static_cast<std::int64_t>(std::llabs(e.offset[k])));
    }
  }
  for (const auto& h : hops_) max_degree_ = std::max(max_degree_, static_cast<int>(h.size()));

  // Connectedness of the lifted graph: the quotient must be connected and the
  // cycle offsets must generate Z^d.
  std::vector<std::optional<Cell>> potential(orbit_count_);
  potential[0] = Cell{};
  std::deque<int> queue{0};
  while (!queue.empty()) {
    const int a = queue.front();
    queue.pop_front();
    for (const auto& hop : hops_[a]) {
      if (!potential[hop.orbit]) {
        potential[hop.orbit] = *potential[a] + hop.offset;
        queue.push_back(hop.orbit);
      }
    }
  }
  for (int a = 0; a < orbit_count_; ++a) {
    if (!potential[a]) throw ConfigError("graph is not connected: orbit " + std::to_string(a) + " unreachable");
  }
  std::vector<Cell> cycles;
  for (const auto& e : generators_) {
    Cell c = *potential[e.orbit_a] + e.offset - *potential[e.orbit_b];
    if (c != Cell{}) cycles.push_back(c);
  }
  if (!spans_integer_lattice(std::move(cycles), dimension_)) {
    throw ConfigError("graph is not connected: cycle offsets do not generate the translation lattice");
  }
}

std::vector<Vertex> PeriodicGraph::neighbors(const Vertex& v) const {
  std::vector<Vertex> out;
  const auto& h = hops_.at(v.orbit);
  out.reserve(h.size());
  for (const auto& hop : h) out.push_back({hop.orbit, v.cell + hop.offset});
  return out;
}

std::optional<Preset> parse_preset(std::string_view name) {
  if (name == "chain") return Preset::chain;
  if (name == "square") return Preset::square;
  if (name == "cubic") return Preset::cubic;
  if (name == "triangular") return Preset::triangular;
  if (name == "honeycomb") return Preset::honeycomb;
  return std::nullopt;
}

PeriodicGraph build_preset(Preset preset) {
  switch (preset) {
    case Preset::chain:
      return PeriodicGraph(1, 1, {{0, 0, {1}}}, "chain");
    case Preset::square:
      return PeriodicGraph(2, 1, {{0, 0, {1, 0}}, {0, 0, {0, 1}}}, "square");
    case Preset::cubic:
      return PeriodicGraph(3, 1, {{0, 0, {1, 0, 0}}, {0, 0, {0, 1, 0}}, {0, 0, {0, 0, 1}}}, "cubic");
    case Preset::triangular:
      return PeriodicGraph(2, 1, {{0, 0, {1, 0}}, {0, 0, {0, 1}}, {0, 0, {1, -1}}}, "triangular");
    case Preset::honeycomb:
      // A sites at (orbit 0, c) bond to B sites in cells c, c - e1, c - e2.
      return PeriodicGraph(2, 2, {{0, 1, {0, 0}}, {0, 1, {-1, 0}}, {0, 1, {0, -1}}}, "honeycomb");
  }
  throw ConfigError("unknown graph preset");
}

PeriodicGraph build_preset(std::string_view name) {
  auto p = parse_preset(name);
  if (!p) throw ConfigError("unknown graph preset '" + std::string(name) + "'");
  return build_preset(*p);
}

namespace {

std::vector<std::vector<std::int64_t>> integer_lines(std::string_view text, std::string_view what) {
  std::vector<std::vector<std::int64_t>> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::vector<std::int64_t> row;
    std::string tok;
    while (fields >> tok) {
      std::size_t used = 0;
      std::int64_t value = 0;
      try {
        value = std::stoll(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) {
        throw ConfigError(std::string(what) + " line " + std::to_string(lineno) + ": '" + tok +
                          "' is not an integer");
      }
      row.push_back(value);
    }
    if (!row.empty()) lines.push_back(std::move(row));
  }
  return lines;
}

}  // namespace

PeriodicGraph parse_crystal(std::string_view text, std::string name) {
  auto lines = integer_lines(text, "crystal");
  if (lines.empty() || lines[0].size() != 2) {
    throw ConfigError("crystal: header must be `d orbit_count`");
  }
  const auto d = lines[0][0];
  const auto orbits = lines[0][1];
  if (d < 1 || d > kMaxDim) throw ConfigError("crystal: dimension out of range");
  std::vector<EdgeGenerator> gens;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& row = lines[i];
    if (row.size() != static_cast<std::size_t>(2 + d)) {
      throw ConfigError("crystal: generator " + std::to_string(i - 1) + " needs " +
                        std::to_string(2 + d) + " integers");
    }
    EdgeGenerator e;
    e.orbit_a = static_cast<int>(row[0]);
    e.orbit_b = static_cast<int>(row[1]);
    for (int k = 0; k < d; ++k) e.offset[k] = row[2 + k];
    gens.push_back(e);
  }
  return PeriodicGraph(static_cast<int>(d), static_cast<int>(orbits), std::move(gens), std::move(name));
}

std::string format_crystal(const PeriodicGraph& g) {
  std::ostringstream out;
  out << g.dimension() << ' ' << g.orbit_count() << '\n';
  for (const auto& e : g.generators()) {
    out << e.orbit_a << ' ' << e.orbit_b;
    for (int k = 0; k < g.dimension(); ++k) out << ' ' << e.offset[k];
    out << '\n';
  }
  return out.str();
}

std::optional<int> graph_distance(const PeriodicGraph& g, const Vertex& from, const Vertex& to,
                                  int cutoff, const VertexSet* restrict_to) {
  if (restrict_to && (!restrict_to->contains(from) || !restrict_to->contains(to))) return std::nullopt;
  if (from == to) return 0;
  std::unordered_map<Vertex, int, VertexHash> dist{{from, 0}};
  std::deque<Vertex> queue{from};
  while (!queue.empty()) {
    const Vertex v = queue.front();
    queue.pop_front();
    const int dv = dist[v];
    if (dv >= cutoff) continue;
    for (const auto& w : g.neighbors(v)) {
      if (restrict_to && !restrict_to->contains(w)) continue;
      if (dist.emplace(w, dv + 1).second) {
        if (w == to) return dv + 1;
        queue.push_back(w);
      }
    }
  }
  return std::nullopt;
}

BoxRegion BoxRegion::cube(int dimension, std::int64_t side, const Cell& lower) {
  BoxRegion b;
  b.dimension = dimension;
  b.lower = lower;
  for (int k = 0; k < dimension; ++k) b.sides[k] = side;
  return b;
}

std::size_t BoxRegion::cell_count() const {
  std::size_t n = 1;
  for (int k = 0; k < dimension; ++k) n *= static_cast<std::size_t>(sides[k]);
  return n;
}

bool BoxRegion::contains(const Cell& c) const {
  for (int k = 0; k < dimension; ++k) {
    if (c[k] < lower[k] || c[k] >= lower[k] + sides[k]) return false;
  }
  return true;
}

BoxRegion BoxRegion::enlarged(std::int64_t margin) const {
  BoxRegion b = *this;
  for (int k = 0; k < dimension; ++k) {
    b.lower[k] -= margin;
    b.sides[k] += 2 * margin;
  }
  return b;
}

BoxRegion BoxRegion::translated(const Cell& shift) const {
  BoxRegion b = *this;
  b.lower = lower + shift;
  return b;
}

std::string BoxRegion::describe() const {
  std::ostringstream out;
  out << format_cell(lower, dimension) << '+';
  for (int k = 0; k < dimension; ++k) out << (k ? "x" : "") << sides[k];
  return out.str();
}

BoxIndexer::BoxIndexer(const PeriodicGraph& g, const BoxRegion& box)
    : box_(box), orbits_(static_cast<std::size_t>(g.orbit_count())) {
  if (box.dimension != g.dimension()) throw ConfigError("box dimension does not match graph");
  for (int k = 0; k < box.dimension; ++k) {
    if (box.sides[k] < 1) throw ConfigError("box sides must be positive");
  }
  std::size_t stride = 1;
  for (int k = box.dimension - 1; k >= 0; --k) {
    stride_[k] = stride;
    stride *= static_cast<std::size_t>(box.sides[k]);
  }
  size_ = stride * orbits_;
}

std::size_t BoxIndexer::cell_index(const Cell& c) const {
  std::size_t idx = 0;
  for (int k = 0; k < box_.dimension; ++k) {
    idx += static_cast<std::size_t>(c[k] - box_.lower[k]) * stride_[k];
  }
  return idx;
}

std::optional<std::size_t> BoxIndexer::find(const Vertex& v) const {
  if (!box_.contains(v.cell)) return std::nullopt;
  return index(v);
}

Vertex BoxIndexer::vertex(std::size_t index) const {
  Vertex v;
  v.orbit = static_cast<int>(index % orbits_);
  std::size_t rest = index / orbits_;
  for (int k = 0; k < box_.dimension; ++k) {
    v.cell[k] = box_.lower[k] + static_cast<std::int64_t>(rest / stride_[k]);
    rest %= stride_[k];
  }
  return v;
}

std::vector<Vertex> box_vertices(const PeriodicGraph& g, const BoxRegion& box) {
  BoxIndexer idx(g, box);
  std::vector<Vertex> out(idx.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = idx.vertex(i);
  return out;
}

std::vector<int> boundary_distances(const PeriodicGraph& g, const BoxRegion& box, int cutoff) {
  BoxIndexer idx(g, box);
  const int beyond = cutoff + 1;
  std::vector<int> dist(idx.size(), beyond);
  std::vector<std::size_t> frontier;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const Vertex v = idx.vertex(i);
    for (const auto& hop : g.hops(v.orbit)) {
      if (!box.contains(v.cell + hop.offset)) {
        dist[i] = 1;
        frontier.push_back(i);
        break;
      }
    }
  }
  for (int level = 1; level < cutoff && !frontier.empty(); ++level) {
    std::vector<std::size_t> next;
    for (auto i : frontier) {
      const Vertex v = idx.vertex(i);
      for (const auto& hop : g.hops(v.orbit)) {
        const Vertex w{hop.orbit, v.cell + hop.offset};
        if (!box.contains(w)) continue;
        const std::size_t j = idx.index(w);
        if (dist[j] == beyond) {
          dist[j] = level + 1;
          next.push_back(j);
        }
      }
    }
    frontier = std::move(next);
  }
  return dist;
}

std::vector<Vertex> boundary_shell(const PeriodicGraph& g, const BoxRegion& box, int h) {
  if (h < 0) throw ConfigError("boundary shell width must be nonnegative");
  BoxIndexer idx(g, box);
  const auto dist = boundary_distances(g, box, h);
  std::vector<Vertex> out;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] <= h) out.push_back(idx.vertex(i));
  }
  return out;
}

double boundary_ratio(const PeriodicGraph& g, const BoxRegion& box, int h) {
  return static_cast<double>(boundary_shell(g, box, h).size()) /
         static_cast<double>(box.vertex_count(g));
}

ExhaustionSchedule::ExhaustionSchedule(std::vector<std::int64_t> sides, Cell lower)
    : sides_(std::move(sides)), lower_(lower) {
  if (sides_.empty()) throw ConfigError("schedule: at least one box size required");
  for (std::size_t i = 0; i < sides_.size(); ++i) {
    if (sides_[i] < 1) throw ConfigError("schedule: box sides must be positive");
    if (i > 0 && sides_[i] <= sides_[i - 1]) throw ConfigError("schedule: sides must be strictly increasing");
  }
}

BoxRegion ExhaustionSchedule::box(const PeriodicGraph& g, std::size_t j) const {
  return BoxRegion::cube(g.dimension(), sides_.at(j), lower_);
}

std::string format_cell(const Cell& c, int dimension) {
  std::string s = "[";
  for (int k = 0; k < dimension; ++k) {
    if (k) s += ',';
    s += std::to_string(c[k]);
  }
  return s + "]";
}

std::string format_vertex(const Vertex& v, int dimension) {
  return "(" + std::to_string(v.orbit) + "," + format_cell(v.cell, dimension) + ")";
}

}  // namespace qperc
