#include "qperc/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qperc/error.hpp"
#include "qperc/simd.hpp"
#include "qperc/union_find.hpp"

namespace qperc {

namespace {

std::uint64_t prefix_hash(std::uint64_t seed, std::uint64_t realization, int orbit) {
  std::uint64_t h = simd::mix64(seed);
  h = simd::mix64(h ^ realization);
  return simd::mix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(orbit)));
}

}  // namespace

std::uint64_t site_hash(std::uint64_t seed, std::uint64_t realization, int orbit,
                        std::span<const std::int64_t> cell) {
  std::uint64_t h = prefix_hash(seed, realization, orbit);
  for (auto c : cell) h = simd::mix64(h ^ simd::zigzag(c));
  return h;
}

PercolationLaw PercolationLaw::uniform(int orbit_count, double p, std::uint64_t seed, std::uint64_t realization) {
  return {std::vector<double>(static_cast<std::size_t>(orbit_count), p), seed, realization};
}

PercolationLaw PercolationLaw::with_realization(std::uint64_t r) const {
  PercolationLaw l = *this;
  l.realization = r;
  return l;
}

void PercolationLaw::validate(const PeriodicGraph& g) const {
  if (probabilities.size() != static_cast<std::size_t>(g.orbit_count())) {
    throw ConfigError("p: expected " + std::to_string(g.orbit_count()) + " per-orbit probabilities, got " +
                      std::to_string(probabilities.size()));
  }
  for (double p : probabilities) {
    if (!(p >= 0.0 && p <= 1.0)) {
      std::ostringstream msg;
      msg << "p: probability " << p << " outside [0, 1]";
      throw ConfigError(msg.str());
    }
  }
}

ActivationThreshold::ActivationThreshold(double p) {
  if (p >= 1.0) {
    always = true;
  } else if (p > 0.0) {
    threshold = static_cast<std::uint64_t>(std::ldexp(p, 64));
  }
}

Configuration::Configuration(const PeriodicGraph& g, PercolationLaw law)
    : dimension_(g.dimension()), orbit_count_(g.orbit_count()), law_(std::move(law)) {
  law_.validate(g);
  for (double p : law_.probabilities) thresholds_.emplace_back(p);
}

Configuration Configuration::with_overrides(SiteOverrides overrides) const {
  Configuration c = *this;
  c.overrides_ = std::make_shared<const SiteOverrides>(std::move(overrides));
  return c;
}

bool Configuration::is_active(const Vertex& v) const {
  if (overrides_) {
    if (auto it = overrides_->find(v); it != overrides_->end()) return it->second;
  }
  const auto u = site_hash(law_.seed, law_.realization, v.orbit,
                           std::span<const std::int64_t>(v.cell.data(), static_cast<std::size_t>(dimension_)));
  return thresholds_.at(v.orbit).accepts(u);
}

std::vector<std::uint8_t> Configuration::box_mask(const BoxRegion& box) const {
  const int d = dimension_;
  const auto row_len = static_cast<std::size_t>(box.sides[d - 1]);
  const std::size_t rows = box.cell_count() / row_len;
  const auto orbits = static_cast<std::size_t>(orbit_count_);
  std::vector<std::uint8_t> mask(box.cell_count() * orbits);
  std::vector<std::uint64_t> hashes(row_len);

  for (std::size_t row = 0; row < rows; ++row) {
    // Leading d-1 coordinates of this row.
    Cell c = box.lower;
    std::size_t rest = row;
    for (int k = d - 2; k >= 0; --k) {
      const auto side = static_cast<std::size_t>(box.sides[k]);
      c[k] = box.lower[k] + static_cast<std::int64_t>(rest % side);
      rest /= side;
    }
    for (int orbit = 0; orbit < orbit_count_; ++orbit) {
      std::uint64_t h = prefix_hash(law_.seed, law_.realization, orbit);
      for (int k = 0; k + 1 < d; ++k) h = simd::mix64(h ^ simd::zigzag(c[k]));
      simd::hash_row(h, box.lower[d - 1], row_len, hashes.data());
      const auto& t = thresholds_[orbit];
      for (std::size_t i = 0; i < row_len; ++i) {
        mask[(row * row_len + i) * orbits + orbit] = t.accepts(hashes[i]) ? 1 : 0;
      }
    }
  }
  if (overrides_) {
    for (const auto& [v, status] : *overrides_) {
      if (box.contains(v.cell)) {
        std::size_t idx = 0;
        std::size_t stride = 1;
        for (int k = d - 1; k >= 0; --k) {
          idx += static_cast<std::size_t>(v.cell[k] - box.lower[k]) * stride;
          stride *= static_cast<std::size_t>(box.sides[k]);
        }
        mask[idx * orbits + v.orbit] = status ? 1 : 0;
      }
    }
  }
  return mask;
}

std::string Configuration::describe() const {
  std::ostringstream out;
  out << "seed=" << law_.seed << " realization=" << law_.realization;
  if (has_overrides()) out << " overrides=" << overrides_->size();
  return out.str();
}

SiteOverrides parse_site_overrides(std::string_view text, const PeriodicGraph& g) {
  SiteOverrides out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  const int d = g.dimension();
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::vector<std::int64_t> row;
    std::int64_t x = 0;
    while (fields >> x) row.push_back(x);
    if (!fields.eof()) throw ConfigError("configuration line " + std::to_string(lineno) + ": non-integer field");
    if (row.empty()) continue;
    if (row.size() != static_cast<std::size_t>(d + 2)) {
      throw ConfigError("configuration line " + std::to_string(lineno) + ": expected " + std::to_string(d + 2) +
                        " integers");
    }
    Vertex v;
    v.orbit = static_cast<int>(row[0]);
    if (v.orbit < 0 || v.orbit >= g.orbit_count()) {
      throw ConfigError("configuration line " + std::to_string(lineno) + ": orbit out of range");
    }
    for (int k = 0; k < d; ++k) v.cell[k] = row[1 + k];
    const auto status = row[1 + d];
    if (status != 0 && status != 1) {
      throw ConfigError("configuration line " + std::to_string(lineno) + ": status must be 0 or 1");
    }
    out[v] = status == 1;
  }
  return out;
}

std::string format_site_overrides(const SiteOverrides& overrides, int dimension) {
  std::vector<std::pair<Vertex, bool>> sorted(overrides.begin(), overrides.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::ostringstream out;
  for (const auto& [v, s] : sorted) {
    out << v.orbit;
    for (int k = 0; k < dimension; ++k) out << ' ' << v.cell[k];
    out << ' ' << (s ? 1 : 0) << '\n';
  }
  return out.str();
}

ActiveSet active_set(const PeriodicGraph& g, const Configuration& cfg, const BoxRegion& box) {
  BoxIndexer idx(g, box);
  ActiveSet s;
  s.box = box;
  s.mask = cfg.box_mask(box);
  s.position.assign(s.mask.size(), -1);
  for (std::size_t i = 0; i < s.mask.size(); ++i) {
    if (s.mask[i]) {
      s.position[i] = static_cast<std::int64_t>(s.box_index.size());
      s.box_index.push_back(i);
    }
  }
  return s;
}

std::vector<Vertex> active_vertices(const PeriodicGraph& g, const Configuration& cfg, const BoxRegion& box) {
  BoxIndexer idx(g, box);
  const auto s = active_set(g, cfg, box);
  std::vector<Vertex> out;
  out.reserve(s.size());
  for (auto i : s.box_index) out.push_back(idx.vertex(i));
  return out;
}

namespace {

template <typename Fn>
void for_each_active_edge(const PeriodicGraph& g, const ActiveSet& s, Fn&& fn) {
  BoxIndexer idx(g, s.box);
  for (auto i : s.box_index) {
    const Vertex v = idx.vertex(i);
    for (const auto& hop : g.hops(v.orbit)) {
      const Vertex w{hop.orbit, v.cell + hop.offset};
      auto j = idx.find(w);
      if (j && *j > i && s.mask[*j]) fn(i, *j);
    }
  }
}

}  // namespace

std::vector<std::pair<Vertex, Vertex>> active_subgraph_edges(const PeriodicGraph& g, const Configuration& cfg,
                                                             const BoxRegion& box) {
  BoxIndexer idx(g, box);
  const auto s = active_set(g, cfg, box);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for_each_active_edge(g, s, [&](std::size_t i, std::size_t j) { pairs.emplace_back(i, j); });
  std::sort(pairs.begin(), pairs.end());
  std::vector<std::pair<Vertex, Vertex>> out;
  out.reserve(pairs.size());
  for (auto [i, j] : pairs) out.emplace_back(idx.vertex(i), idx.vertex(j));
  return out;
}

std::size_t ClusterDecomposition::active_count() const {
  std::size_t n = 0;
  for (const auto& c : clusters) n += c.size();
  return n;
}

ClusterDecomposition clusters(const PeriodicGraph& g, const Configuration& cfg, const BoxRegion& box) {
  BoxIndexer idx(g, box);
  const auto s = active_set(g, cfg, box);
  UnionFind uf(s.size());
  for_each_active_edge(g, s, [&](std::size_t i, std::size_t j) {
    uf.unite(static_cast<std::size_t>(s.position[i]), static_cast<std::size_t>(s.position[j]));
  });
  const auto dist = boundary_distances(g, box, 1);

  // Active positions are in box order, so the first visit of a root is the
  // cluster's smallest member and clusters come out sorted by label.
  ClusterDecomposition out;
  std::vector<std::int64_t> cluster_of_root(s.size(), -1);
  for (std::size_t a = 0; a < s.size(); ++a) {
    const auto root = uf.find(a);
    if (cluster_of_root[root] < 0) {
      cluster_of_root[root] = static_cast<std::int64_t>(out.clusters.size());
      out.clusters.emplace_back();
    }
    auto& c = out.clusters[static_cast<std::size_t>(cluster_of_root[root])];
    c.members.push_back(idx.vertex(s.box_index[a]));
    if (dist[s.box_index[a]] <= 1) c.touches_boundary = true;
  }
  return out;
}

std::vector<Vertex> boundary_touching(const PeriodicGraph& g, const Configuration& cfg, const BoxRegion& box) {
  std::vector<Vertex> out;
  for (const auto& c : clusters(g, cfg, box).clusters) {
    if (c.touches_boundary) out.insert(out.end(), c.members.begin(), c.members.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace qperc
