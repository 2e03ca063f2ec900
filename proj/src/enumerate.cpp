#include "qperc/enumerate.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include "qperc/eigensolver.hpp"
#include "qperc/error.hpp"
#include "qperc/parallel.hpp"
#include "qperc/spectral.hpp"

namespace qperc {

ClusterShape canonical_shape(std::vector<Vertex> vertices) {
  std::sort(vertices.begin(), vertices.end());
  if (!vertices.empty()) {
    const Cell shift = -vertices.front().cell;
    for (auto& v : vertices) v.cell = v.cell + shift;
  }
  return {std::move(vertices)};
}

std::vector<ClusterShape> enumerate_shapes(const PeriodicGraph& g, int max_size, int cap) {
  if (max_size < 1) throw ConfigError("max_size must be positive");
  if (max_size > cap) {
    throw ResourceCapError("max_size " + std::to_string(max_size) + " exceeds the enumeration cap " +
                           std::to_string(cap));
  }
  std::vector<ClusterShape> out;
  std::set<ClusterShape> level;
  for (int a = 0; a < g.orbit_count(); ++a) level.insert(ClusterShape{{Vertex{a, Cell{}}}});
  for (int size = 1;; ++size) {
    out.insert(out.end(), level.begin(), level.end());
    if (size == max_size) break;
    std::set<ClusterShape> next;
    for (const auto& s : level) {
      for (const auto& v : s.vertices) {
        for (const auto& w : g.neighbors(v)) {
          if (std::binary_search(s.vertices.begin(), s.vertices.end(), w)) continue;
          auto grown = s.vertices;
          grown.push_back(w);
          next.insert(canonical_shape(std::move(grown)));
        }
      }
    }
    level = std::move(next);
  }
  return out;
}

const SigmaLevel* SigmaTilde::find(double energy, double tolerance) const {
  const SigmaLevel* best = nullptr;
  for (const auto& l : levels) {
    const double d = std::abs(l.energy - energy);
    if (d <= tolerance && (!best || d < std::abs(best->energy - energy))) best = &l;
  }
  return best;
}

SigmaTilde sigma_tilde(const PeriodicGraph& g, const HoppingKernel& k, int max_size, std::optional<double> tau,
                       int cap, int workers) {
  SigmaTilde sigma;
  sigma.max_size = max_size;
  sigma.tau = tau.value_or(default_tau_deg(operator_norm_bound(k, g)));
  sigma.shapes = enumerate_shapes(g, max_size, cap);

  std::vector<std::vector<double>> spectra(sigma.shapes.size());
  parallel_for(sigma.shapes.size(), resolve_workers(workers), [&](std::size_t s) {
    spectra[s] = eigenvalues(compress(g, k, sigma.shapes[s].vertices).matrix).values;
  });

  struct Hit {
    double energy;
    std::size_t shape;
  };
  std::vector<Hit> hits;
  for (std::size_t s = 0; s < spectra.size(); ++s) {
    for (double e : spectra[s]) hits.push_back({e, s});
  }
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    return a.energy < b.energy || (a.energy == b.energy && a.shape < b.shape);
  });

  std::size_t start = 0;
  for (std::size_t i = 1; i <= hits.size(); ++i) {
    if (i < hits.size() && hits[i].energy - hits[i - 1].energy <= sigma.tau) continue;
    SigmaLevel level;
    double sum = 0.0;
    std::vector<std::size_t> shapes;
    for (std::size_t j = start; j < i; ++j) {
      sum += hits[j].energy;
      shapes.push_back(hits[j].shape);
    }
    level.energy = sum / static_cast<double>(i - start);
    std::sort(shapes.begin(), shapes.end());
    level.min_witness_size = sigma.shapes[shapes.front()].size();
    for (std::size_t j = 0; j < shapes.size();) {
      std::size_t m = j;
      while (m < shapes.size() && shapes[m] == shapes[j]) ++m;
      level.witnesses.push_back({shapes[j], m - j});
      level.min_witness_size = std::min(level.min_witness_size, sigma.shapes[shapes[j]].size());
      j = m;
    }
    sigma.levels.push_back(std::move(level));
    start = i;
  }
  return sigma;
}

void write_sigma_csv(std::ostream& out, const SigmaTilde& sigma, const std::string& provenance) {
  out << provenance << '\n';
  out << "energy,min_witness_size,witness_count\n";
  for (const auto& l : sigma.levels) {
    out << format_double(l.energy) << ',' << l.min_witness_size << ',' << l.witness_count() << '\n';
  }
}

double default_tau_res(double norm_bound, std::size_t support_size) {
  return 1e-9 * norm_bound * std::sqrt(static_cast<double>(std::max<std::size_t>(1, support_size)));
}

namespace {

VertexSet ball_around(const PeriodicGraph& g, const std::vector<Vertex>& seeds, int radius) {
  VertexSet seen(seeds.begin(), seeds.end());
  std::vector<Vertex> frontier = seeds;
  for (int step = 0; step < radius; ++step) {
    std::vector<Vertex> next;
    for (const auto& v : frontier) {
      for (const auto& w : g.neighbors(v)) {
        if (seen.insert(w).second) next.push_back(w);
      }
    }
    frontier = std::move(next);
  }
  return seen;
}

int support_diameter(const PeriodicGraph& g, const std::vector<Vertex>& support, int range) {
  constexpr std::size_t kMaxExact = 256;
  if (support.size() > kMaxExact) return -1;
  const int cutoff = static_cast<int>(support.size()) * std::max(1, range - 1) + 2;
  int diameter = 0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    for (std::size_t j = i + 1; j < support.size(); ++j) {
      const auto d = graph_distance(g, support[i], support[j], cutoff);
      diameter = std::max(diameter, d.value_or(cutoff + 1));
    }
  }
  return diameter;
}

}  // namespace

Verification verify_compact_eigenstate(const PeriodicGraph& g, const HoppingKernel& k, const Configuration& cfg,
                                       const CompactEigenstate& state, int enlargement,
                                       std::optional<double> tau_res) {
  if (enlargement < k.range()) throw ConfigError("enlargement must be at least the kernel range R");
  if (state.support.size() != state.amplitudes.size()) throw ConfigError("state support and amplitudes differ in size");
  if (state.support.empty()) throw ConfigError("state has empty support");
  for (const auto& v : state.support) {
    if (state.region.dimension == g.dimension() && state.region.cell_count() > 0 && !state.region.contains(v)) {
      throw ConfigError("state support leaves its region " + state.region.describe());
    }
    if (!cfg.is_active(v)) throw ConfigError("state support contains deleted vertex " + format_vertex(v, g.dimension()));
  }

  const auto ball = ball_around(g, state.support, enlargement);
  std::vector<Vertex> region;
  for (const auto& v : ball) {
    if (cfg.is_active(v)) region.push_back(v);
  }
  std::sort(region.begin(), region.end());
  const auto op = compress(g, k, region);

  std::vector<double> f(region.size(), 0.0);
  for (std::size_t s = 0; s < state.support.size(); ++s) {
    const auto it = std::lower_bound(region.begin(), region.end(), state.support[s]);
    f[static_cast<std::size_t>(it - region.begin())] = state.amplitudes[s];
  }
  std::vector<double> r(region.size(), 0.0);
  for (const auto& e : op.matrix.entries()) {
    r[e.row] += e.value * f[e.col];
    if (e.row != e.col) r[e.col] += e.value * f[e.row];
  }
  double rn = 0.0, fn = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double d = r[i] - state.energy * f[i];
    rn += d * d;
    fn += f[i] * f[i];
  }
  Verification v;
  v.residual = std::sqrt(rn / fn);
  v.tolerance = tau_res.value_or(default_tau_res(operator_norm_bound(k, g), state.support.size()));
  v.certified = v.residual <= v.tolerance;
  return v;
}

std::vector<CompactEigenstate> molecular_search(const PeriodicGraph& g, const HoppingKernel& k,
                                                const Configuration& cfg, const BoxRegion& box, double energy,
                                                const MolecularOptions& options) {
  const double bound = operator_norm_bound(k, g);
  std::vector<CompactEigenstate> found;
  if (!std::isfinite(energy) || std::abs(energy) > bound) return found;
  const double tau_deg = options.tau_deg.value_or(default_tau_deg(bound));

  const auto op = compress_active(g, k, cfg, box);
  BoxIndexer idx(g, box);
  const auto dist = boundary_distances(g, box, k.range());

  for (const auto& block : matrix_blocks(op.matrix)) {
    const std::size_t n = block.size();
    std::vector<std::int64_t> local(op.dim(), -1);
    for (std::size_t i = 0; i < n; ++i) local[block[i]] = static_cast<std::int64_t>(i);
    std::vector<MatrixEntry> entries;
    for (const auto& e : op.matrix.entries()) {
      if (local[e.row] >= 0) {
        entries.push_back({static_cast<std::uint32_t>(local[e.row]), static_cast<std::uint32_t>(local[e.col]), e.value});
      }
    }
    const SymMatrix sub(n, std::move(entries));
    const auto space = eigen_window(sub, energy - tau_deg, energy + tau_deg);
    const std::size_t q = space.values.size();
    if (q == 0) continue;

    std::vector<std::size_t> shell;
    bool touches = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int d = dist[idx.index(op.vertices[block[i]])];
      if (d <= k.range()) shell.push_back(i);
      if (d <= 1) touches = true;
    }
    const double tau_res = options.tau_res.value_or(default_tau_res(bound, n));

    // Coefficient vectors y with ||V_shell y|| <= tau_res.
    std::vector<std::vector<double>> coefficients;
    if (shell.empty()) {
      for (std::size_t c = 0; c < q; ++c) {
        std::vector<double> y(q, 0.0);
        y[c] = 1.0;
        coefficients.push_back(std::move(y));
      }
    } else {
      const auto s = static_cast<lapack_int>(shell.size());
      const auto qq = static_cast<lapack_int>(q);
      std::vector<double> b(shell.size() * q);
      for (std::size_t c = 0; c < q; ++c) {
        for (std::size_t r = 0; r < shell.size(); ++r) b[c * shell.size() + r] = space.vectors[c * n + shell[r]];
      }
      std::vector<double> sv(std::min(shell.size(), q));
      std::vector<double> vt(q * q);
      std::vector<double> superb(std::max<std::size_t>(1, std::min(shell.size(), q)));
      double dummy = 0.0;
      const auto info = LAPACKE_dgesvd(LAPACK_COL_MAJOR, 'N', 'A', s, qq, b.data(), s, sv.data(), &dummy, 1,
                                       vt.data(), qq, superb.data());
      if (info != 0) throw InvariantViolation("dgesvd failed with info=" + std::to_string(info));
      for (std::size_t c = 0; c < q; ++c) {
        const double sigma = c < sv.size() ? sv[c] : 0.0;
        if (sigma > tau_res) continue;
        std::vector<double> y(q);
        for (std::size_t j = 0; j < q; ++j) y[j] = vt[j * q + c];  // row c of V^T
        coefficients.push_back(std::move(y));
      }
    }

    for (const auto& y : coefficients) {
      std::vector<double> f(n, 0.0);
      for (std::size_t c = 0; c < q; ++c) {
        for (std::size_t i = 0; i < n; ++i) f[i] += space.vectors[c * n + i] * y[c];
      }
      double fmax = 0.0;
      for (double x : f) fmax = std::max(fmax, std::abs(x));
      if (fmax == 0.0) continue;
      CompactEigenstate st;
      st.energy = energy;
      st.region = box;
      st.on_boundary_cluster = touches;
      const double cut = 1e-10 * fmax;
      for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(f[i]) > cut) {
          st.support.push_back(op.vertices[block[i]]);
          st.amplitudes.push_back(f[i]);
        }
      }
      if (st.amplitudes.front() < 0.0) {
        for (auto& x : st.amplitudes) x = -x;  // sign convention: first amplitude positive
      }
      const auto check = verify_compact_eigenstate(g, k, cfg, st, k.range());
      if (!check.certified) continue;
      st.residual = check.residual;
      st.diameter = support_diameter(g, st.support, k.range());
      found.push_back(std::move(st));
    }
  }
  return found;
}

}  // namespace qperc
