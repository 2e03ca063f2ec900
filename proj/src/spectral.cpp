#include "qperc/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "qperc/eigensolver.hpp"
#include "qperc/error.hpp"

namespace qperc {

Spectrum eigenvalues(const SymMatrix& m, int workers) {
  EigenOptions opt;
  opt.workers = workers;
  Spectrum spec;
  spec.values.reserve(m.dim());
  for (auto& b : eigen_decompose(m, opt)) spec.values.insert(spec.values.end(), b.values.begin(), b.values.end());
  std::sort(spec.values.begin(), spec.values.end());
  return spec;
}

Spectrum eigenvalues(const CompressedOperator& op, int workers) {
  auto spec = eigenvalues(op.matrix, workers);
  spec.provenance = op.provenance.header();
  return spec;
}

DegeneracyList degeneracy_cluster(const Spectrum& spec, double tau) {
  DegeneracyList out;
  std::size_t start = 0;
  const auto& v = spec.values;
  for (std::size_t i = 1; i <= v.size(); ++i) {
    if (i == v.size() || v[i] - v[i - 1] > tau) {
      if (i > start) {
        double sum = 0.0;
        for (std::size_t j = start; j < i; ++j) sum += v[j];
        out.push_back({sum / static_cast<double>(i - start), i - start});
      }
      start = i;
    }
  }
  return out;
}

double counting(const DegeneracyList& levels, double energy, double normalizer, double tau) {
  std::size_t n = 0;
  for (const auto& l : levels) {
    if (l.energy < energy - tau) n += l.multiplicity;
  }
  return static_cast<double>(n) / normalizer;
}

double counting(const Spectrum& spec, double energy, double normalizer, double tau) {
  return counting(degeneracy_cluster(spec, tau), energy, normalizer, tau);
}

std::vector<double> counting_curve(const DegeneracyList& levels, std::span<const double> grid, double normalizer,
                                   double tau) {
  std::vector<std::size_t> prefix(levels.size() + 1, 0);
  for (std::size_t i = 0; i < levels.size(); ++i) prefix[i + 1] = prefix[i] + levels[i].multiplicity;
  std::vector<double> out;
  out.reserve(grid.size());
  for (double e : grid) {
    const auto it = std::lower_bound(levels.begin(), levels.end(), e - tau,
                                     [](const DegeneracyLevel& l, double x) { return l.energy < x; });
    out.push_back(static_cast<double>(prefix[static_cast<std::size_t>(it - levels.begin())]) / normalizer);
  }
  return out;
}

double moment_spectral(const Spectrum& spec, int m, double normalizer) {
  double s = 0.0;
  for (double x : spec.values) s += std::pow(x, m);
  return s / normalizer;
}

std::vector<double> closed_walk_diagonal(const SymMatrix& m, int length, std::span<const std::size_t> rows) {
  if (length < 0) throw ConfigError("walk length must be nonnegative");
  std::vector<double> out(rows.size(), 0.0);
  if (length == 0) {
    std::fill(out.begin(), out.end(), 1.0);
    return out;
  }
  const auto csr = m.to_csr();
  const auto a = csr.view();
  const std::size_t n = m.dim();
  const auto band = static_cast<std::ptrdiff_t>(m.bandwidth());
  std::vector<double> x(4 * n, 0.0), y(4 * n, 0.0);

  for (std::size_t start = 0; start < rows.size(); start += 4) {
    const std::size_t cols = std::min<std::size_t>(4, rows.size() - start);
    auto lo = static_cast<std::ptrdiff_t>(rows[start]);
    auto hi = lo;
    for (std::size_t c = 0; c < cols; ++c) {
      const auto r = static_cast<std::ptrdiff_t>(rows[start + c]);
      if (rows[start + c] >= n) throw ConfigError("closed walk row out of range");
      lo = std::min(lo, r);
      hi = std::max(hi, r);
      x[4 * rows[start + c] + c] = 1.0;
    }
    // Support of M^k e_r stays within k bandwidths of r.
    for (int step = 0; step < length; ++step) {
      lo = std::max<std::ptrdiff_t>(0, lo - band);
      hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n) - 1, hi + band);
      simd::spmm4(a, static_cast<std::size_t>(lo), static_cast<std::size_t>(hi) + 1, x.data(), y.data());
      std::swap(x, y);
    }
    for (std::size_t c = 0; c < cols; ++c) out[start + c] = x[4 * rows[start + c] + c];
    std::fill(x.begin() + 4 * lo, x.begin() + 4 * (hi + 1), 0.0);
    std::fill(y.begin() + 4 * lo, y.begin() + 4 * (hi + 1), 0.0);
  }
  return out;
}

double closed_walk_trace(const SymMatrix& m, int length) {
  std::vector<std::size_t> rows(m.dim());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  double s = 0.0;
  for (double d : closed_walk_diagonal(m, length, rows)) s += d;
  return s;
}

double moment_walks(const PeriodicGraph& g, const HoppingKernel& k, const Configuration& cfg, const BoxRegion& box,
                    int m, const BoundaryPerturbation* pert, double normalizer, int max_length) {
  if (m < 0) throw ConfigError("moment order must be nonnegative");
  if (m > max_length) {
    throw ConfigError("moment order " + std::to_string(m) + " exceeds the walk-length cap " +
                      std::to_string(max_length));
  }
  auto op = compress_active(g, k, cfg, box);
  if (pert) op = add(op, realize_perturbation(g, k, cfg, box, *pert), pert->describe());
  return closed_walk_trace(op.matrix, m) / normalizer;
}

double boundary_trace_gap(const PeriodicGraph& g, const HoppingKernel& k, const Configuration& cfg,
                          const BoxRegion& box, int m) {
  if (m < 0) throw ConfigError("moment order must be nonnegative");
  const auto inner = compress_active(g, k, cfg, box);
  const double inner_trace = closed_walk_trace(inner.matrix, m);

  const BoxRegion outer_box = box.enlarged(static_cast<std::int64_t>(m) * std::max<std::int64_t>(1, k.max_cell_step()));
  const auto outer = compress_active(g, k, cfg, outer_box);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < outer.vertices.size(); ++i) {
    if (box.contains(outer.vertices[i])) rows.push_back(i);
  }
  double outer_trace = 0.0;
  for (double d : closed_walk_diagonal(outer.matrix, m, rows)) outer_trace += d;
  return std::abs(inner_trace - outer_trace) / static_cast<double>(box.vertex_count(g));
}

double boundary_trace_gap_bound(const PeriodicGraph& g, const HoppingKernel& k, const BoxRegion& box, int m) {
  const int h = k.range() * m;
  const double shell = static_cast<double>(boundary_shell(g, box, h).size());
  return shell * std::pow(static_cast<double>(g.max_degree()), m * m * k.range()) /
         static_cast<double>(box.vertex_count(g));
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_spectrum(std::ostream& out, const Spectrum& spec) {
  out << (spec.provenance.empty() ? "# provenance=unknown" : spec.provenance) << '\n';
  for (double x : spec.values) out << format_double(x) << '\n';
}

}  // namespace qperc
