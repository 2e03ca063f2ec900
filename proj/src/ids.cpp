#include "qperc/ids.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "qperc/eigensolver.hpp"
#include "qperc/error.hpp"
#include "qperc/parallel.hpp"

namespace qperc {

std::vector<double> uniform_grid(double bound, std::size_t points) {
  if (points < 2) throw ConfigError("grid_points must be at least 2");
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = -bound + 2.0 * bound * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  grid.back() = bound;
  return grid;
}

std::vector<double> merge_probes(std::vector<double> grid, std::span<const double> probes) {
  grid.insert(grid.end(), probes.begin(), probes.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::pair<double, double> mean_and_stderr(std::span<const double> samples) {
  const auto n = static_cast<double>(samples.size());
  if (samples.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= n;
  if (samples.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

std::string ConvergenceReport::to_text() const {
  std::ostringstream out;
  out << "estimator = " << estimator << '\n';
  out << "schedule = ";
  for (std::size_t i = 0; i < schedule.size(); ++i) out << (i ? "," : "") << schedule[i];
  out << '\n';
  out << "probes = " << probes << '\n';
  out << "excluded_probes = " << excluded_probes << '\n';
  for (std::size_t i = 0; i < distances.size(); ++i) {
    out << "distance[" << schedule[i] << "->" << schedule[i + 1] << "] = " << format_double(distances[i]) << '\n';
  }
  for (std::size_t p = 0; p < probe_energies.size(); ++p) {
    out << "probe[" << format_double(probe_energies[p]) << "] = ";
    for (std::size_t j = 0; j < probe_values[p].size(); ++j) {
      out << (j ? "," : "") << format_double(probe_values[p][j]);
    }
    out << '\n';
  }
  return out.str();
}

namespace {

struct CurveInput {
  DegeneracyList levels;
  double normalizer = 1.0;
  std::string box;
};

double resolve_tau(const IdsOptions& options, double bound) {
  return options.tau_deg.value_or(default_tau_deg(bound));
}

double normalizer_for(const IdsOptions& options, std::size_t box_vertices, std::size_t compressed) {
  const auto n = options.normalization == Normalization::box ? box_vertices : compressed;
  return n == 0 ? 1.0 : static_cast<double>(n);
}

ExhaustionResult assemble_exhaustion(std::vector<CurveInput> inputs, const ExhaustionSchedule& schedule, double bound,
                                     double tau, const IdsOptions& options, const std::string& estimator) {
  std::vector<double> reps;
  std::vector<double> jumps;
  for (const auto& in : inputs) {
    for (const auto& l : in.levels) {
      reps.push_back(l.energy);
      if (l.multiplicity >= 2) jumps.push_back(l.energy);
    }
  }
  std::sort(jumps.begin(), jumps.end());
  const auto uniform = uniform_grid(bound, options.grid_points);
  const auto grid = merge_probes(uniform, reps);

  ExhaustionResult result;
  for (const auto& in : inputs) {
    IDSCurve c;
    c.energy = grid;
    c.value = counting_curve(in.levels, grid, in.normalizer, tau);
    c.stderr_.assign(grid.size(), 0.0);
    c.estimator = estimator;
    c.box = in.box;
    result.curves.push_back(std::move(c));
  }

  auto& rep = result.report;
  rep.estimator = estimator;
  rep.schedule = schedule.sides();
  std::vector<bool> continuity(grid.size(), true);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto it = std::lower_bound(jumps.begin(), jumps.end(), grid[i] - tau);
    if (it != jumps.end() && *it <= grid[i] + tau) continuity[i] = false;
  }
  rep.probes = static_cast<std::size_t>(std::count(continuity.begin(), continuity.end(), true));
  rep.excluded_probes = grid.size() - rep.probes;
  for (std::size_t j = 0; j + 1 < result.curves.size(); ++j) {
    double d = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (continuity[i]) d = std::max(d, std::abs(result.curves[j + 1].value[i] - result.curves[j].value[i]));
    }
    rep.distances.push_back(d);
  }
  // A few continuity probes spread over the uniform part of the grid.
  for (int q = 1; q <= 7; ++q) {
    const double e = uniform[uniform.size() * static_cast<std::size_t>(q) / 8];
    const auto i = static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), e) - grid.begin());
    if (i >= grid.size() || !continuity[i]) continue;
    rep.probe_energies.push_back(grid[i]);
    std::vector<double> seq;
    for (const auto& c : result.curves) seq.push_back(c.value[i]);
    rep.probe_values.push_back(std::move(seq));
  }
  return result;
}

}  // namespace

ExhaustionResult ids_exhaustion(const PeriodicGraph& g, const HoppingKernel& k, const Configuration& cfg,
                                const ExhaustionSchedule& schedule, const IdsOptions& options,
                                const BoundaryPerturbation* pert) {
  const double bound = operator_norm_bound(k, g);
  const double tau = resolve_tau(options, bound);
  std::vector<CurveInput> inputs(schedule.size());
  parallel_for(schedule.size(), resolve_workers(options.workers), [&](std::size_t j) {
    const auto box = schedule.box(g, j);
    auto op = compress_active(g, k, cfg, box);
    if (pert) op = add(op, realize_perturbation(g, k, cfg, box, *pert), pert->describe());
    inputs[j].levels = degeneracy_cluster(eigenvalues(op.matrix), tau);
    inputs[j].normalizer = normalizer_for(options, box.vertex_count(g), op.dim());
    inputs[j].box = box.describe();
  });
  return assemble_exhaustion(std::move(inputs), schedule, bound, tau, options,
                             pert ? "exhaustion+" + pert->describe() : "exhaustion");
}

ExhaustionResult ids_infinite_cluster(const PeriodicGraph& g, const HoppingKernel& k, const Configuration& cfg,
                                      const ExhaustionSchedule& schedule, const IdsOptions& options) {
  const double bound = operator_norm_bound(k, g);
  const double tau = resolve_tau(options, bound);
  std::vector<CurveInput> inputs(schedule.size());
  parallel_for(schedule.size(), resolve_workers(options.workers), [&](std::size_t j) {
    const auto box = schedule.box(g, j);
    BoxIndexer idx(g, box);
    std::vector<std::size_t> indices;
    for (const auto& v : boundary_touching(g, cfg, box)) indices.push_back(idx.index(v));
    const auto op = compress_box_subset(g, k, box, indices);
    inputs[j].levels = degeneracy_cluster(eigenvalues(op.matrix), tau);
    inputs[j].normalizer = normalizer_for(options, box.vertex_count(g), op.dim());
    inputs[j].box = box.describe();
  });
  return assemble_exhaustion(std::move(inputs), schedule, bound, tau, options, "infinite_cluster");
}

IDSCurve ids_trace_formula(const PeriodicGraph& g, const HoppingKernel& k, const PercolationLaw& law,
                           std::size_t realizations, const BoxRegion& box, int buffer, const IdsOptions& options,
                           std::span<const double> grid_in) {
  if (realizations == 0) throw ConfigError("realizations must be positive");
  if (buffer < k.range()) throw ConfigError("buffer must be at least the kernel range R");
  BoxRegion interior = box;
  for (int q = 0; q < box.dimension; ++q) {
    interior.lower[q] += buffer;
    interior.sides[q] -= 2 * buffer;
    if (interior.sides[q] < 1) throw ConfigError("trace formula: box interior is empty after buffering");
  }
  const double bound = operator_norm_bound(k, g);
  const double tau = resolve_tau(options, bound);
  const std::vector<double> grid =
      grid_in.empty() ? uniform_grid(bound, options.grid_points) : std::vector<double>(grid_in.begin(), grid_in.end());
  // |F| times the number of interior translates of F.
  const double copies = static_cast<double>(interior.vertex_count(g));

  std::vector<std::vector<double>> per_real(realizations);
  const int workers = resolve_workers(options.workers);
  parallel_for(realizations, workers, [&](std::size_t r) {
    const Configuration cfg(g, law.with_realization(law.realization + r));
    const auto op = compress_active(g, k, cfg, box);
    EigenOptions eo;
    eo.vectors = true;
    std::vector<std::pair<double, double>> weighted;  // (eigenvalue, interior weight)
    for (const auto& b : eigen_decompose(op.matrix, eo)) {
      const std::size_t n = b.indices.size();
      std::vector<double> mask(n);
      bool any = false;
      for (std::size_t i = 0; i < n; ++i) {
        mask[i] = interior.contains(op.vertices[b.indices[i]]) ? 1.0 : 0.0;
        any = any || mask[i] != 0.0;
      }
      if (!any) continue;
      for (std::size_t c = 0; c < b.values.size(); ++c) {
        weighted.emplace_back(b.values[c], simd::masked_sumsq(b.vectors.data() + c * n, mask.data(), n));
      }
    }
    std::sort(weighted.begin(), weighted.end());
    std::vector<double> prefix(weighted.size() + 1, 0.0);
    for (std::size_t i = 0; i < weighted.size(); ++i) prefix[i + 1] = prefix[i] + weighted[i].second;
    auto& out = per_real[r];
    out.reserve(grid.size());
    for (double e : grid) {
      const auto it = std::lower_bound(weighted.begin(), weighted.end(), e - tau,
                                       [](const auto& w, double x) { return w.first < x; });
      out.push_back(prefix[static_cast<std::size_t>(it - weighted.begin())] / copies);
    }
  });

  IDSCurve curve;
  curve.energy = grid;
  curve.estimator = "trace_formula";
  curve.samples = realizations;
  curve.box = box.describe();
  std::vector<double> column(realizations);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t r = 0; r < realizations; ++r) column[r] = per_real[r][i];
    const auto [m, se] = mean_and_stderr(column);
    curve.value.push_back(m);
    curve.stderr_.push_back(se);
  }
  return curve;
}

std::vector<BoundaryDistance> compare_boundary(const PeriodicGraph& g, const HoppingKernel& k,
                                               const Configuration& cfg, const ExhaustionSchedule& schedule,
                                               const BoundaryPerturbation* pert_a,
                                               const BoundaryPerturbation* pert_b, const IdsOptions& options) {
  const double bound = operator_norm_bound(k, g);
  const double tau = resolve_tau(options, bound);
  const auto uniform = uniform_grid(bound, options.grid_points);
  std::vector<BoundaryDistance> out(schedule.size());
  parallel_for(schedule.size(), resolve_workers(options.workers), [&](std::size_t j) {
    const auto box = schedule.box(g, j);
    const auto base = compress_active(g, k, cfg, box);
    auto levels_for = [&](const BoundaryPerturbation* p) {
      auto op = p ? add(base, realize_perturbation(g, k, cfg, box, *p), p->describe()) : base;
      return degeneracy_cluster(eigenvalues(op.matrix), tau);
    };
    const auto la = levels_for(pert_a);
    const auto lb = levels_for(pert_b);
    std::vector<double> reps;
    for (const auto* ls : {&la, &lb}) {
      for (const auto& l : *ls) reps.push_back(l.energy);
    }
    const auto grid = merge_probes(uniform, reps);
    const double norm = normalizer_for(options, box.vertex_count(g), base.dim());
    const auto na = counting_curve(la, grid, norm, tau);
    const auto nb = counting_curve(lb, grid, norm, tau);
    double d = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) d = std::max(d, std::abs(na[i] - nb[i]));
    out[j] = {schedule.sides()[j], d};
  });
  return out;
}

JumpEstimate jump_estimate(const PeriodicGraph& g, const HoppingKernel& k, const PercolationLaw& law, double energy,
                           std::size_t realizations, const ExhaustionSchedule& schedule, const IdsOptions& options) {
  if (!std::isfinite(energy)) throw ConfigError("jump energy must be finite");
  if (realizations == 0) throw ConfigError("realizations must be positive");
  const double bound = operator_norm_bound(k, g);
  JumpEstimate est;
  est.energy = energy;
  est.tau = resolve_tau(options, bound);
  const std::size_t sizes = schedule.size();
  std::vector<double> fractions(sizes * realizations);
  parallel_for(fractions.size(), resolve_workers(options.workers), [&](std::size_t t) {
    const std::size_t j = t / realizations;
    const std::size_t r = t % realizations;
    const auto box = schedule.box(g, j);
    const Configuration cfg(g, law.with_realization(law.realization + r));
    const auto op = compress_active(g, k, cfg, box);
    const auto spec = eigenvalues(op.matrix);
    const auto lo = std::lower_bound(spec.values.begin(), spec.values.end(), energy - est.tau);
    const auto hi = std::upper_bound(spec.values.begin(), spec.values.end(), energy + est.tau);
    fractions[t] = static_cast<double>(hi - lo) / normalizer_for(options, box.vertex_count(g), op.dim());
  });
  for (std::size_t j = 0; j < sizes; ++j) {
    const auto [m, se] = mean_and_stderr(std::span<const double>(fractions).subspan(j * realizations, realizations));
    est.trend.push_back({schedule.sides()[j], m, se});
  }
  est.height = est.trend.back().mean;
  est.stderr_ = est.trend.back().stderr_;
  bool stable = true;
  if (sizes >= 2) {
    const double a = est.trend[sizes - 2].mean;
    const double b = est.trend[sizes - 1].mean;
    stable = std::abs(a - b) <= 0.2 * std::max(std::abs(a), std::abs(b));
  }
  est.present = stable && est.height > 0.0 && est.height > 3.0 * est.stderr_;
  return est;
}

void write_ids_csv(std::ostream& out, const IDSCurve& curve, const std::string& provenance) {
  out << provenance << '\n';
  out << "energy,value,stderr\n";
  for (std::size_t i = 0; i < curve.energy.size(); ++i) {
    out << format_double(curve.energy[i]) << ',' << format_double(curve.value[i]) << ','
        << format_double(curve.stderr_.empty() ? 0.0 : curve.stderr_[i]) << '\n';
  }
}

}  // namespace qperc
