#include <cmath>
#include <filesystem>
#include <new>
#include <ostream>
#include <sstream>

#include "cli_setup.hpp"
#include "qperc/enumerate.hpp"
#include "qperc/error.hpp"
#include "qperc/ids.hpp"
#include "qperc/parallel.hpp"
#include "qperc/spectral.hpp"

namespace qperc::cli {

namespace {

namespace fs = std::filesystem;

struct Context {
  std::string command;
  RunConfig config;
  Setup setup;
  int workers = 1;
  bool hints = false;
  fs::path dir;

  std::string provenance(const std::string& extra = {}) const {
    std::string s = "# qperc " + command + " config=" + config.digest() + " graph=" + setup.graph.name() +
                    " kernel=" + setup.kernel.name();
    return extra.empty() ? s : s + " " + extra;
  }

  IdsOptions ids_options() const {
    IdsOptions o;
    o.grid_points = config.grid_points;
    o.normalization = config.normalization == "active" ? Normalization::active : Normalization::box;
    o.tau_deg = config.tau_deg;
    o.workers = workers;
    return o;
  }

  void write(const std::string& name, const std::string& content) const { write_atomic(dir / name, content); }

  void hint(const std::string& name, const std::string& script) const {
    if (hints) write(name, "# gnuplot script\nset datafile separator ','\n" + script);
  }
};

void require_law_only(const Context& c, const std::string& what) {
  if (!c.setup.overrides.empty()) {
    throw ConfigError("law.sites: " + what + " samples the law and does not accept explicit sites");
  }
}

void cmd_ids(const Context& c) {
  const auto& cfgc = c.config;
  ExhaustionSchedule schedule(cfgc.schedule);
  const auto options = c.ids_options();
  std::vector<IDSCurve> curves;
  ConvergenceReport report;

  if (cfgc.estimator == "trace_formula") {
    require_law_only(c, "the trace formula estimator");
    const auto grid = uniform_grid(c.setup.bound, options.grid_points);
    report.estimator = "trace_formula";
    report.schedule = cfgc.schedule;
    report.probes = grid.size();
    for (std::size_t j = 0; j < schedule.size(); ++j) {
      curves.push_back(ids_trace_formula(c.setup.graph, c.setup.kernel, c.setup.law, cfgc.realizations,
                                         schedule.box(c.setup.graph, j), cfgc.buffer.value_or(2 * c.setup.kernel.range() + 2), options, grid));
      if (j > 0) {
        double sup = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
          sup = std::max(sup, std::abs(curves[j].value[i] - curves[j - 1].value[i]));
        }
        report.distances.push_back(sup);
      }
    }
  } else {
    const auto cfg = c.setup.configuration();
    auto result = cfgc.estimator == "infinite_cluster"
                      ? ids_infinite_cluster(c.setup.graph, c.setup.kernel, cfg, schedule, options)
                      : ids_exhaustion(c.setup.graph, c.setup.kernel, cfg, schedule, options);
    curves = std::move(result.curves);
    report = std::move(result.report);
  }

  std::string plot = "set xlabel 'E'\nset ylabel 'N(E)'\nplot ";
  for (std::size_t j = 0; j < curves.size(); ++j) {
    const auto name = "ids_L" + std::to_string(cfgc.schedule[j]) + ".csv";
    std::ostringstream out;
    write_ids_csv(out, curves[j],
                  c.provenance("estimator=" + curves[j].estimator + " box=" + curves[j].box +
                               " samples=" + std::to_string(curves[j].samples)));
    c.write(name, out.str());
    plot += (j ? ", " : "") + ("'" + name + "' every ::2 using 1:2 with lines title 'L=" +
                              std::to_string(cfgc.schedule[j]) + "'");
  }
  c.write("convergence.txt", c.provenance() + "\n" + report.to_text());
  c.hint("ids.gp", plot + "\n");
}

void cmd_bc_compare(const Context& c) {
  const auto a = make_perturbation(c.config, c.config.bc_a);
  const auto b = make_perturbation(c.config, c.config.bc_b);
  const auto rows = compare_boundary(c.setup.graph, c.setup.kernel, c.setup.configuration(),
                                     ExhaustionSchedule(c.config.schedule), a ? &*a : nullptr, b ? &*b : nullptr,
                                     c.ids_options());
  std::ostringstream out;
  out << c.provenance("a=" + (a ? a->describe() : std::string("free")) +
                      " b=" + (b ? b->describe() : std::string("free")))
      << "\nside,distance\n";
  for (const auto& r : rows) out << r.side << ',' << format_double(r.distance) << '\n';
  c.write("bc_table.csv", out.str());
  c.hint("bc_table.gp", "set logscale xy\nplot 'bc_table.csv' every ::2 using 1:2 with linespoints title 'sup |N_a - N_b|'\n");
}

void cmd_moments(const Context& c) {
  const auto& g = c.setup.graph;
  const auto& k = c.setup.kernel;
  const auto box = BoxRegion::cube(g.dimension(), c.config.moments_side);
  const auto normalizer = static_cast<double>(box.vertex_count(g));
  std::ostringstream out;
  out << c.provenance("box=" + box.describe()) << "\nrealization,m,spectral,walks,abs_diff\n";
  std::string failure;
  for (std::size_t r = 0; r < c.config.moments_realizations; ++r) {
    const auto cfg = c.setup.configuration(r);
    const auto spec = eigenvalues(compress_active(g, k, cfg, box), c.workers);
    for (int m = 0; m <= c.config.moments_max; ++m) {
      const double spectral = moment_spectral(spec, m, normalizer);
      const double walks = moment_walks(g, k, cfg, box, m, nullptr, normalizer);
      const double diff = std::abs(spectral - walks);
      out << r << ',' << m << ',' << format_double(spectral) << ',' << format_double(walks) << ','
          << format_double(diff) << '\n';
      const double tol = c.config.moments_tolerance * std::pow(c.setup.bound, m);
      if (!(diff <= tol) && failure.empty()) {
        failure = "moment oracle mismatch at realization " + std::to_string(r) + ", m=" + std::to_string(m) +
                  ": |diff|=" + format_double(diff) + " > " + format_double(tol);
      }
    }
  }
  c.write("moments.csv", out.str());
  c.hint("moments.gp", "set logscale y\nplot 'moments.csv' every ::2 using 2:5 with points title '|diff|'\n");
  if (!failure.empty()) throw InvariantViolation(failure);
}

void cmd_enumerate(const Context& c) {
  const auto sigma = sigma_tilde(c.setup.graph, c.setup.kernel, c.config.enumerate_max_size, c.config.tau_deg,
                                 c.config.enumerate_cap, c.workers);
  std::ostringstream out;
  write_sigma_csv(out, sigma,
                  c.provenance("max_size=" + std::to_string(sigma.max_size) + " tau=" + format_double(sigma.tau) +
                               " shapes=" + std::to_string(sigma.shapes.size())));
  c.write("sigma_tilde.csv", out.str());
  c.hint("sigma_tilde.gp", "plot 'sigma_tilde.csv' every ::2 using 1:3 with impulses title 'witness shapes'\n");
}

void cmd_jumps(const Context& c) {
  require_law_only(c, "the jump estimator");
  const auto est = jump_estimate(c.setup.graph, c.setup.kernel, c.setup.law, c.config.jumps_energy,
                                 c.config.jumps_realizations, ExhaustionSchedule(c.config.schedule), c.ids_options());
  std::ostringstream out;
  out << c.provenance("energy=" + format_double(est.energy) + " tau=" + format_double(est.tau) +
                      " present=" + (est.present ? "1" : "0") + " height=" + format_double(est.height) +
                      " stderr=" + format_double(est.stderr_))
      << "\nside,height,stderr\n";
  for (const auto& s : est.trend) out << s.side << ',' << format_double(s.mean) << ',' << format_double(s.stderr_) << '\n';
  c.write("jumps.csv", out.str());
  c.hint("jumps.gp", "plot 'jumps.csv' every ::2 using 1:2:3 with yerrorbars title 'jump height'\n");
}

void cmd_molecular(const Context& c) {
  const auto& g = c.setup.graph;
  const auto& k = c.setup.kernel;
  Cell lower{};
  for (std::size_t i = 0; i < c.config.molecular_lower.size(); ++i) lower[i] = c.config.molecular_lower[i];
  const auto box = BoxRegion::cube(g.dimension(), c.config.molecular_side, lower);
  const auto cfg = c.setup.configuration();
  const auto states = molecular_search(g, k, cfg, box, c.config.molecular_energy,
                                       MolecularOptions{c.config.tau_deg, c.config.molecular_tau_res});
  std::ostringstream report;
  report << c.provenance("box=" + box.describe() + " energy=" + format_double(c.config.molecular_energy)) << '\n';
  report << "states = " << states.size() << '\n';
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& s = states[i];
    const auto at_r = verify_compact_eigenstate(g, k, cfg, s, k.range(), c.config.molecular_tau_res);
    const auto at_2r = verify_compact_eigenstate(g, k, cfg, s, 2 * k.range(), c.config.molecular_tau_res);
    report << "state[" << i << "] energy=" << format_double(s.energy) << " support=" << s.support.size()
           << " diameter=" << s.diameter << " residual_R=" << format_double(at_r.residual)
           << " certified_R=" << at_r.certified << " residual_2R=" << format_double(at_2r.residual)
           << " certified_2R=" << at_2r.certified << " tolerance=" << format_double(at_r.tolerance)
           << " boundary_cluster=" << s.on_boundary_cluster << '\n';
    std::ostringstream dump;
    dump << c.provenance("state=" + std::to_string(i)) << "\norbit";
    for (int d = 0; d < g.dimension(); ++d) dump << ",c" << (d + 1);
    dump << ",amplitude\n";
    for (std::size_t v = 0; v < s.support.size(); ++v) {
      dump << s.support[v].orbit;
      for (int d = 0; d < g.dimension(); ++d) dump << ',' << s.support[v].cell[static_cast<std::size_t>(d)];
      dump << ',' << format_double(s.amplitudes[v]) << '\n';
    }
    c.write("state_" + std::to_string(i) + ".csv", dump.str());
  }
  c.write("states.txt", report.str());
  if (g.dimension() == 2) {
    c.hint("states.gp", "plot for [f in system('ls state_*.csv')] f every ::2 using 2:3:4 with points pt 7 ps 2 lc palette notitle\n");
  }
}

}  // namespace

int run_command(std::string_view command, const std::filesystem::path& config_path, const RunOptions& options,
                std::ostream& out, std::ostream& err) {
  try {
    bool known = false;
    for (const auto& name : subcommands()) known = known || name == command;
    if (!known) throw ConfigError("command: unknown subcommand '" + std::string(command) + "'");

    auto config = load_config(config_path);
    if (command == "validate-config") {
      out << config.resolved_text();
      return kOk;
    }

    Context c{std::string(command), config, build_setup(config), resolve_workers(options.workers),
              options.gnuplot_hints, fs::path(config.output)};
    fs::create_directories(c.dir);
    c.write("resolved_config.ini", "# config=" + config.digest() + "\n" + config.resolved_text());

    if (command == "ids") cmd_ids(c);
    else if (command == "bc-compare") cmd_bc_compare(c);
    else if (command == "moments") cmd_moments(c);
    else if (command == "enumerate") cmd_enumerate(c);
    else if (command == "jumps") cmd_jumps(c);
    else if (command == "molecular") cmd_molecular(c);
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ResourceCapError& e) {
    err << "resource cap: " << e.what() << '\n';
    return kResourceCap;
  } catch (const std::bad_alloc&) {
    err << "resource cap: out of memory\n";
    return kResourceCap;
  } catch (const InvariantViolation& e) {
    err << "invariant violation: " << e.what() << '\n';
    return kInvariantViolation;
  } catch (const fs::filesystem_error& e) {
    err << "config error: output: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInvariantViolation;
  }
}

}  // namespace qperc::cli
