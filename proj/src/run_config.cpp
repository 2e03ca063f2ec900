#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cli_setup.hpp"
#include "qperc/error.hpp"
#include "qperc/spectral.hpp"

namespace qperc::cli {

namespace {

using Inputs = std::vector<std::string>;

// Runs f, prefixing configuration errors with the field they came from.
template <class F>
auto for_field(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.rfind(field, 0) == 0) throw;
    throw ConfigError(field + ": " + what);
  }
}

const std::string& single(const std::string& field, const Inputs& in) {
  if (in.size() != 1) throw ConfigError(field + ": expected exactly one value");
  return in.front();
}

double to_double(const std::string& field, const std::string& s) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(x)) {
    throw ConfigError(field + ": not a finite number: '" + s + "'");
  }
  return x;
}

template <typename T>
T to_integer(const std::string& field, const std::string& s) {
  T x{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(field + ": not an integer in range: '" + s + "'");
  }
  return x;
}

// Lists accept both `1 2 3` and `1, 2, 3`.
Inputs split_list(const Inputs& in) {
  Inputs out;
  for (const auto& s : in) {
    std::size_t start = 0;
    while (start <= s.size()) {
      const auto comma = s.find(',', start);
      const auto piece = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!piece.empty()) out.push_back(piece);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return out;
}

std::optional<double> to_auto_double(const std::string& field, const Inputs& in) {
  const auto& s = single(field, in);
  if (s == "auto") return std::nullopt;
  return to_double(field, s);
}

std::string resolve_path(const std::string& value, const std::filesystem::path& base) {
  if (value.empty()) return value;
  std::filesystem::path p(value);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal().string();
}

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
  return s;
}

std::string join_ints(const std::vector<std::int64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s;
}

std::string auto_or(const std::optional<double>& x) { return x ? format_double(*x) : "auto"; }

}  // namespace

std::string read_file(const std::filesystem::path& path, const std::string& field) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(field + ": cannot read '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig RunConfig::parse(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig c;
  using Setter = std::function<void(const std::string&, const Inputs&)>;
  auto str = [](std::string& dst) { return Setter([&dst](const std::string& f, const Inputs& in) { dst = single(f, in); }); };
  auto path = [&base_dir](std::string& dst) {
    return Setter([&dst, &base_dir](const std::string& f, const Inputs& in) {
      dst = in.empty() ? std::string() : resolve_path(single(f, in), base_dir);
    });
  };
  auto real = [](double& dst) { return Setter([&dst](const std::string& f, const Inputs& in) { dst = to_double(f, single(f, in)); }); };
  auto maybe = [](std::optional<double>& dst) { return Setter([&dst](const std::string& f, const Inputs& in) { dst = to_auto_double(f, in); }); };
  auto maybe_int = [](std::optional<int>& dst) {
    return Setter([&dst](const std::string& f, const Inputs& in) {
      const auto& s = single(f, in);
      dst = s == "auto" ? std::nullopt : std::optional<int>(to_integer<int>(f, s));
    });
  };
  auto u64 = [](std::uint64_t& dst) { return Setter([&dst](const std::string& f, const Inputs& in) { dst = to_integer<std::uint64_t>(f, single(f, in)); }); };
  auto i64 = [](std::int64_t& dst) { return Setter([&dst](const std::string& f, const Inputs& in) { dst = to_integer<std::int64_t>(f, single(f, in)); }); };
  auto i32 = [](int& dst) { return Setter([&dst](const std::string& f, const Inputs& in) { dst = to_integer<int>(f, single(f, in)); }); };
  auto size = [](std::size_t& dst) { return Setter([&dst](const std::string& f, const Inputs& in) { dst = to_integer<std::size_t>(f, single(f, in)); }); };
  auto reals = [](std::vector<double>& dst) {
    return Setter([&dst](const std::string& f, const Inputs& in) {
      dst.clear();
      for (const auto& s : split_list(in)) dst.push_back(to_double(f, s));
    });
  };
  auto ints = [](std::vector<std::int64_t>& dst) {
    return Setter([&dst](const std::string& f, const Inputs& in) {
      dst.clear();
      for (const auto& s : split_list(in)) dst.push_back(to_integer<std::int64_t>(f, s));
    });
  };

  const std::map<std::string, Setter> fields = {
      {"graph.preset", str(c.graph_preset)},
      {"graph.file", path(c.graph_file)},
      {"kernel.preset", str(c.kernel_preset)},
      {"kernel.file", path(c.kernel_file)},
      {"kernel.t1", real(c.t1)},
      {"kernel.t2", real(c.t2)},
      {"law.p", reals(c.p)},
      {"law.seed", u64(c.seed)},
      {"law.sites", path(c.sites_file)},
      {"run.output", path(c.output)},
      {"run.schedule", ints(c.schedule)},
      {"run.grid_points", size(c.grid_points)},
      {"run.normalization", str(c.normalization)},
      {"run.tau_deg", maybe(c.tau_deg)},
      {"run.estimator", str(c.estimator)},
      {"run.realizations", size(c.realizations)},
      {"run.buffer", maybe_int(c.buffer)},
      {"bc.a", str(c.bc_a)},
      {"bc.b", str(c.bc_b)},
      {"bc.strength", real(c.bc_strength)},
      {"bc.width", i32(c.bc_width)},
      {"bc.seed", u64(c.bc_seed)},
      {"moments.side", i64(c.moments_side)},
      {"moments.max_m", i32(c.moments_max)},
      {"moments.realizations", size(c.moments_realizations)},
      {"moments.tolerance", real(c.moments_tolerance)},
      {"enumerate.max_size", i32(c.enumerate_max_size)},
      {"enumerate.cap", i32(c.enumerate_cap)},
      {"jumps.energy", real(c.jumps_energy)},
      {"jumps.realizations", size(c.jumps_realizations)},
      {"molecular.energy", real(c.molecular_energy)},
      {"molecular.side", i64(c.molecular_side)},
      {"molecular.lower", ints(c.molecular_lower)},
      {"molecular.tau_res", maybe(c.molecular_tau_res)},
  };

  std::istringstream in{std::string(text)};
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  std::map<std::string, int> seen;
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    const auto name = item.fullname();
    const auto it = fields.find(name);
    if (it == fields.end()) throw ConfigError(name + ": unknown field");
    if (++seen[name] > 1) throw ConfigError(name + ": given more than once");
    it->second(name, item.inputs);
  }
  if (!base_dir.empty() && seen.count("run.output") == 0) c.output = resolve_path(c.output, base_dir);
  return c;
}

void RunConfig::validate() {
  if (p.empty()) throw ConfigError("law.p: at least one probability required");
  for (double x : p) {
    if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("law.p: probability " + format_double(x) + " outside [0, 1]");
  }
  const auto setup = build_setup(*this);
  p = setup.law.probabilities;
  const int d = setup.graph.dimension();

  for_field("run.schedule", [&] { ExhaustionSchedule checked(schedule); });
  if (grid_points < 2) throw ConfigError("run.grid_points: at least 2 points required");
  if (normalization != "box" && normalization != "active") {
    throw ConfigError("run.normalization: expected box or active, got '" + normalization + "'");
  }
  if (tau_deg && !(*tau_deg > 0.0)) throw ConfigError("run.tau_deg: must be positive");
  if (!tau_deg) tau_deg = default_tau_deg(setup.bound);
  if (estimator != "exhaustion" && estimator != "infinite_cluster" && estimator != "trace_formula") {
    throw ConfigError("run.estimator: expected exhaustion, infinite_cluster or trace_formula, got '" + estimator + "'");
  }
  if (realizations < 1) throw ConfigError("run.realizations: at least one realization required");
  if (!buffer) buffer = 2 * setup.kernel.range() + 2;
  if (*buffer < setup.kernel.range()) {
    throw ConfigError("run.buffer: must be at least the kernel range " + std::to_string(setup.kernel.range()));
  }
  if (estimator == "trace_formula") {
    for (auto side : this->schedule) {
      if (2 * static_cast<std::int64_t>(*buffer) >= side) {
        throw ConfigError("run.buffer: leaves no interior in a box of side " + std::to_string(side));
      }
    }
  }

  for (const auto& [field, kind] : {std::pair{"bc.a", &bc_a}, std::pair{"bc.b", &bc_b}}) {
    bool is_free = false;
    const auto parsed = parse_perturbation_kind(*kind, &is_free);
    if (!parsed && !is_free) throw ConfigError(std::string(field) + ": unknown boundary treatment '" + *kind + "'");
    if (parsed == BoundaryPerturbation::Kind::periodic_wrap) {
      for (auto side : this->schedule) {
        if (side <= 2 * setup.kernel.max_cell_step()) {
          throw ConfigError(std::string(field) + ": periodic_wrap needs box sides above " +
                            std::to_string(2 * setup.kernel.max_cell_step()));
        }
      }
    }
  }
  if (!(bc_strength >= 0.0)) throw ConfigError("bc.strength: must be nonnegative");
  if (bc_width < 0) throw ConfigError("bc.width: must be nonnegative");

  if (moments_side < 1) throw ConfigError("moments.side: must be positive");
  if (moments_max < 0 || moments_max > kDefaultMaxWalkLength) {
    throw ConfigError("moments.max_m: must lie in [0, " + std::to_string(kDefaultMaxWalkLength) + "]");
  }
  if (moments_realizations < 1) throw ConfigError("moments.realizations: at least one realization required");
  if (!(moments_tolerance > 0.0)) throw ConfigError("moments.tolerance: must be positive");

  if (enumerate_max_size < 1) throw ConfigError("enumerate.max_size: must be positive");
  if (enumerate_cap < 1) throw ConfigError("enumerate.cap: must be positive");
  if (jumps_realizations < 1) throw ConfigError("jumps.realizations: at least one realization required");

  if (molecular_side < 1) throw ConfigError("molecular.side: must be positive");
  if (molecular_lower.size() == 1 && d > 1) molecular_lower.assign(static_cast<std::size_t>(d), molecular_lower[0]);
  if (molecular_lower.size() != static_cast<std::size_t>(d)) {
    throw ConfigError("molecular.lower: expected " + std::to_string(d) + " coordinates");
  }
  if (molecular_tau_res && !(*molecular_tau_res > 0.0)) throw ConfigError("molecular.tau_res: must be positive");
  if (output.empty()) throw ConfigError("run.output: must not be empty");
}

std::string RunConfig::resolved_text() const {
  std::ostringstream o;
  o << "[graph]\npreset = " << graph_preset << "\nfile = " << graph_file << "\n\n";
  o << "[kernel]\npreset = " << kernel_preset << "\nfile = " << kernel_file << "\nt1 = " << format_double(t1)
    << "\nt2 = " << format_double(t2) << "\n\n";
  o << "[law]\np = " << join_doubles(p) << "\nseed = " << seed << "\nsites = " << sites_file << "\n\n";
  o << "[run]\noutput = " << output << "\nschedule = " << join_ints(schedule) << "\ngrid_points = " << grid_points
    << "\nnormalization = " << normalization << "\ntau_deg = " << auto_or(tau_deg) << "\nestimator = " << estimator
    << "\nrealizations = " << realizations << "\nbuffer = " << (buffer ? std::to_string(*buffer) : std::string("auto")) << "\n\n";
  o << "[bc]\na = " << bc_a << "\nb = " << bc_b << "\nstrength = " << format_double(bc_strength)
    << "\nwidth = " << bc_width << "\nseed = " << bc_seed << "\n\n";
  o << "[moments]\nside = " << moments_side << "\nmax_m = " << moments_max << "\nrealizations = " << moments_realizations
    << "\ntolerance = " << format_double(moments_tolerance) << "\n\n";
  o << "[enumerate]\nmax_size = " << enumerate_max_size << "\ncap = " << enumerate_cap << "\n\n";
  o << "[jumps]\nenergy = " << format_double(jumps_energy) << "\nrealizations = " << jumps_realizations << "\n\n";
  o << "[molecular]\nenergy = " << format_double(molecular_energy) << "\nside = " << molecular_side
    << "\nlower = " << join_ints(molecular_lower) << "\ntau_res = " << auto_or(molecular_tau_res) << "\n";
  return o.str();
}

std::string RunConfig::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : resolved_text()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig load_config(const std::filesystem::path& path) {
  auto config = RunConfig::parse(read_file(path, "config"), path.parent_path());
  config.validate();
  return config;
}

Configuration Setup::configuration(std::uint64_t realization) const {
  Configuration cfg(graph, law.with_realization(realization));
  return overrides.empty() ? cfg : cfg.with_overrides(overrides);
}

Setup build_setup(const RunConfig& c) {
  auto graph = c.graph_file.empty()
                   ? for_field("graph.preset", [&] { return build_preset(c.graph_preset); })
                   : for_field("graph.file", [&] {
                       return parse_crystal(read_file(c.graph_file, "graph.file"),
                                            std::filesystem::path(c.graph_file).stem().string());
                     });
  HoppingKernel kernel = [&] {
    if (!c.kernel_file.empty()) {
      return for_field("kernel.file", [&] {
        return parse_kernel(read_file(c.kernel_file, "kernel.file"), graph,
                            std::filesystem::path(c.kernel_file).stem().string());
      });
    }
    const auto preset = parse_kernel_preset(c.kernel_preset);
    if (!preset) throw ConfigError("kernel.preset: unknown preset '" + c.kernel_preset + "'");
    return kernel_preset(graph, *preset, KernelParams{c.t1, c.t2});
  }();
  auto p = c.p;
  if (p.size() == 1) p.assign(static_cast<std::size_t>(graph.orbit_count()), p.front());
  if (p.size() != static_cast<std::size_t>(graph.orbit_count())) {
    throw ConfigError("law.p: expected 1 or " + std::to_string(graph.orbit_count()) + " probabilities");
  }
  PercolationLaw law{p, c.seed, 0};
  for_field("law.p", [&] { law.validate(graph); });
  SiteOverrides overrides;
  if (!c.sites_file.empty()) {
    overrides = for_field("law.sites", [&] { return parse_site_overrides(read_file(c.sites_file, "law.sites"), graph); });
  }
  const double bound = operator_norm_bound(kernel, graph);
  return Setup{std::move(graph), std::move(kernel), std::move(law), std::move(overrides), bound};
}

std::optional<BoundaryPerturbation> make_perturbation(const RunConfig& c, const std::string& kind) {
  bool is_free = false;
  const auto parsed = parse_perturbation_kind(kind, &is_free);
  if (is_free) return std::nullopt;
  if (!parsed) throw ConfigError("bc: unknown boundary treatment '" + kind + "'");
  return BoundaryPerturbation{*parsed, c.bc_strength, c.bc_width, c.bc_seed};
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace qperc::cli
