#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qperc::cli {

/// Exit codes of the batch tool.
enum ExitCode : int { kOk = 0, kConfigError = 2, kResourceCap = 3, kInvariantViolation = 4 };

/// A fully validated run configuration. Every field has a default; the
/// resolved text lists all of them.
struct RunConfig {
  // [graph]
  std::string graph_preset = "chain";
  std::string graph_file;  // crystal file; takes precedence over the preset
  // [kernel]
  std::string kernel_preset = "adjacency";
  std::string kernel_file;
  double t1 = 1.0;
  double t2 = 0.0;
  // [law]
  std::vector<double> p = {1.0};  // one value per orbit (a single value is broadcast)
  std::uint64_t seed = 0;
  std::string sites_file;  // explicit site statuses
  // [run]
  std::string output = "out";
  std::vector<std::int64_t> schedule = {16, 32, 64};
  std::size_t grid_points = 2001;
  std::string normalization = "box";
  std::optional<double> tau_deg;  // resolved to 1e-8 K
  std::string estimator = "exhaustion";
  std::size_t realizations = 10;
  std::optional<int> buffer;  // resolved to 2R + 2
  // [bc]
  std::string bc_a = "free";
  std::string bc_b = "periodic_wrap";
  double bc_strength = 1.0;
  int bc_width = 1;
  std::uint64_t bc_seed = 0;
  // [moments]
  std::int64_t moments_side = 24;
  int moments_max = 6;
  std::size_t moments_realizations = 10;
  double moments_tolerance = 1e-8;  // relative to K^m
  // [enumerate]
  int enumerate_max_size = 4;
  int enumerate_cap = 10;
  // [jumps]
  double jumps_energy = 0.0;
  std::size_t jumps_realizations = 10;
  // [molecular]
  double molecular_energy = 0.0;
  std::int64_t molecular_side = 12;
  std::vector<std::int64_t> molecular_lower = {0};
  std::optional<double> molecular_tau_res;  // auto: 1e-9 K sqrt(support size)

  /// Parses section/key text. Relative paths resolve against base_dir.
  /// Throws ConfigError naming the offending field.
  static RunConfig parse(std::string_view text, const std::filesystem::path& base_dir = {});

  /// Builds the graph, kernel and law once to check every field, and fills
  /// the defaults that depend on them (per-orbit p, tau_deg).
  void validate();

  /// Canonical `[section]` / `key = value` text with every field explicit.
  std::string resolved_text() const;
  /// FNV-1a 64 of resolved_text(), as 16 hex digits.
  std::string digest() const;
};

RunConfig load_config(const std::filesystem::path& path);

/// Writes to a temporary sibling and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

struct RunOptions {
  int workers = 0;  // 0: QPERC_WORKERS or 1
  bool gnuplot_hints = false;
};

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"ids",   "bc-compare", "moments",        "enumerate",
                                                 "jumps", "molecular",  "validate-config"};
  return names;
}

/// Runs one subcommand on a validated config and returns the exit code.
/// Errors are reported on `err`.
int run_command(std::string_view command, const std::filesystem::path& config_path, const RunOptions& options,
                std::ostream& out, std::ostream& err);

}  // namespace qperc::cli
