#include "qperc/eigensolver.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "qperc/error.hpp"
#include "qperc/parallel.hpp"
#include "qperc/union_find.hpp"

namespace qperc {

namespace {

void check_info(lapack_int info, const char* routine);

// Some optimized BLAS builds return wrong products on some CPUs, which
// corrupts eigenvectors silently. Checked once on the free 16x16 square,
// whose spectrum is 2cos(pi a/17) + 2cos(pi b/17) with degenerate levels.
void run_backend_check() {
  constexpr int side = 16;
  constexpr int n = side * side;
  std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
  auto at = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(j) * n + i]; };
  for (int x = 0; x < side; ++x) {
    for (int y = 0; y < side; ++y) {
      const int i = x * side + y;
      if (x + 1 < side) at(i, i + side) = at(i + side, i) = 1.0;
      if (y + 1 < side) at(i, i + 1) = at(i + 1, i) = 1.0;
    }
  }
  std::vector<double> exact;
  for (int p = 1; p <= side; ++p) {
    for (int q = 1; q <= side; ++q) {
      exact.push_back(2.0 * std::cos(std::numbers::pi * p / (side + 1)) + 2.0 * std::cos(std::numbers::pi * q / (side + 1)));
    }
  }
  std::sort(exact.begin(), exact.end());
  std::vector<double> w(n);
  check_info(LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, a.data(), n, w.data()), "dsyevd");
  double worst = 0.0;
  for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(w[i] - exact[i]));
  for (int c = 0; c < n; ++c) {
    for (int d = c; d < n; ++d) {
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += at(i, c) * at(i, d);
      worst = std::max(worst, std::abs(dot - (c == d ? 1.0 : 0.0)));
    }
  }
  if (!(worst < 1e-10)) {
    throw InvariantViolation("LAPACK backend self-check failed (deviation " + std::to_string(worst) +
                             "); link a correct LAPACK/BLAS");
  }
}

void ensure_backend() {
  static std::once_flag once;
  std::call_once(once, run_backend_check);
}

void check_info(lapack_int info, const char* routine) {
  if (info != 0) throw InvariantViolation(std::string(routine) + " failed with info=" + std::to_string(info));
}

struct LocalBlock {
  std::size_t n = 0;
  std::vector<MatrixEntry> entries;  // local indices, row <= col
  std::size_t bandwidth = 0;
};

std::vector<LocalBlock> split(const SymMatrix& m, const std::vector<std::vector<std::size_t>>& blocks) {
  std::vector<std::size_t> block_of(m.dim()), local(m.dim());
  std::vector<LocalBlock> out(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    out[b].n = blocks[b].size();
    for (std::size_t i = 0; i < blocks[b].size(); ++i) {
      block_of[blocks[b][i]] = b;
      local[blocks[b][i]] = i;
    }
  }
  for (const auto& e : m.entries()) {
    auto& lb = out[block_of[e.row]];
    const auto r = static_cast<std::uint32_t>(local[e.row]);
    const auto c = static_cast<std::uint32_t>(local[e.col]);
    lb.entries.push_back({r, c, e.value});
    lb.bandwidth = std::max<std::size_t>(lb.bandwidth, c - r);
  }
  return out;
}

std::vector<double> dense_storage(const LocalBlock& b) {
  std::vector<double> a(b.n * b.n, 0.0);
  for (const auto& e : b.entries) a[e.col * b.n + e.row] = e.value;  // upper triangle, column-major
  return a;
}

// Banded reduction costs O(n^2 kd) instead of O(n^3).
bool prefer_band(const LocalBlock& b) { return b.n >= 64 && 8 * b.bandwidth < b.n; }

void solve_block(const LocalBlock& b, bool want_vectors, std::vector<double>& values, std::vector<double>& vectors) {
  const auto n = static_cast<lapack_int>(b.n);
  values.assign(b.n, 0.0);
  if (b.n == 1) {
    values[0] = b.entries.empty() ? 0.0 : b.entries[0].value;
    if (want_vectors) vectors.assign(1, 1.0);
    return;
  }
  if (!want_vectors && prefer_band(b)) {
    const auto kd = static_cast<lapack_int>(b.bandwidth);
    const auto ldab = kd + 1;
    std::vector<double> ab(static_cast<std::size_t>(ldab) * b.n, 0.0);
    for (const auto& e : b.entries) ab[static_cast<std::size_t>(kd + e.row - e.col) + e.col * ldab] = e.value;
    double dummy = 0.0;
    check_info(LAPACKE_dsbev(LAPACK_COL_MAJOR, 'N', 'U', n, kd, ab.data(), ldab, values.data(), &dummy, 1), "dsbev");
    return;
  }
  auto a = dense_storage(b);
  check_info(LAPACKE_dsyevd(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'U', n, a.data(), n, values.data()),
             "dsyevd");
  if (want_vectors) vectors = std::move(a);
}

}  // namespace

std::vector<std::vector<std::size_t>> matrix_blocks(const SymMatrix& m) {
  UnionFind uf(m.dim());
  for (const auto& e : m.entries()) {
    if (e.row != e.col && e.value != 0.0) uf.unite(e.row, e.col);
  }
  std::vector<std::vector<std::size_t>> blocks;
  std::vector<std::int64_t> block_of_root(m.dim(), -1);
  for (std::size_t i = 0; i < m.dim(); ++i) {
    const auto r = uf.find(i);
    if (block_of_root[r] < 0) {
      block_of_root[r] = static_cast<std::int64_t>(blocks.size());
      blocks.emplace_back();
    }
    blocks[static_cast<std::size_t>(block_of_root[r])].push_back(i);
  }
  return blocks;
}

std::vector<EigenBlock> eigen_decompose(const SymMatrix& m, const EigenOptions& options) {
  if (!m.all_finite()) throw ConfigError("matrix has non-finite entries");
  ensure_backend();
  auto blocks = matrix_blocks(m);
  for (const auto& b : blocks) {
    if (b.size() > options.max_block) {
      throw ResourceCapError("block of dimension " + std::to_string(b.size()) + " exceeds the dense solver cap " +
                             std::to_string(options.max_block));
    }
  }
  auto local = split(m, blocks);
  std::vector<EigenBlock> out(blocks.size());
  parallel_for(blocks.size(), options.workers, [&](std::size_t b) {
    out[b].indices = std::move(blocks[b]);
    solve_block(local[b], options.vectors, out[b].values, out[b].vectors);
  });
  return out;
}

EigenBlock eigen_window(const SymMatrix& m, double lo, double hi) {
  if (!m.all_finite()) throw ConfigError("matrix has non-finite entries");
  if (m.dim() > kMaxBlockDimension) {
    throw ResourceCapError("matrix of dimension " + std::to_string(m.dim()) + " exceeds the dense solver cap");
  }
  ensure_backend();
  EigenBlock out;
  const auto n = static_cast<lapack_int>(m.dim());
  out.indices.resize(m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i) out.indices[i] = i;
  if (n == 0) return out;
  // dsyevr (MRRR) loses orthogonality on large exactly degenerate clusters,
  // which lattice compressions produce; the divide-and-conquer solver does not.
  auto a = m.to_dense();
  std::vector<double> w(m.dim());
  check_info(LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, a.data(), n, w.data()), "dsyevd");
  for (std::size_t c = 0; c < m.dim(); ++c) {
    if (w[c] < lo || w[c] > hi) continue;
    out.values.push_back(w[c]);
    out.vectors.insert(out.vectors.end(), a.begin() + static_cast<std::ptrdiff_t>(c * m.dim()),
                       a.begin() + static_cast<std::ptrdiff_t>((c + 1) * m.dim()));
  }
  return out;
}

std::vector<double> dense_eigenvalues(const SymMatrix& m) {
  ensure_backend();
  std::vector<double> w(m.dim());
  if (m.dim() == 0) return w;
  auto a = m.to_dense();
  const auto n = static_cast<lapack_int>(m.dim());
  check_info(LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'U', n, a.data(), n, w.data()), "dsyevd");
  return w;
}

}  // namespace qperc
