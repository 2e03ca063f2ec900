#pragma once

#include <cstddef>
#include <vector>

#include "qperc/operator.hpp"

namespace qperc {

/// Largest block handed to the dense solver.
inline constexpr std::size_t kMaxBlockDimension = 4096;

/// Eigenpairs of one connected block of a symmetric matrix.
struct EigenBlock {
  std::vector<std::size_t> indices;  // ascending matrix indices of the block
  std::vector<double> values;        // ascending
  std::vector<double> vectors;       // column-major indices.size() x values.size(); empty unless requested
};

struct EigenOptions {
  bool vectors = false;
  std::size_t max_block = kMaxBlockDimension;
  int workers = 1;
};

/// Connected components of the nonzero pattern, ordered by smallest index.
std::vector<std::vector<std::size_t>> matrix_blocks(const SymMatrix& m);

/// Full eigendecomposition, block by block. Blocks larger than
/// options.max_block throw ResourceCapError; non-finite entries throw ConfigError.
std::vector<EigenBlock> eigen_decompose(const SymMatrix& m, const EigenOptions& options = {});

/// Eigenpairs of the whole matrix (no block splitting) with eigenvalues in [lo, hi].
EigenBlock eigen_window(const SymMatrix& m, double lo, double hi);

/// Dense eigenvalues of the whole matrix without block splitting.
std::vector<double> dense_eigenvalues(const SymMatrix& m);

}  // namespace qperc
