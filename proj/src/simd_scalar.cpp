#include "qperc/simd.hpp"

namespace qperc::simd::scalar {

void hash_row(std::uint64_t prefix, std::int64_t first, std::size_t count, std::uint64_t* out) {
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = mix64(prefix ^ zigzag(first + static_cast<std::int64_t>(i)));
  }
}

void spmm4(const CsrView& a, std::size_t row_begin, std::size_t row_end, const double* x, double* y) {
  for (std::size_t r = row_begin; r < row_end; ++r) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
      const double v = a.val[k];
      const double* xr = x + 4 * static_cast<std::size_t>(a.col[k]);
      for (int c = 0; c < 4; ++c) acc[c] += v * xr[c];
    }
    for (int c = 0; c < 4; ++c) y[4 * r + c] = acc[c];
  }
}

double masked_sumsq(const double* x, const double* mask, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += mask[i] * x[i] * x[i];
  return s;
}

}  // namespace qperc::simd::scalar
