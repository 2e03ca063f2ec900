#include <immintrin.h>

#include "qperc/simd.hpp"

namespace qperc::simd::avx2 {

namespace {

// Low 64 bits of a 64x64 product; AVX2 only has 32x32->64 multiplies.
inline __m256i mullo64(__m256i a, __m256i b) {
  const __m256i lo = _mm256_mul_epu32(a, b);
  const __m256i hi_lo = _mm256_mul_epu32(_mm256_srli_epi64(a, 32), b);
  const __m256i lo_hi = _mm256_mul_epu32(a, _mm256_srli_epi64(b, 32));
  return _mm256_add_epi64(lo, _mm256_slli_epi64(_mm256_add_epi64(hi_lo, lo_hi), 32));
}

inline __m256i mix64x4(__m256i z) {
  z = _mm256_add_epi64(z, _mm256_set1_epi64x(static_cast<long long>(0x9E3779B97F4A7C15ULL)));
  z = mullo64(_mm256_xor_si256(z, _mm256_srli_epi64(z, 30)),
              _mm256_set1_epi64x(static_cast<long long>(0xBF58476D1CE4E5B9ULL)));
  z = mullo64(_mm256_xor_si256(z, _mm256_srli_epi64(z, 27)),
              _mm256_set1_epi64x(static_cast<long long>(0x94D049BB133111EBULL)));
  return _mm256_xor_si256(z, _mm256_srli_epi64(z, 31));
}

inline __m256i zigzag4(__m256i c) {
  const __m256i sign = _mm256_cmpgt_epi64(_mm256_setzero_si256(), c);
  return _mm256_xor_si256(_mm256_slli_epi64(c, 1), sign);
}

}  // namespace

void hash_row(std::uint64_t prefix, std::int64_t first, std::size_t count, std::uint64_t* out) {
  const __m256i vprefix = _mm256_set1_epi64x(static_cast<long long>(prefix));
  const __m256i step = _mm256_set1_epi64x(4);
  __m256i c = _mm256_add_epi64(_mm256_set1_epi64x(first), _mm256_setr_epi64x(0, 1, 2, 3));
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    const __m256i h = mix64x4(_mm256_xor_si256(vprefix, zigzag4(c)));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i), h);
    c = _mm256_add_epi64(c, step);
  }
  for (; i < count; ++i) out[i] = mix64(prefix ^ zigzag(first + static_cast<std::int64_t>(i)));
}

void spmm4(const CsrView& a, std::size_t row_begin, std::size_t row_end, const double* x, double* y) {
  for (std::size_t r = row_begin; r < row_end; ++r) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
      const __m256d xr = _mm256_loadu_pd(x + 4 * static_cast<std::size_t>(a.col[k]));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(a.val[k]), xr));
    }
    _mm256_storeu_pd(y + 4 * r, acc);
  }
}

double masked_sumsq(const double* x, const double* mask, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_mul_pd(_mm256_loadu_pd(mask + i), xv), xv));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s += mask[i] * x[i] * x[i];
  return s;
}

}  // namespace qperc::simd::avx2
