#pragma once

// Data-parallel inner kernels. Each kernel has a portable scalar reference in
// qperc::simd::scalar and, on x86-64, an AVX2 variant in qperc::simd::avx2.
// The unqualified entry points dispatch at runtime to the best available ISA;
// QPERC_SIMD=scalar in the environment forces the reference path.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace qperc::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);
bool isa_available(Isa isa);
Isa active_isa();

/// Forces an ISA for the lifetime of the object (tests and benchmarks).
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa);
  ~ScopedIsa();
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa previous_;
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  std::uint64_t z = x + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t zigzag(std::int64_t c) {
  return (static_cast<std::uint64_t>(c) << 1) ^ static_cast<std::uint64_t>(c >> 63);
}

/// Compressed sparse rows with 32-bit column indices.
struct CsrView {
  std::size_t rows = 0;
  const std::size_t* row_ptr = nullptr;
  const std::uint32_t* col = nullptr;
  const double* val = nullptr;
};

// out[i] = mix64(prefix ^ zigzag(first + i)) for i < count.
void hash_row(std::uint64_t prefix, std::int64_t first, std::size_t count, std::uint64_t* out);

// Y = A X on rows [row_begin, row_end), X and Y row-major with 4 columns.
// Products are accumulated in CSR order per lane, so all ISAs agree bitwise.
void spmm4(const CsrView& a, std::size_t row_begin, std::size_t row_end, const double* x, double* y);

// sum_i mask[i] * x[i]^2. Lane-parallel reduction; ISAs agree to rounding.
double masked_sumsq(const double* x, const double* mask, std::size_t n);

namespace scalar {
void hash_row(std::uint64_t prefix, std::int64_t first, std::size_t count, std::uint64_t* out);
void spmm4(const CsrView& a, std::size_t row_begin, std::size_t row_end, const double* x, double* y);
double masked_sumsq(const double* x, const double* mask, std::size_t n);
}  // namespace scalar

namespace avx2 {
void hash_row(std::uint64_t prefix, std::int64_t first, std::size_t count, std::uint64_t* out);
void spmm4(const CsrView& a, std::size_t row_begin, std::size_t row_end, const double* x, double* y);
double masked_sumsq(const double* x, const double* mask, std::size_t n);
}  // namespace avx2

}  // namespace qperc::simd
