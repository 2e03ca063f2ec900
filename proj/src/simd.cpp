#include "qperc/simd.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace qperc::simd {

namespace {

Isa detect() {
  if (const char* env = std::getenv("QPERC_SIMD"); env && std::string(env) == "scalar") return Isa::scalar;
  if (isa_available(Isa::avx2)) return Isa::avx2;
  return Isa::scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(QPERC_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

ScopedIsa::ScopedIsa(Isa isa) : previous_(active_isa()) {
  current().store(isa_available(isa) ? isa : Isa::scalar);
}

ScopedIsa::~ScopedIsa() { current().store(previous_); }

#if defined(QPERC_HAVE_AVX2)
#define QPERC_DISPATCH(fn, ...)                                  \
  if (active_isa() == Isa::avx2) return avx2::fn(__VA_ARGS__); \
  return scalar::fn(__VA_ARGS__)
#else
#define QPERC_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

void hash_row(std::uint64_t prefix, std::int64_t first, std::size_t count, std::uint64_t* out) {
  QPERC_DISPATCH(hash_row, prefix, first, count, out);
}

void spmm4(const CsrView& a, std::size_t row_begin, std::size_t row_end, const double* x, double* y) {
  QPERC_DISPATCH(spmm4, a, row_begin, row_end, x, y);
}

double masked_sumsq(const double* x, const double* mask, std::size_t n) {
  QPERC_DISPATCH(masked_sumsq, x, mask, n);
}

#if !defined(QPERC_HAVE_AVX2)
namespace avx2 {
void hash_row(std::uint64_t prefix, std::int64_t first, std::size_t count, std::uint64_t* out) {
  scalar::hash_row(prefix, first, count, out);
}
void spmm4(const CsrView& a, std::size_t row_begin, std::size_t row_end, const double* x, double* y) {
  scalar::spmm4(a, row_begin, row_end, x, y);
}
double masked_sumsq(const double* x, const double* mask, std::size_t n) {
  return scalar::masked_sumsq(x, mask, n);
}
}  // namespace avx2
#endif

}  // namespace qperc::simd
