#include <cstdlib>
#include <string_view>

#include "tieinfer/simd/kernels.hpp"

namespace tieinfer::simd {

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

namespace {

Isa detect() {
  if (const char* env = std::getenv("TIEINFER_SIMD")) {
    if (std::string_view(env) == "scalar") return Isa::Scalar;
  }
  return isa_supported(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

}  // namespace

Isa active_isa() {
  static const Isa isa = detect();
  return isa;
}

std::string_view isa_name(Isa isa) {
  return isa == Isa::Avx2 ? "avx2" : "scalar";
}

std::size_t union_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
  if (active_isa() == Isa::Avx2) return avx2::union_popcount(a, b, words);
  return scalar::union_popcount(a, b, words);
}

double dot(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size() < y.size() ? x.size() : y.size();
  if (active_isa() == Isa::Avx2) return avx2::dot(x.data(), y.data(), n);
  return scalar::dot(x.data(), y.data(), n);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size() < y.size() ? x.size() : y.size();
  if (active_isa() == Isa::Avx2) {
    avx2::axpy(alpha, x.data(), y.data(), n);
  } else {
    scalar::axpy(alpha, x.data(), y.data(), n);
  }
}

}  // namespace tieinfer::simd
