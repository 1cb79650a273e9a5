#pragma once

// Data-parallel inner loops with a scalar reference and an AVX2 variant.
//
// The public entry points dispatch once per process to the widest variant the
// CPU supports. Setting TIEINFER_SIMD=scalar in the environment pins the
// scalar path (used by the equivalence tests and for cross-machine diffs).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace tieinfer::simd {

enum class Isa { Scalar, Avx2 };

// ISA selected for this process.
Isa active_isa();
std::string_view isa_name(Isa isa);
// True if the running CPU can execute the given variant.
bool isa_supported(Isa isa);

// popcount(a | b) over `words` 64-bit words.
std::size_t union_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t words);

// sum_i x[i] * y[i]
double dot(std::span<const double> x, std::span<const double> y);

// y[i] += alpha * x[i]
void axpy(double alpha, std::span<const double> x, std::span<double> y);

namespace scalar {
std::size_t union_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t words);
double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

namespace avx2 {
std::size_t union_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t words);
double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2

}  // namespace tieinfer::simd
