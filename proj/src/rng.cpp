#include "tieinfer/rng.hpp"

#include <cmath>

namespace tieinfer {

std::uint64_t Rng::poisson(double mean) {
  if (!(mean > 0.0)) return 0;
  std::uint64_t total = 0;
  // Split large means into chunks of at most 20 so exp(-chunk) stays well
  // above the double underflow range.
  while (mean > 0.0) {
    const double chunk = mean > 20.0 ? 20.0 : mean;
    mean -= chunk;
    const double limit = std::exp(-chunk);
    double prod = uniform();
    std::uint64_t k = 0;
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    total += k;
  }
  return total;
}

std::uint64_t Rng::geometric_at_least_one(double mean) {
  if (mean <= 1.0) return 1;
  const double p = 1.0 / mean;
  const double u = 1.0 - uniform();  // (0, 1]
  return 1 + static_cast<std::uint64_t>(std::floor(std::log(u) / std::log1p(-p)));
}

double Rng::exponential(double mean) {
  const double u = 1.0 - uniform();
  return -mean * std::log(u);
}

}  // namespace tieinfer
