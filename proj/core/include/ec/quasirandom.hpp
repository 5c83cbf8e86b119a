#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>

namespace ec {

/// Radical-inverse Halton sequence over the first `kMaxDim` primes.
/// Point i (starting at 1) is deterministic, so sweeps are reproducible and
/// trivially splittable across workers.
class Halton {
 public:
  static constexpr std::size_t kMaxDim = 8;

  explicit Halton(std::size_t dim) : dim_(dim) {
    if (dim == 0 || dim > kMaxDim) throw std::invalid_argument("Halton: dimension out of range");
  }

  std::size_t dim() const { return dim_; }

  /// Writes coordinate j of point `index` for j < dim() into `out`.
  void point(std::uint64_t index, double* out) const {
    for (std::size_t j = 0; j < dim_; ++j) out[j] = radical_inverse(index, kPrimes[j]);
  }

  static double radical_inverse(std::uint64_t index, std::uint64_t base) {
    double inv_base = 1.0 / static_cast<double>(base);
    double f = inv_base;
    double result = 0.0;
    while (index > 0) {
      result += f * static_cast<double>(index % base);
      index /= base;
      f *= inv_base;
    }
    return result;
  }

 private:
  static constexpr std::array<std::uint64_t, kMaxDim> kPrimes{2, 3, 5, 7, 11, 13, 17, 19};
  std::size_t dim_;
};

}  // namespace ec
