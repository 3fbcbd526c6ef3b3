#ifndef LAGFLOW_IO_RNG_HPP
#define LAGFLOW_IO_RNG_HPP

#include <cstdint>
#include <vector>

#include "lagflow/core/errors.hpp"

namespace lagflow {

/// SplitMix64 finaliser of z + golden gamma.
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Counter-based draw n in (0, 1): ((splitmix64(seed + n * gamma) >> 11) + 0.5) * 2^-53.
inline double uniform_open01(std::uint64_t seed, std::uint64_t n) {
  const std::uint64_t bits = splitmix64(seed + n * 0x9E3779B97F4A7C15ull) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// tau_n = sigma_n T / sum(sigma), sigma_n = uniform_open01(seed, n), n = 0..N-1.
inline std::vector<double> random_step_sequence(std::size_t N, double T, std::uint64_t seed) {
  if (N < 1) throw LayoutError("random_step_sequence: need N >= 1");
  if (!(T > 0.0)) throw LayoutError("random_step_sequence: T must be positive");
  std::vector<double> s(N);
  double sum = 0.0;
  for (std::size_t n = 0; n < N; ++n) sum += (s[n] = uniform_open01(seed, n));
  for (double& v : s) v *= T / sum;
  return s;
}

} // namespace lagflow

#endif
