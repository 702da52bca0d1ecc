#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace spg {

// Deterministic scalar draws on top of std::mt19937_64. The engine's output
// sequence is fully specified by the standard; the std distributions are not,
// so the mappings are done by hand to keep seeded fixtures identical across
// platforms and standard libraries.

inline double unit_uniform(std::mt19937_64& gen) {
  // 53 random mantissa bits -> [0, 1)
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * unit_uniform(gen);
}

inline double symmetric_uniform(std::mt19937_64& gen) {
  return 2.0 * unit_uniform(gen) - 1.0;
}

inline double standard_normal(std::mt19937_64& gen) {
  // Box-Muller; discards the second variate.
  double u1 = unit_uniform(gen);
  double u2 = unit_uniform(gen);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline std::uint32_t uniform_index(std::mt19937_64& gen, std::uint32_t bound) {
  return static_cast<std::uint32_t>(gen() % bound);
}

}  // namespace spg
