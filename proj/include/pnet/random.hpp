#pragma once

#include <cstdint>
#include <random>

namespace pnet {

/// Seeded generator with portable output.
///
/// Bits come from std::mt19937_64, whose sequence is fixed by the C++ standard.
/// The standard distributions are implementation-defined, so the conversions to
/// uniform and normal variates are done here:
///   uniform  = (bits >> 11) * 2^-53, a double in [0, 1)
///   normal   = Box-Muller on two uniforms, both outputs used in turn
/// Any platform with IEEE doubles and a conforming libm produces the same datasets.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace pnet
