#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace testing_support {

// Reproducible uniform draws; the mapping from raw bits is fixed here so that
// results do not depend on the standard library's distribution code.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  int integer(int lo, int hi) { return lo + static_cast<int>(uniform() * (hi - lo + 1)); }

 private:
  std::mt19937_64 gen_;
};

inline double rel_err(double a, double b) {
  return std::fabs(a - b) / std::fmax(1.0, std::fmax(std::fabs(a), std::fabs(b)));
}

}  // namespace testing_support
