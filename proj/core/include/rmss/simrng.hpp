#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rmss {

// Deterministic random source for the simulation lab. Built on
// std::mt19937_64, whose output sequence is fixed by the standard, with
// explicit output-to-variate transforms so that a stream is reproducible
// bit-for-bit on any conforming platform (the distribution adapters in
// <random> are implementation-defined and are deliberately not used).
//
// Transforms:
//   uniform():  (raw >> 11) * 2^-53, one raw output per draw, range [0, 1)
//   normal():   Box-Muller, exactly two raw outputs per draw
//   integer(b): raw % b, one raw output per draw
class SimRng {
 public:
  SimRng() : SimRng(0) {}
  explicit SimRng(std::uint64_t seed) : eng_(seed) {}

  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() {
    // u1 is bumped away from zero so the log is finite.
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  std::uint64_t integer(std::uint64_t bound) { return eng_() % bound; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace rmss
