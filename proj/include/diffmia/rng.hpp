#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace diffmia {

// SplitMix64 finalizer; used to derive well-mixed stream seeds.
uint64_t splitmix64(uint64_t x);

// Order-sensitive combination of seed words into one stream seed.
// mix_seed({a, b}) != mix_seed({b, a}) in general.
uint64_t mix_seed(std::initializer_list<uint64_t> parts);

// Deterministic random stream. The generator (mt19937_64) and the
// gaussian transform (Box-Muller) are both fully specified, so sequences
// are bit-identical across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform();

  // Uniform integer in [lo, hi], inclusive, unbiased.
  int uniform_int(int lo, int hi);

  // Standard normal draw.
  double gaussian();

  std::vector<double> gaussian_vector(int n);

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace diffmia
