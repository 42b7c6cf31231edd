#include "diffmia/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace diffmia {

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

uint64_t mix_seed(std::initializer_list<uint64_t> parts) {
  uint64_t h = 0x8C74B2A3F1E65D09ULL;
  for (uint64_t p : parts) {
    h = splitmix64(h ^ p);
  }
  return h;
}

double Rng::uniform() {
  // 53 high bits -> [0, 1).
  return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
  const uint64_t range = static_cast<uint64_t>(hi) - static_cast<uint64_t>(lo) + 1;
  const uint64_t limit = std::numeric_limits<uint64_t>::max() - std::numeric_limits<uint64_t>::max() % range;
  uint64_t v;
  do {
    v = eng_();
  } while (v >= limit);
  return static_cast<int>(static_cast<int64_t>(lo) + static_cast<int64_t>(v % range));
}

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller; u1 in (0, 1] avoids log(0).
  const double u1 = static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::vector<double> Rng::gaussian_vector(int n) {
  std::vector<double> out(static_cast<size_t>(n));
  for (auto& v : out) v = gaussian();
  return out;
}

}  // namespace diffmia
