#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>

namespace eitmc {

/// One independent stream per chain. The full state, including the cached
/// second normal deviate, round-trips through operator<< / operator>>.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 1, std::uint64_t stream = 0);

  double uniform();  // [0, 1)
  double normal();   // N(0, 1)
  std::size_t index(std::size_t n);  // uniform on {0, ..., n-1}

  friend std::ostream& operator<<(std::ostream& os, const Rng& r);
  friend std::istream& operator>>(std::istream& is, Rng& r);
  friend bool operator==(const Rng& a, const Rng& b);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> uniform_;
};

}  // namespace eitmc
