#include "eitmc/rng.hpp"

#include <istream>
#include <ostream>

namespace eitmc {

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : uniform_(0.0, 1.0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  engine_.seed(seq);
}

double Rng::uniform() { return uniform_(engine_); }

double Rng::normal() { return normal_(engine_); }

std::size_t Rng::index(std::size_t n) {
  std::uniform_int_distribution<std::size_t> d(0, n - 1);
  return d(engine_);
}

std::ostream& operator<<(std::ostream& os, const Rng& r) {
  return os << r.engine_ << ' ' << r.normal_ << ' ' << r.uniform_;
}

std::istream& operator>>(std::istream& is, Rng& r) {
  return is >> r.engine_ >> r.normal_ >> r.uniform_;
}

bool operator==(const Rng& a, const Rng& b) {
  return a.engine_ == b.engine_ && a.normal_ == b.normal_ && a.uniform_ == b.uniform_;
}

}  // namespace eitmc
