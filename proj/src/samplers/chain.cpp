#include <cmath>
#include <limits>

#include "eitmc/errors.hpp"
#include "eitmc/samplers.hpp"

namespace eitmc {

double Tally::rate() const {
  if (proposed == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(accepted) / static_cast<double>(proposed);
}

ChainState make_chain(std::vector<double> x, const Target& target, const Target* other) {
  if (x.size() != target.dimension())
    throw DimensionError("initial state has " + std::to_string(x.size()) + " values, target needs " +
                         std::to_string(target.dimension()));
  ChainState s;
  s.x = std::move(x);
  s.log_prior = target.log_prior(s.x);
  if (s.log_prior == -std::numeric_limits<double>::infinity())
    throw DomainError("initial state lies outside the prior support");
  s.own = target.likelihood(s.x);
  s.counters += s.own->receipt;
  if (other != nullptr) {
    s.other = other->likelihood(s.x);
    s.counters += s.other->receipt;
  }
  return s;
}

double SiteProposal::draw(Rng& rng) const {
  const double z = sd * rng.normal();
  return quantum > 0.0 ? quantum * std::round(z / quantum) : z;
}

}  // namespace eitmc
