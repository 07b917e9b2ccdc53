#include <algorithm>
#include <cmath>
#include <limits>

#include "eitmc/errors.hpp"
#include "eitmc/experiment.hpp"

namespace eitmc {

std::size_t ProbabilityTable::index_of(std::span<const double> x) const {
  if (x.size() != dimension) throw DimensionError("state has the wrong dimension");
  std::size_t idx = 0, mult = 1;
  for (std::size_t i = 0; i < dimension; ++i) {
    const auto it = std::find(levels.begin(), levels.end(), x[i]);
    if (it == levels.end()) throw DomainError("state component " + std::to_string(i) + " is not a lattice level");
    idx += static_cast<std::size_t>(it - levels.begin()) * mult;
    mult *= levels.size();
  }
  return idx;
}

std::vector<double> ProbabilityTable::state(std::size_t index) const {
  std::vector<double> x(dimension);
  for (std::size_t i = 0; i < dimension; ++i) {
    x[i] = levels[index % levels.size()];
    index /= levels.size();
  }
  return x;
}

ProbabilityTable enumerate_posterior(const Posterior& posterior, const std::vector<double>& levels, bool reversed) {
  ProbabilityTable t;
  t.levels = levels;
  t.dimension = posterior.dimension();
  const double size = std::pow(static_cast<double>(levels.size()), static_cast<double>(t.dimension));
  if (levels.empty() || size > static_cast<double>(kMaxEnumeration))
    throw DomainError("state space has " + std::to_string(size) + " states; enumeration is limited to " +
                      std::to_string(kMaxEnumeration));
  const auto n = static_cast<std::size_t>(size);
  std::vector<double> logp(n);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t idx = reversed ? n - 1 - k : k;
    logp[idx] = posterior.evaluate(t.state(idx)).log_posterior;
    peak = std::max(peak, logp[idx]);
  }
  if (peak == -std::numeric_limits<double>::infinity()) throw DomainError("every state has zero posterior mass");
  t.p.assign(n, 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t idx = reversed ? n - 1 - k : k;
    t.p[idx] = std::exp(logp[idx] - peak);
    total += t.p[idx];
  }
  for (double& v : t.p) v /= total;
  return t;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DimensionError("distributions have different supports");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

std::vector<double> empirical_distribution(const ProbabilityTable& table,
                                           const std::vector<std::vector<double>>& samples) {
  if (samples.empty()) throw DomainError("no samples");
  std::vector<double> f(table.p.size(), 0.0);
  for (const auto& s : samples) f[table.index_of(s)] += 1.0;
  for (double& v : f) v /= static_cast<double>(samples.size());
  return f;
}

}  // namespace eitmc
