#include <cmath>
#include <limits>

#include "eitmc/errors.hpp"
#include "eitmc/experiment.hpp"
#include "eitmc/rng.hpp"

namespace eitmc {

namespace {

constexpr std::uint64_t kNoiseStream = 0x6e6f697365;  // distinct from chain streams

SyntheticData add_noise(const VoltageSet& eta, double sigma, std::uint64_t seed) {
  SyntheticData d;
  d.eta = eta;
  d.sigma = sigma;
  std::array<double, kData> y{};
  Rng rng(seed, kNoiseStream);
  for (std::size_t i = 0; i < kData; ++i) y[i] = eta.flat()[i] + (sigma > 0.0 ? sigma * rng.normal() : 0.0);
  d.y = VoltageSet(y);
  return d;
}

}  // namespace

SyntheticData generate_data(const ForwardModel& model, const ConductivityField& truth, double snr,
                            std::uint64_t seed) {
  if (!(snr > 0.0)) throw DomainError("signal to noise ratio must be positive");
  const VoltageSet eta = model.evaluate(truth, Fidelity::fine);
  const double peak = eta.max_abs();
  if (!(peak > 0.0)) throw DomainError("truth produces identically zero voltages");
  return add_noise(eta, std::isinf(snr) ? 0.0 : peak / snr, seed);
}

SyntheticData generate_data_sigma(const ForwardModel& model, const ConductivityField& truth, double sigma,
                                  std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("noise sd must be finite and non-negative");
  const VoltageSet eta = model.evaluate(truth, Fidelity::fine);
  if (!(eta.max_abs() > 0.0)) throw DomainError("truth produces identically zero voltages");
  return add_noise(eta, sigma, seed);
}

}  // namespace eitmc
