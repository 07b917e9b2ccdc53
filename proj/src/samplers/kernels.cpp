#include <cmath>
#include <limits>
#include <utility>

#include "eitmc/errors.hpp"
#include "eitmc/samplers.hpp"

namespace eitmc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// A uniform deviate is consumed only when the log ratio is negative, so two
// kernels that compute the same ratios consume the same random stream.
bool metropolis_accept(double log_ratio, Rng& rng) {
  if (log_ratio >= 0.0) return true;
  if (std::isnan(log_ratio)) return false;
  return std::log(rng.uniform()) < log_ratio;
}

void require(const std::optional<Evaluation>& e, const char* what) {
  if (!e) throw UnsupportedOperation(std::string("chain state is missing its ") + what + " evaluation");
}

}  // namespace

bool single_site_update(ChainState& s, const Target& target, std::size_t i, const SiteProposal& q, Rng& rng,
                        Tally& tally) {
  require(s.own, "target");
  const double v = s.x[i] + q.draw(rng);
  const double rp = target.site_log_prior_ratio(s.x, i, v);
  if (rp == kNegInf || std::isnan(rp)) {
    tally.add(false);
    return false;
  }
  const double old = s.x[i];
  s.x[i] = v;
  Evaluation e = target.likelihood(s.x);
  s.counters += e.receipt;
  if (metropolis_accept(rp + (e.log_likelihood - s.own->log_likelihood), rng)) {
    s.log_prior += rp;
    s.own = std::move(e);
    s.other.reset();
    tally.add(true);
    return true;
  }
  s.x[i] = old;
  tally.add(false);
  return false;
}

void single_site_sweep(ChainState& s, const Target& target, const SiteProposal& q, ScanOrder order, Rng& rng,
                       Tally& tally) {
  const std::size_t m = s.x.size();
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = order == ScanOrder::deterministic ? k : rng.index(m);
    single_site_update(s, target, i, q, rng, tally);
  }
}

bool da_update(ChainState& s, const Target& exact, const Target& surrogate, std::size_t i, const SiteProposal& q,
               Rng& rng, Tally& stage1, Tally& stage2) {
  require(s.own, "exact");
  require(s.other, "surrogate");
  const double v = s.x[i] + q.draw(rng);
  const double rp = exact.site_log_prior_ratio(s.x, i, v);
  if (rp == kNegInf || std::isnan(rp)) {
    stage1.add(false);
    return false;
  }
  const double old = s.x[i];
  s.x[i] = v;
  Evaluation es = surrogate.likelihood(s.x);
  s.counters += es.receipt;
  const double ds = es.log_likelihood - s.other->log_likelihood;
  if (!metropolis_accept(rp + ds, rng)) {
    s.x[i] = old;
    stage1.add(false);
    return false;
  }
  stage1.add(true);
  Evaluation ef = exact.likelihood(s.x);
  s.counters += ef.receipt;
  const double df = ef.log_likelihood - s.own->log_likelihood;
  if (metropolis_accept(df - ds, rng)) {
    s.log_prior += rp;
    s.own = std::move(ef);
    s.other = std::move(es);
    stage2.add(true);
    return true;
  }
  s.x[i] = old;
  stage2.add(false);
  return false;
}

void da_sweep(ChainState& s, const Target& exact, const Target& surrogate, const SiteProposal& q, ScanOrder order,
              Rng& rng, Tally& stage1, Tally& stage2) {
  const std::size_t m = s.x.size();
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = order == ScanOrder::deterministic ? k : rng.index(m);
    da_update(s, exact, surrogate, i, q, rng, stage1, stage2);
  }
}

MsdaOutcome msda_step(ChainState& s, const Target& exact, const Target& surrogate, std::size_t n_step,
                      const SiteProposal& q, Rng& rng, Tally& inner, Tally& outer) {
  require(s.own, "exact");
  require(s.other, "surrogate");
  if (n_step == 0) throw DomainError("n_step must be at least 1");
  ChainState y;
  y.x = s.x;
  y.log_prior = s.log_prior;
  y.own = s.other;
  const std::size_t m = s.x.size();
  for (std::size_t k = 0; k < n_step; ++k) single_site_update(y, surrogate, rng.index(m), q, rng, inner);
  s.counters += y.counters;

  MsdaOutcome out;
  if (y.x == s.x) return out;
  out.moved = true;
  out.fine_evaluated = true;
  Evaluation f = exact.likelihood(y.x);
  s.counters += f.receipt;
  const double log_ratio =
      (f.log_likelihood - s.own->log_likelihood) - (y.own->log_likelihood - s.other->log_likelihood);
  out.accepted = metropolis_accept(log_ratio, rng);
  outer.add(out.accepted);
  if (out.accepted) {
    s.x = std::move(y.x);
    s.log_prior = y.log_prior;
    s.own = std::move(f);
    s.other = std::move(y.own);
  }
  return out;
}

AdaptiveSurrogate::AdaptiveSurrogate(const Posterior& base, const ChainState& chain, std::size_t refactor_every)
    : bias_(), surrogate_(base), every_(refactor_every) {
  if (base.spec().fidelity != PosteriorFidelity::coarse_adaptive)
    throw ConfigError("adaptive surrogate needs a coarse_adaptive posterior");
  if (every_ == 0) throw ConfigError("bias_refactor_every must be at least 1");
  require(chain.own, "exact");
  require(chain.other, "coarse");
  const auto& f = chain.own->eta;
  const auto& c = chain.other->eta;
  if (f.size() != c.size() || f.empty()) throw DimensionError("adaptive surrogate needs exact and coarse voltages");
  std::vector<double> r(f.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = f[i] - c[i];
  bias_ = BiasState::initial(r);
  surrogate_ = base.with_bias(bias_);
}

AdaptiveSurrogate::AdaptiveSurrogate(const Posterior& base, BiasState bias, BiasState frozen,
                                     std::size_t steps_since_refactor, std::size_t refactor_every)
    : bias_(std::move(bias)), surrogate_(base.with_bias(frozen)), every_(refactor_every),
      since_refactor_(steps_since_refactor) {
  if (every_ == 0) throw ConfigError("bias_refactor_every must be at least 1");
}

void AdaptiveSurrogate::begin_step() {
  if (since_refactor_ >= every_ && surrogate_.bias().k != bias_.k) {
    surrogate_ = surrogate_.with_bias(bias_);
    since_refactor_ = 0;
  }
  ++since_refactor_;
}

void AdaptiveSurrogate::observe(std::span<const double> residual) { bias_ = update_bias(bias_, residual); }

MsdaOutcome amsda_step(ChainState& s, const Target& exact, AdaptiveSurrogate& adaptive, std::size_t n_step,
                       const SiteProposal& q, Rng& rng, Tally& inner, Tally& outer) {
  require(s.own, "exact");
  require(s.other, "coarse");
  adaptive.begin_step();
  s.other->log_likelihood = adaptive.surrogate().rescore(*s.other);
  const MsdaOutcome out = msda_step(s, exact, adaptive.surrogate(), n_step, q, rng, inner, outer);
  if (out.fine_evaluated) {
    const auto& f = s.own->eta;
    const auto& c = s.other->eta;
    std::vector<double> r(f.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = f[i] - c[i];
    adaptive.observe(r);
  }
  return out;
}

bool metropolis_coupled_step(CoupledState& s, const Target& exact, const Target& surrogate, const SiteProposal& q,
                             std::size_t ratio, ScanOrder order, Rng& exact_rng, Rng& approx_rng,
                             CouplingTallies& tallies) {
  for (std::size_t k = 0; k < ratio; ++k) single_site_sweep(s.approx, surrogate, q, order, approx_rng, tallies.approx);
  single_site_sweep(s.exact, exact, q, order, exact_rng, tallies.exact);

  if (s.exact.x == s.approx.x) {
    tallies.swap.add(true);
    return true;
  }
  if (!s.approx.other) {
    s.approx.other = exact.likelihood(s.approx.x);
    s.approx.counters += s.approx.other->receipt;
  }
  if (!s.exact.other) {
    s.exact.other = surrogate.likelihood(s.exact.x);
    s.exact.counters += s.exact.other->receipt;
  }
  const double log_ratio = (s.approx.other->log_likelihood + s.exact.other->log_likelihood) -
                           (s.exact.own->log_likelihood + s.approx.own->log_likelihood);
  const bool ok = metropolis_accept(log_ratio, exact_rng);
  tallies.swap.add(ok);
  if (ok) {
    std::swap(s.exact.x, s.approx.x);
    std::swap(s.exact.log_prior, s.approx.log_prior);
    std::swap(s.exact.own, s.approx.other);
    std::swap(s.exact.other, s.approx.own);
  }
  return ok;
}

}  // namespace eitmc
