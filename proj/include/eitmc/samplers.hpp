#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "eitmc/posterior.hpp"
#include "eitmc/rng.hpp"

namespace eitmc {

/// Simulator calls spent by a chain.
struct Counters {
  std::uint64_t fine = 0;
  std::uint64_t approx = 0;
  std::uint64_t coarse = 0;

  Counters& operator+=(const Receipt& r) {
    fine += r.fine;
    approx += r.approx;
    coarse += r.coarse;
    return *this;
  }
  Counters& operator+=(const Counters& c) {
    fine += c.fine;
    approx += c.approx;
    coarse += c.coarse;
    return *this;
  }
  friend bool operator==(const Counters&, const Counters&) = default;
};

struct Tally {
  std::uint64_t proposed = 0;
  std::uint64_t accepted = 0;

  void add(bool ok) {
    ++proposed;
    accepted += ok ? 1 : 0;
  }
  /// NaN when nothing was proposed.
  double rate() const;
  friend bool operator==(const Tally&, const Tally&) = default;
};

/// Current point of one chain. `own` is the likelihood under the target the
/// chain samples; `other` is an optional evaluation of the same point under a
/// second target (the surrogate for delayed acceptance, the exact target for
/// the approximate chain in coupling). Both are dropped whenever x moves
/// unless the move supplied them.
struct ChainState {
  std::vector<double> x;
  double log_prior = 0.0;
  std::optional<Evaluation> own;
  std::optional<Evaluation> other;
  Counters counters;
};

/// Evaluates `own` (and `other` when a second target is given) at x.
ChainState make_chain(std::vector<double> x, const Target& target, const Target* other = nullptr);

/// Gaussian increment with sd `sd`, optionally rounded to a multiple of `quantum`.
struct SiteProposal {
  double sd = 0.3;
  double quantum = 0.0;

  double draw(Rng& rng) const;
};

enum class ScanOrder { deterministic, random };

/// One single-site Metropolis update of site i. Out-of-support proposals are
/// rejected without running a simulator. Returns true on acceptance.
bool single_site_update(ChainState& s, const Target& target, std::size_t i, const SiteProposal& q, Rng& rng,
                        Tally& tally);

/// m single-site updates: sites 0..m-1 in order, or m uniformly drawn sites.
void single_site_sweep(ChainState& s, const Target& target, const SiteProposal& q, ScanOrder order, Rng& rng,
                       Tally& tally);

/// Two-stage delayed-acceptance update of site i. The first stage screens
/// with the surrogate; the exact target is evaluated only for proposals that
/// pass. Needs both caches of `s` (own = exact, other = surrogate).
bool da_update(ChainState& s, const Target& exact, const Target& surrogate, std::size_t i, const SiteProposal& q,
               Rng& rng, Tally& stage1, Tally& stage2);

void da_sweep(ChainState& s, const Target& exact, const Target& surrogate, const SiteProposal& q, ScanOrder order,
              Rng& rng, Tally& stage1, Tally& stage2);

struct MsdaOutcome {
  bool moved = false;      // the surrogate chain left x
  bool accepted = false;   // final state differs from the start
  bool fine_evaluated = false;
};

/// n_step random-site surrogate updates build a proposal that is then tested
/// once against the exact target. No exact evaluation is spent when the
/// surrogate chain returns to its starting point.
MsdaOutcome msda_step(ChainState& s, const Target& exact, const Target& surrogate, std::size_t n_step,
                      const SiteProposal& q, Rng& rng, Tally& inner, Tally& outer);

/// State of the adaptive coarse surrogate carried between outer steps.
class AdaptiveSurrogate {
 public:
  /// `base` must have fidelity coarse_adaptive. `chain` needs own (exact, with
  /// voltages) and other (coarse, with voltages) so the initial bias mean is
  /// the residual at the starting point.
  AdaptiveSurrogate(const Posterior& base, const ChainState& chain, std::size_t refactor_every = 1);
  AdaptiveSurrogate(const Posterior& base, BiasState bias, BiasState frozen, std::size_t steps_since_refactor,
                    std::size_t refactor_every);

  const BiasState& bias() const { return bias_; }
  const Posterior& surrogate() const { return surrogate_; }
  std::size_t steps_since_refactor() const { return since_refactor_; }
  std::size_t refactor_every() const { return every_; }

  /// Refreshes the frozen surrogate if due. Call once per outer step.
  void begin_step();
  void observe(std::span<const double> residual);

 private:
  BiasState bias_;
  Posterior surrogate_;
  std::size_t every_;
  std::size_t since_refactor_ = 0;
};

/// Adaptive multiple-step delayed acceptance: an MSDA step against the
/// current bias-corrected coarse posterior, followed by a bias update from
/// the residual at the resulting state whenever the exact model ran.
MsdaOutcome amsda_step(ChainState& s, const Target& exact, AdaptiveSurrogate& adaptive, std::size_t n_step,
                       const SiteProposal& q, Rng& rng, Tally& inner, Tally& outer);

/// Multivariate Gaussian random-walk proposal x' = x + sqrt(alpha) C z with C C^T = Sigma.
class RwmProposal {
 public:
  /// Identity covariance.
  RwmProposal(std::size_t dim, double alpha, double quantum = 0.0);
  /// Dense row-major covariance; must be symmetric positive semidefinite.
  RwmProposal(std::span<const double> covariance, std::size_t dim, double alpha, double quantum = 0.0);

  std::size_t dimension() const { return dim_; }
  double alpha() const { return alpha_; }
  void set_alpha(double a) { alpha_ = a; }
  void draw(Rng& rng, std::span<double> step) const;

 private:
  std::size_t dim_;
  double alpha_;
  double quantum_;
  std::vector<double> factor_;  // empty for identity
};

bool rwm_step(ChainState& s, const Target& target, const RwmProposal& q, Rng& rng, Tally& tally);

/// Sample covariance (or only its diagonal) of recorded states.
std::vector<double> sample_covariance(const std::vector<std::vector<double>>& samples, bool diagonal_only);

struct CoupledState {
  ChainState exact;   // own = exact target, other = surrogate
  ChainState approx;  // own = surrogate, other = exact target
};

struct CouplingTallies {
  Tally exact;
  Tally approx;
  Tally swap;
};

/// `ratio` surrogate sweeps and one exact sweep, then a proposed exchange of
/// the two states accepted with probability min(1, pi(x~) pi_s(x) / (pi(x) pi_s(x~))).
bool metropolis_coupled_step(CoupledState& s, const Target& exact, const Target& surrogate, const SiteProposal& q,
                             std::size_t ratio, ScanOrder order, Rng& exact_rng, Rng& approx_rng,
                             CouplingTallies& tallies);

/// Robbins-Monro adaptation of a log step scale toward a target acceptance
/// rate, one update per full window. Frozen adaptation leaves the scale fixed.
class ScaleTuner {
 public:
  ScaleTuner(double initial_scale, double target_rate, std::size_t window, double gain = 1.0);

  double scale() const;
  double target() const { return target_; }
  std::size_t windows_completed() const { return windows_; }
  double last_rate() const { return last_rate_; }
  bool active() const { return active_; }
  void freeze() { active_ = false; }

  /// Adds `proposed` proposals of which `accepted` were accepted.
  void observe(std::uint64_t proposed, std::uint64_t accepted);

  friend std::ostream& operator<<(std::ostream& os, const ScaleTuner& t);
  friend std::istream& operator>>(std::istream& is, ScaleTuner& t);

 private:
  double log_scale_;
  double target_;
  std::size_t window_;
  double gain_;
  bool active_ = true;
  std::size_t windows_ = 0;
  std::uint64_t proposed_ = 0, accepted_ = 0;
  double last_rate_ = 0.0;
};

/// Runs `windows` tuning windows of a kernel given as `step(scale) -> accepted`
/// and returns the final scale. `trajectory`, if given, receives the scale
/// after each window.
double tune_scale(const std::function<bool(double)>& step, double initial_scale, double target_rate,
                  std::size_t window, std::size_t windows, std::vector<double>* trajectory = nullptr);

}  // namespace eitmc
