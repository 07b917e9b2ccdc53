#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eitmc/samplers.hpp"
#include "eitmc/trace.hpp"

namespace eitmc {

enum class KernelKind { ssm, rwm, coupling, da, msda, amsda };

std::string_view kernel_name(KernelKind k);
KernelKind parse_kernel(std::string_view name);

struct RunOptions {
  KernelKind kernel = KernelKind::ssm;
  ScanOrder order = ScanOrder::random;
  double sigma_z = 0.3;       // single-site proposal sd (initial value when tuning)
  double alpha = 1.0;         // random-walk covariance scale (initial value when tuning)
  double quantum = 0.0;       // round proposal increments to this lattice when positive
  std::vector<double> rwm_covariance;  // empty: identity
  std::size_t n_step = 100;
  std::size_t coupling_ratio = 3;
  std::size_t bias_refactor_every = 1;

  bool tune = true;
  double target_rate = 0.5;
  std::size_t tune_window = 0;  // proposals per window; 0 picks m
  double tune_gain = 1.0;

  double budget = 0.0;   // exact-model evaluations during sampling, in units of m
  double burn_in = 0.0;  // exact-model evaluations before sampling, in units of m
  std::size_t thin = 10; // one record per thin * m nominal exact evaluations
  std::uint64_t seed = 1;
  std::uint64_t stall_limit = 100000;  // steps without an exact evaluation before giving up

  std::vector<std::size_t> tracked;  // recorded columns of observe(x); empty records all
  /// Maps the sampled parameter to the recorded quantity (identity when unset).
  std::function<std::vector<double>(std::span<const double>)> observe;
};

struct RunTargets {
  const Target* exact = nullptr;
  const Target* surrogate = nullptr;     // da, msda, coupling
  const Posterior* adaptive = nullptr;   // amsda: coarse_adaptive posterior
};

/// Runs one kernel through burn-in and sampling to an exact-evaluation
/// budget, recording a trace thinned by iteration count. The whole state, including the
/// trace so far, serializes to a checkpoint from which a resumed run
/// continues exactly as if uninterrupted.
class Driver {
 public:
  Driver(RunOptions options, RunTargets targets, std::vector<double> x0);
  static Driver resume(RunOptions options, RunTargets targets, const std::string& checkpoint);

  /// Runs at most max_steps further steps. Returns true once the budget is spent.
  bool advance(std::uint64_t max_steps = std::numeric_limits<std::uint64_t>::max());
  bool finished() const { return finished_; }

  const Trace& trace() const { return trace_; }
  /// The exact-target chain (for coupling, the chain whose marginal is the exact posterior).
  const ChainState& chain() const { return coupled_ ? coupled_->exact : main_; }
  const CoupledState* coupled() const { return coupled_ ? &*coupled_ : nullptr; }
  const AdaptiveSurrogate* adaptive() const { return adaptive_ ? &*adaptive_ : nullptr; }
  const ScaleTuner& tuner() const { return tuner_; }
  /// Exact/approximate/coarse evaluations over all chains since construction.
  Counters counters() const;
  /// Tallies over the sampling phase only.
  Tally stage1() const;
  Tally stage2() const;
  std::uint64_t steps() const { return steps_; }
  bool sampling() const { return sampling_; }
  std::size_t dimension() const { return m_; }

  std::string checkpoint() const;

 private:
  Driver(RunOptions options, RunTargets targets);

  void step();
  void begin_sampling();
  void record();
  double exact_since_base() const;
  // Exact evaluations one iteration costs when nothing is skipped.
  std::uint64_t nominal_cost() const;

  RunOptions opt_;
  RunTargets tg_;
  std::size_t m_ = 0;
  Rng rng_, rng2_;
  ScaleTuner tuner_;
  std::optional<RwmProposal> rwm_;
  ChainState main_;
  std::optional<CoupledState> coupled_;
  std::optional<AdaptiveSurrogate> adaptive_;
  Tally t1_, t2_, t3_;
  Tally base1_, base2_;
  Counters base_;
  bool sampling_ = false;
  bool finished_ = false;
  std::uint64_t steps_ = 0;
  std::uint64_t sampled_steps_ = 0;
  std::uint64_t next_record_ = 1;
  std::uint64_t stall_fine_ = 0, stall_steps_ = 0;
  Trace trace_;
};

}  // namespace eitmc
