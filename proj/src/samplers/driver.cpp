#include "eitmc/driver.hpp"

#include <cmath>
#include <sstream>

#include "eitmc/errors.hpp"
#include "eitmc/io.hpp"

namespace eitmc {

namespace {

constexpr std::string_view kNames[] = {"ssm", "rwm", "coupling", "da", "msda", "amsda"};
constexpr const char* kMagic = "eitmc-checkpoint-1";

bool single_stage(KernelKind k) { return k == KernelKind::ssm || k == KernelKind::rwm; }

class Writer {
 public:
  void word(std::string_view s) { ss_ << s << '\n'; }
  void num(double v) { ss_ << io::format_double(v) << '\n'; }
  void count(std::uint64_t v) { ss_ << v << '\n'; }
  void tally(const Tally& t) {
    count(t.proposed);
    count(t.accepted);
  }
  void counters(const Counters& c) {
    count(c.fine);
    count(c.approx);
    count(c.coarse);
  }
  void eval(const std::optional<Evaluation>& e) {
    if (!e) {
      count(0);
      return;
    }
    count(1);
    num(e->log_likelihood);
    count(e->receipt.fine);
    count(e->receipt.approx);
    count(e->receipt.coarse);
    vec(e->eta);
  }
  void vec(const std::vector<double>& v) {
    count(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) ss_ << (i ? " " : "") << io::format_double(v[i]);
    ss_ << '\n';
  }
  void chain(const ChainState& c) {
    vec(c.x);
    num(c.log_prior);
    counters(c.counters);
    eval(c.own);
    eval(c.other);
  }
  void bias(const BiasState& b) {
    count(b.k);
    vec(b.b);
    vec(b.sigma);
  }
  std::ostringstream& raw() { return ss_; }
  std::string str() const { return ss_.str(); }

 private:
  std::ostringstream ss_;
};

class Reader {
 public:
  explicit Reader(const std::string& text) : ss_(text) {}
  std::string word() {
    std::string t;
    if (!(ss_ >> t)) throw ParseError("checkpoint: unexpected end of data");
    return t;
  }
  double num() { return io::parse_double(word(), "checkpoint"); }
  std::uint64_t count() {
    const std::string t = word();
    std::size_t pos = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(t, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != t.size() || t.empty()) throw ParseError("checkpoint: expected a count, got '" + t + "'");
    return v;
  }
  Tally tally() {
    Tally t;
    t.proposed = count();
    t.accepted = count();
    return t;
  }
  Counters counters() {
    Counters c;
    c.fine = count();
    c.approx = count();
    c.coarse = count();
    return c;
  }
  std::vector<double> vec() {
    std::vector<double> v(count());
    for (double& x : v) x = num();
    return v;
  }
  std::optional<Evaluation> eval() {
    if (count() == 0) return std::nullopt;
    Evaluation e;
    e.log_likelihood = num();
    e.receipt.fine = count();
    e.receipt.approx = count();
    e.receipt.coarse = count();
    e.eta = vec();
    return e;
  }
  ChainState chain() {
    ChainState c;
    c.x = vec();
    c.log_prior = num();
    c.counters = counters();
    c.own = eval();
    c.other = eval();
    return c;
  }
  BiasState bias() {
    BiasState b;
    b.k = count();
    b.b = vec();
    b.sigma = vec();
    if (b.sigma.size() != b.b.size() * b.b.size()) throw ParseError("checkpoint: bias covariance has the wrong size");
    return b;
  }
  void expect(std::string_view w) {
    const std::string t = word();
    if (t != w) throw ParseError("checkpoint: expected '" + std::string(w) + "', got '" + t + "'");
  }
  std::istringstream& raw() { return ss_; }

 private:
  std::istringstream ss_;
};

}  // namespace

std::string_view kernel_name(KernelKind k) { return kNames[static_cast<std::size_t>(k)]; }

KernelKind parse_kernel(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kNames); ++i)
    if (kNames[i] == name) return static_cast<KernelKind>(i);
  throw ConfigError("unknown kernel '" + std::string(name) + "' (expected ssm, rwm, coupling, da, msda or amsda)");
}

Driver::Driver(RunOptions options, RunTargets targets)
    : opt_(std::move(options)),
      tg_(targets),
      rng_(opt_.seed, 0),
      rng2_(opt_.seed, 1),
      tuner_(opt_.kernel == KernelKind::rwm ? std::sqrt(opt_.alpha) : opt_.sigma_z, opt_.target_rate,
             opt_.tune_window == 0 ? 1 : opt_.tune_window, opt_.tune_gain) {
  if (tg_.exact == nullptr) throw ConfigError("run needs an exact target");
  m_ = tg_.exact->dimension();
  if (opt_.tune_window == 0) tuner_ = ScaleTuner(tuner_.scale(), opt_.target_rate, m_, opt_.tune_gain);
  const bool needs_surrogate =
      opt_.kernel == KernelKind::da || opt_.kernel == KernelKind::msda || opt_.kernel == KernelKind::coupling;
  if (needs_surrogate && tg_.surrogate == nullptr)
    throw ConfigError(std::string(kernel_name(opt_.kernel)) + " needs a surrogate target");
  if (opt_.kernel == KernelKind::amsda && tg_.adaptive == nullptr)
    throw ConfigError("amsda needs a coarse_adaptive posterior");
  if (opt_.budget < 0 || opt_.burn_in < 0) throw ConfigError("budget and burn-in must be non-negative");
  if (opt_.thin == 0) throw ConfigError("thin must be positive");
  if (opt_.n_step == 0) throw ConfigError("n_step must be positive");
  if (opt_.coupling_ratio == 0) throw ConfigError("coupling ratio must be positive");
  if (!(opt_.sigma_z > 0)) throw ConfigError("sigma_z must be positive");
  if (!opt_.observe) opt_.observe = [](std::span<const double> x) { return std::vector<double>(x.begin(), x.end()); };
  if (opt_.kernel == KernelKind::rwm) {
    rwm_ = opt_.rwm_covariance.empty() ? RwmProposal(m_, opt_.alpha, opt_.quantum)
                                       : RwmProposal(opt_.rwm_covariance, m_, opt_.alpha, opt_.quantum);
  }
  if (!opt_.tune) tuner_.freeze();
}

Driver::Driver(RunOptions options, RunTargets targets, std::vector<double> x0)
    : Driver(std::move(options), targets) {
  switch (opt_.kernel) {
    case KernelKind::ssm:
    case KernelKind::rwm:
      main_ = make_chain(std::move(x0), *tg_.exact);
      break;
    case KernelKind::da:
    case KernelKind::msda:
      main_ = make_chain(std::move(x0), *tg_.exact, tg_.surrogate);
      break;
    case KernelKind::amsda:
      main_ = make_chain(std::move(x0), *tg_.exact, tg_.adaptive);
      adaptive_.emplace(*tg_.adaptive, main_, opt_.bias_refactor_every);
      break;
    case KernelKind::coupling: {
      CoupledState c{make_chain(x0, *tg_.exact), make_chain(x0, *tg_.surrogate)};
      coupled_ = std::move(c);
      break;
    }
  }
  const std::size_t width = opt_.observe(chain().x).size();
  if (opt_.tracked.empty()) {
    for (std::size_t i = 0; i < width; ++i) trace_.pixels.push_back(i);
  } else {
    for (std::size_t p : opt_.tracked)
      if (p >= width) throw ConfigError("tracked pixel " + std::to_string(p) + " is out of range");
    trace_.pixels = opt_.tracked;
  }
  stall_fine_ = counters().fine;
}

Counters Driver::counters() const {
  if (coupled_) {
    Counters c = coupled_->exact.counters;
    c += coupled_->approx.counters;
    return c;
  }
  return main_.counters;
}

Tally Driver::stage1() const { return {t1_.proposed - base1_.proposed, t1_.accepted - base1_.accepted}; }

Tally Driver::stage2() const { return {t2_.proposed - base2_.proposed, t2_.accepted - base2_.accepted}; }

double Driver::exact_since_base() const { return static_cast<double>(counters().fine - base_.fine); }

void Driver::step() {
  const Tally before = t1_;
  const SiteProposal q{tuner_.scale(), opt_.quantum};
  switch (opt_.kernel) {
    case KernelKind::ssm:
      single_site_sweep(main_, *tg_.exact, q, opt_.order, rng_, t1_);
      break;
    case KernelKind::rwm:
      rwm_->set_alpha(tuner_.scale() * tuner_.scale());
      rwm_step(main_, *tg_.exact, *rwm_, rng_, t1_);
      break;
    case KernelKind::da:
      da_sweep(main_, *tg_.exact, *tg_.surrogate, q, opt_.order, rng_, t1_, t2_);
      break;
    case KernelKind::msda:
      msda_step(main_, *tg_.exact, *tg_.surrogate, opt_.n_step, q, rng_, t1_, t2_);
      break;
    case KernelKind::amsda:
      amsda_step(main_, *tg_.exact, *adaptive_, opt_.n_step, q, rng_, t1_, t2_);
      break;
    case KernelKind::coupling: {
      CouplingTallies ct{t1_, t3_, t2_};
      metropolis_coupled_step(*coupled_, *tg_.exact, *tg_.surrogate, q, opt_.coupling_ratio, opt_.order, rng_, rng2_,
                              ct);
      t1_ = ct.exact;
      t3_ = ct.approx;
      t2_ = ct.swap;
      break;
    }
  }
  tuner_.observe(t1_.proposed - before.proposed, t1_.accepted - before.accepted);
}

std::uint64_t Driver::nominal_cost() const {
  switch (opt_.kernel) {
    case KernelKind::ssm:
    case KernelKind::da:
    case KernelKind::coupling:
      return m_;
    case KernelKind::rwm:
    case KernelKind::msda:
    case KernelKind::amsda:
      return 1;
  }
  return 1;
}

void Driver::record() {
  TraceRecord r;
  r.index = trace_.records.size();
  r.cost = counters();
  r.rate_stage1 = stage1().rate();
  r.rate_stage2 = single_stage(opt_.kernel) ? std::nan("") : stage2().rate();
  const auto obs = opt_.observe(chain().x);
  r.values.reserve(trace_.pixels.size());
  for (std::size_t p : trace_.pixels) r.values.push_back(obs[p]);
  trace_.records.push_back(std::move(r));
}

void Driver::begin_sampling() {
  sampling_ = true;
  tuner_.freeze();
  base_ = counters();
  base1_ = t1_;
  base2_ = t2_;
  record();
}

bool Driver::advance(std::uint64_t max_steps) {
  const double m = static_cast<double>(m_);
  const double budget = opt_.budget * m;
  // Records are spaced by iteration count, never by realized cost: a kernel
  // whose cost depends on the state would otherwise be sampled only right
  // after its expensive moves.
  const std::uint64_t per_record = static_cast<std::uint64_t>(opt_.thin) * m_;
  const std::uint64_t unit = nominal_cost();
  std::uint64_t done = 0;
  while (!finished_) {
    if (!sampling_ && static_cast<double>(counters().fine) >= opt_.burn_in * m) begin_sampling();
    if (sampling_ && exact_since_base() >= budget) {
      finished_ = true;
      break;
    }
    if (done >= max_steps) break;
    step();
    ++steps_;
    ++done;
    const std::uint64_t fine = counters().fine;
    if (fine == stall_fine_) {
      if (++stall_steps_ > opt_.stall_limit)
        throw NumericalError("no exact-model evaluation in " + std::to_string(opt_.stall_limit) +
                             " consecutive steps; the proposal scale is probably far too large or too small");
    } else {
      stall_fine_ = fine;
      stall_steps_ = 0;
    }
    if (sampling_) {
      ++sampled_steps_;
      while (sampled_steps_ * unit >= next_record_ * per_record) {
        record();
        ++next_record_;
      }
    }
  }
  return finished_;
}

std::string Driver::checkpoint() const {
  Writer w;
  w.word(kMagic);
  w.word(kernel_name(opt_.kernel));
  w.count(m_);
  w.count(steps_);
  w.count(sampled_steps_);
  w.count(sampling_ ? 1 : 0);
  w.count(finished_ ? 1 : 0);
  w.count(next_record_);
  w.count(stall_fine_);
  w.count(stall_steps_);
  w.counters(base_);
  w.tally(t1_);
  w.tally(t2_);
  w.tally(t3_);
  w.tally(base1_);
  w.tally(base2_);
  w.raw() << tuner_ << '\n';
  w.raw() << rng_ << '\n' << rng2_ << '\n';
  if (coupled_) {
    w.chain(coupled_->exact);
    w.chain(coupled_->approx);
  } else {
    w.chain(main_);
  }
  if (adaptive_) {
    w.count(adaptive_->steps_since_refactor());
    w.bias(adaptive_->bias());
    w.bias(adaptive_->surrogate().bias());
  }
  const auto rows = io::lines(trace_.to_csv());
  w.count(rows.size());
  for (const auto& r : rows) w.word(r);
  w.word("end");
  return w.str();
}

Driver Driver::resume(RunOptions options, RunTargets targets, const std::string& text) {
  Driver d(std::move(options), targets);
  Reader r(text);
  r.expect(kMagic);
  const std::string kernel = r.word();
  if (kernel != kernel_name(d.opt_.kernel))
    throw ConfigError("checkpoint was written by kernel '" + kernel + "', config asks for '" +
                      std::string(kernel_name(d.opt_.kernel)) + "'");
  if (r.count() != d.m_) throw ConfigError("checkpoint dimension does not match the problem");
  d.steps_ = r.count();
  d.sampled_steps_ = r.count();
  d.sampling_ = r.count() != 0;
  d.finished_ = r.count() != 0;
  d.next_record_ = r.count();
  d.stall_fine_ = r.count();
  d.stall_steps_ = r.count();
  d.base_ = r.counters();
  d.t1_ = r.tally();
  d.t2_ = r.tally();
  d.t3_ = r.tally();
  d.base1_ = r.tally();
  d.base2_ = r.tally();
  if (!(r.raw() >> d.tuner_)) throw ParseError("checkpoint: bad tuner state");
  if (!(r.raw() >> d.rng_ >> d.rng2_)) throw ParseError("checkpoint: bad random number generator state");
  if (d.opt_.kernel == KernelKind::coupling) {
    ChainState a = r.chain();
    ChainState b = r.chain();
    d.coupled_ = CoupledState{std::move(a), std::move(b)};
  } else {
    d.main_ = r.chain();
  }
  if (d.main_.x.size() != d.m_ && !d.coupled_) throw ConfigError("checkpoint state has the wrong dimension");
  if (d.opt_.kernel == KernelKind::amsda) {
    const std::size_t since = r.count();
    BiasState bias = r.bias();
    BiasState frozen = r.bias();
    d.adaptive_.emplace(*d.tg_.adaptive, std::move(bias), std::move(frozen), since, d.opt_.bias_refactor_every);
  }
  const std::size_t rows = r.count();
  std::string csv;
  for (std::size_t i = 0; i < rows; ++i) csv += r.word() + "\n";
  d.trace_ = Trace::parse_csv(csv, "checkpoint trace");
  r.expect("end");
  return d;
}

}  // namespace eitmc
