#include "eitmc/posterior.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "eitmc/errors.hpp"
#include "eitmc/io.hpp"
#include "eitmc/simd.hpp"

namespace eitmc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw DimensionError(std::string(what) + ": length " + std::to_string(a) + " vs " + std::to_string(b));
}

}  // namespace

NoiseModel::NoiseModel(double s) : sigma(s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("noise sd must be positive and finite");
}

double log_likelihood(std::span<const double> y, std::span<const double> eta, const NoiseModel& noise) {
  check_same(y.size(), eta.size(), "log_likelihood");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - eta[i];
    s += r * r;
  }
  return -0.5 * s / (noise.sigma * noise.sigma);
}

BiasState BiasState::zero(std::size_t n) {
  BiasState s;
  s.b.assign(n, 0.0);
  s.sigma.assign(n * n, 0.0);
  return s;
}

BiasState BiasState::initial(std::span<const double> residual) {
  BiasState s = zero(residual.size());
  s.b.assign(residual.begin(), residual.end());
  return s;
}

BiasState update_bias(const BiasState& state, std::span<const double> residual) {
  const std::size_t n = state.n();
  check_same(residual.size(), n, "update_bias");
  if (state.sigma.size() != n * n) throw DimensionError("bias covariance has the wrong size");
  BiasState next;
  next.k = state.k + 1;
  const double kk = static_cast<double>(next.k);
  const double prev = kk - 1.0;
  next.b.resize(n);
  for (std::size_t i = 0; i < n; ++i) next.b[i] = (prev * state.b[i] + residual[i]) / kk;
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = residual[i] - next.b[i];
  next.sigma = state.sigma;
  simd::active().rank_one_update(next.sigma.data(), d.data(), prev / kk, 1.0 / kk, n);
  return next;
}

std::string format_bias(const BiasState& state) {
  const std::size_t n = state.n();
  std::ostringstream ss;
  ss << state.k << ' ' << n << '\n';
  for (std::size_t i = 0; i < n; ++i) ss << (i ? " " : "") << io::format_double(state.b[i]);
  ss << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) ss << (j ? " " : "") << io::format_double(state.sigma[i * n + j]);
    ss << '\n';
  }
  return ss.str();
}

BiasState parse_bias(const std::string& text, const std::string& source) {
  const auto ls = io::lines(text);
  if (ls.empty()) throw ParseError(source + ": empty bias state");
  const auto head = io::split_ws(ls[0]);
  if (head.size() != 2) throw ParseError(source + ": line 1: expected 'k n'");
  BiasState s;
  s.k = static_cast<std::size_t>(io::parse_double(head[0], source + ": line 1"));
  const auto n = static_cast<std::size_t>(io::parse_double(head[1], source + ": line 1"));
  if (ls.size() < n + 2) throw ParseError(source + ": expected " + std::to_string(n + 2) + " lines");
  auto row = [&](std::size_t li, std::vector<double>& out) {
    const std::string where = source + ": line " + std::to_string(li + 1);
    const auto toks = io::split_ws(ls[li]);
    if (toks.size() != n) throw ParseError(where + ": expected " + std::to_string(n) + " values");
    for (const auto& t : toks) out.push_back(io::parse_double(t, where));
  };
  row(1, s.b);
  for (std::size_t i = 0; i < n; ++i) row(i + 2, s.sigma);
  return s;
}

void save_bias(const BiasState& state, const std::filesystem::path& path) {
  io::write_atomic(path, format_bias(state));
}

BiasState load_bias(const std::filesystem::path& path) { return parse_bias(io::read_text(path), path.string()); }

BiasFactor::BiasFactor(const BiasState& state, const NoiseModel& noise)
    : n_(state.n()), sigma2_(noise.sigma * noise.sigma), b_(state.b) {
  if (state.sigma.size() != n_ * n_) throw DimensionError("bias covariance has the wrong size");
  bool zero = true;
  for (double v : state.sigma)
    if (v != 0.0) {
      zero = false;
      break;
    }
  if (zero || n_ == 0) return;
  // Dense lower triangle stored as a band of half-width n - 1.
  const std::size_t w = n_ - 1;
  chol_.assign(n_ * n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j <= i; ++j) chol_[i * n_ + (j + w - i)] = state.sigma[i * n_ + j];
    chol_[i * n_ + w] += sigma2_;
  }
  const std::ptrdiff_t bad = simd::active().band_cholesky(chol_.data(), n_, w);
  if (bad >= 0)
    throw NumericalError("bias covariance factorization failed at pivot " + std::to_string(bad) + " (k = " +
                         std::to_string(state.k) + ")");
  double logdet = 0.0;
  for (std::size_t i = 0; i < n_; ++i) logdet += std::log(chol_[i * n_ + w] * chol_[i * n_ + w] / sigma2_);
  log_det_term_ = -0.5 * logdet;
}

double BiasFactor::quadratic_form(std::span<const double> r) const {
  check_same(r.size(), n_, "quadratic_form");
  if (chol_.empty()) {
    double s = 0.0;
    for (double v : r) s += v * v;
    return s / sigma2_;
  }
  std::vector<double> z(r.begin(), r.end());
  const auto& k = simd::active();
  k.band_forward(chol_.data(), n_, n_ - 1, z.data());
  return k.dot(z.data(), z.data(), n_);
}

double BiasFactor::log_likelihood(std::span<const double> y, std::span<const double> eta_c) const {
  check_same(y.size(), n_, "adaptive likelihood");
  check_same(eta_c.size(), n_, "adaptive likelihood");
  std::vector<double> r(n_);
  for (std::size_t i = 0; i < n_; ++i) r[i] = y[i] - eta_c[i] - b_[i];
  if (chol_.empty()) {
    double s = 0.0;
    for (double v : r) s += v * v;
    return -0.5 * s / sigma2_;
  }
  return -0.5 * quadratic_form(r) + log_det_term_;
}

double log_likelihood_adaptive(std::span<const double> y, std::span<const double> eta_c, const NoiseModel& noise,
                               const BiasState& bias) {
  return BiasFactor(bias, noise).log_likelihood(y, eta_c);
}

Posterior::Posterior(PosteriorSpec spec, std::shared_ptr<const ForwardModel> model)
    : spec_(std::move(spec)), model_(std::move(model)) {
  if (!model_) throw ConfigError("posterior needs a forward model");
  check_same(spec_.y.size(), kData, "data vector");
  for (double v : spec_.y)
    if (!std::isfinite(v)) throw DomainError("data vector contains a non-finite value");
  bias_ = std::make_shared<const BiasState>(BiasState::zero(kData));
  factor_ = std::make_shared<const BiasFactor>(*bias_, spec_.noise);
}

Posterior Posterior::with_bias(const BiasState& bias) const {
  check_same(bias.n(), kData, "bias state");
  Posterior p = *this;
  p.bias_ = std::make_shared<const BiasState>(bias);
  p.factor_ = std::make_shared<const BiasFactor>(bias, spec_.noise);
  return p;
}

ConductivityField Posterior::field(std::span<const double> x) const {
  return parameter_to_field(spec_.prior, x, grid());
}

std::size_t Posterior::dimension() const { return parameter_dimension(spec_.prior, grid()); }

double Posterior::log_prior(std::span<const double> x) const { return eitmc::log_prior(spec_.prior, x, grid()); }

double Posterior::site_log_prior_ratio(std::span<const double> x, std::size_t i, double value) const {
  return parameter_site_log_ratio(spec_.prior, x, grid(), i, value);
}

Evaluation Posterior::likelihood(std::span<const double> x) const {
  const ConductivityField f = field(x);
  Evaluation e;
  for (double v : f.values())
    if (!(v > 0.0)) {
      e.log_likelihood = kNegInf;
      return e;
    }
  VoltageSet eta;
  switch (spec_.fidelity) {
    case PosteriorFidelity::fine:
      eta = model_->evaluate(f, Fidelity::fine);
      e.receipt.fine = 1;
      break;
    case PosteriorFidelity::approx:
      eta = model_->evaluate(f, Fidelity::approx);
      e.receipt.approx = 1;
      break;
    case PosteriorFidelity::coarse:
    case PosteriorFidelity::coarse_adaptive:
      eta = model_->evaluate(f, Fidelity::coarse);
      e.receipt.coarse = 1;
      break;
  }
  e.eta.assign(eta.flat().begin(), eta.flat().end());
  e.log_likelihood = rescore(e);
  return e;
}

double Posterior::rescore(const Evaluation& e) const {
  if (e.eta.empty()) return e.log_likelihood;
  if (spec_.fidelity == PosteriorFidelity::coarse_adaptive) return factor_->log_likelihood(spec_.y, e.eta);
  return eitmc::log_likelihood(spec_.y, e.eta, spec_.noise);
}

Posterior::Value Posterior::evaluate(std::span<const double> x) const {
  Value v{kNegInf, log_prior(x), {}};
  if (v.log_prior == kNegInf) return v;
  v.likelihood = likelihood(x);
  v.log_posterior = v.log_prior + v.likelihood.log_likelihood;
  return v;
}

}  // namespace eitmc
