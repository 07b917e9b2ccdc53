#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "eitmc/forward_solver.hpp"
#include "eitmc/priors.hpp"

namespace eitmc {

/// Isotropic Gaussian observation noise.
struct NoiseModel {
  explicit NoiseModel(double sigma);
  double sigma;
};

/// -||y - eta||^2 / (2 sigma^2); the normalizing constant is omitted.
double log_likelihood(std::span<const double> y, std::span<const double> eta, const NoiseModel& noise);

/// Which simulators ran during one evaluation.
struct Receipt {
  std::uint64_t fine = 0;
  std::uint64_t approx = 0;
  std::uint64_t coarse = 0;

  Receipt& operator+=(const Receipt& o) {
    fine += o.fine;
    approx += o.approx;
    coarse += o.coarse;
    return *this;
  }
  friend bool operator==(const Receipt&, const Receipt&) = default;
};

/// Running mean and covariance of the fine-minus-coarse residual.
struct BiasState {
  std::size_t k = 0;
  std::vector<double> b;      // n
  std::vector<double> sigma;  // n x n, row-major

  std::size_t n() const { return b.size(); }
  static BiasState zero(std::size_t n);
  /// k = 0 state whose mean is a first residual and whose covariance is zero.
  static BiasState initial(std::span<const double> residual);
};

/// k' = k + 1, b' = ((k'-1) b + r) / k', S' = ((k'-1) S + (r - b')(r - b')^T) / k'.
BiasState update_bias(const BiasState& state, std::span<const double> residual);

std::string format_bias(const BiasState& state);
BiasState parse_bias(const std::string& text, const std::string& source);
void save_bias(const BiasState& state, const std::filesystem::path& path);
BiasState load_bias(const std::filesystem::path& path);

/// Factorization of sigma^2 I + S_b for repeated adaptive likelihood evaluations.
class BiasFactor {
 public:
  BiasFactor(const BiasState& state, const NoiseModel& noise);

  /// -1/2 r^T (sigma^2 I + S)^{-1} r - 1/2 logdet(I + S / sigma^2), r = y - eta_c - b.
  /// The determinant is taken relative to sigma^2 I so a zero-covariance state
  /// gives exactly the plain Gaussian likelihood of y - b.
  double log_likelihood(std::span<const double> y, std::span<const double> eta_c) const;
  double quadratic_form(std::span<const double> r) const;
  double log_det_term() const { return log_det_term_; }

 private:
  std::size_t n_;
  double sigma2_;
  std::vector<double> b_;
  std::vector<double> chol_;  // empty when the covariance is exactly zero
  double log_det_term_ = 0.0;
};

double log_likelihood_adaptive(std::span<const double> y, std::span<const double> eta_c, const NoiseModel& noise,
                               const BiasState& bias);

enum class PosteriorFidelity { fine, approx, coarse, coarse_adaptive };

struct PosteriorSpec {
  std::vector<double> y;
  NoiseModel noise{1.0};
  PriorSpec prior = TricubePrior{};
  PosteriorFidelity fidelity = PosteriorFidelity::fine;
};

/// Likelihood at one state: value, simulated voltages, and the simulator calls spent.
struct Evaluation {
  double log_likelihood = 0.0;
  std::vector<double> eta;
  Receipt receipt;
};

/// What the samplers need from a target density. Priors are evaluated
/// locally; likelihoods may be expensive and report their cost.
class Target {
 public:
  virtual ~Target() = default;
  virtual std::size_t dimension() const = 0;
  /// -inf outside the support.
  virtual double log_prior(std::span<const double> x) const = 0;
  virtual double site_log_prior_ratio(std::span<const double> x, std::size_t i, double value) const = 0;
  virtual Evaluation likelihood(std::span<const double> x) const = 0;
  /// Re-scores a previous evaluation, e.g. under a new bias state, without
  /// running a simulator.
  virtual double rescore(const Evaluation& e) const { return e.log_likelihood; }
};

class Posterior final : public Target {
 public:
  Posterior(PosteriorSpec spec, std::shared_ptr<const ForwardModel> model);

  /// Copy with a new bias state; only meaningful for coarse_adaptive.
  Posterior with_bias(const BiasState& bias) const;

  const PosteriorSpec& spec() const { return spec_; }
  const ForwardModel& model() const { return *model_; }
  std::shared_ptr<const ForwardModel> model_ptr() const { return model_; }
  const BiasState& bias() const { return *bias_; }
  const GridSpec& grid() const { return model_->parameter_grid(); }

  ConductivityField field(std::span<const double> x) const;

  struct Value {
    double log_posterior;
    double log_prior;
    Evaluation likelihood;
  };
  /// Log-posterior up to a constant. Out-of-support states return -inf
  /// without running any simulator.
  Value evaluate(std::span<const double> x) const;

  std::size_t dimension() const override;
  double log_prior(std::span<const double> x) const override;
  double site_log_prior_ratio(std::span<const double> x, std::size_t i, double value) const override;
  Evaluation likelihood(std::span<const double> x) const override;
  double rescore(const Evaluation& e) const override;

 private:
  PosteriorSpec spec_;
  std::shared_ptr<const ForwardModel> model_;
  std::shared_ptr<const BiasState> bias_;
  std::shared_ptr<const BiasFactor> factor_;
};

}  // namespace eitmc
