#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "eitmc/errors.hpp"
#include "eitmc/samplers.hpp"

namespace eitmc {

RwmProposal::RwmProposal(std::size_t dim, double alpha, double quantum)
    : dim_(dim), alpha_(alpha), quantum_(quantum) {
  if (dim == 0) throw ConfigError("proposal dimension must be positive");
  if (!(alpha > 0.0)) throw ConfigError("proposal scale alpha must be positive");
}

RwmProposal::RwmProposal(std::span<const double> covariance, std::size_t dim, double alpha, double quantum)
    : RwmProposal(dim, alpha, quantum) {
  if (covariance.size() != dim * dim) throw ConfigError("proposal covariance must be " + std::to_string(dim) + "x" + std::to_string(dim));
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> a(covariance.data(),
                                                                                             dim, dim);
  const double scale = std::max(a.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ConfigError("proposal covariance is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  if (eig.info() != Eigen::Success) throw ConfigError("proposal covariance eigendecomposition failed");
  const Eigen::VectorXd lambda = eig.eigenvalues();
  if (lambda.minCoeff() < -1e-10 * std::max(std::abs(lambda.maxCoeff()), 1e-300))
    throw ConfigError("proposal covariance is not positive semidefinite");
  const Eigen::MatrixXd c = eig.eigenvectors() * lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal();
  factor_.resize(dim * dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      factor_[i * dim + j] = c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

void RwmProposal::draw(Rng& rng, std::span<double> step) const {
  if (step.size() != dim_) throw DimensionError("proposal step has the wrong length");
  std::vector<double> z(dim_);
  for (double& v : z) v = rng.normal();
  const double a = std::sqrt(alpha_);
  if (factor_.empty()) {
    for (std::size_t i = 0; i < dim_; ++i) step[i] = a * z[i];
  } else {
    for (std::size_t i = 0; i < dim_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < dim_; ++j) s += factor_[i * dim_ + j] * z[j];
      step[i] = a * s;
    }
  }
  if (quantum_ > 0.0)
    for (double& v : step) v = quantum_ * std::round(v / quantum_);
}

bool rwm_step(ChainState& s, const Target& target, const RwmProposal& q, Rng& rng, Tally& tally) {
  if (!s.own) throw UnsupportedOperation("chain state is missing its target evaluation");
  std::vector<double> x(s.x.size());
  q.draw(rng, x);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += s.x[i];
  const double lp = target.log_prior(x);
  if (lp == -std::numeric_limits<double>::infinity() || std::isnan(lp)) {
    tally.add(false);
    return false;
  }
  Evaluation e = target.likelihood(x);
  s.counters += e.receipt;
  const double log_ratio = (lp - s.log_prior) + (e.log_likelihood - s.own->log_likelihood);
  const bool ok = log_ratio >= 0.0 || (!std::isnan(log_ratio) && std::log(rng.uniform()) < log_ratio);
  tally.add(ok);
  if (ok) {
    s.x = std::move(x);
    s.log_prior = lp;
    s.own = std::move(e);
    s.other.reset();
  }
  return ok;
}

std::vector<double> sample_covariance(const std::vector<std::vector<double>>& samples, bool diagonal_only) {
  if (samples.size() < 2) throw DomainError("sample covariance needs at least two samples");
  const std::size_t d = samples.front().size();
  std::vector<double> mean(d, 0.0);
  for (const auto& s : samples) {
    if (s.size() != d) throw DimensionError("samples have different lengths");
    for (std::size_t i = 0; i < d; ++i) mean[i] += s[i];
  }
  const double n = static_cast<double>(samples.size());
  for (double& v : mean) v /= n;
  std::vector<double> cov(d * d, 0.0);
  for (const auto& s : samples) {
    for (std::size_t i = 0; i < d; ++i) {
      const double di = s[i] - mean[i];
      if (diagonal_only) {
        cov[i * d + i] += di * di;
      } else {
        for (std::size_t j = 0; j < d; ++j) cov[i * d + j] += di * (s[j] - mean[j]);
      }
    }
  }
  for (double& v : cov) v /= n - 1.0;
  return cov;
}

}  // namespace eitmc
