#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "eitmc/field_grid.hpp"
#include "eitmc/rng.hpp"

namespace eitmc {

/// Gray-level Markov random field with the compactly supported tricube
/// similarity kernel. Larger kernel values are more probable.
struct TricubePrior {
  double beta = 0.5;
  double s = 0.3;
  double lower = 2.5;
  double upper = 4.5;
};

/// Gaussian Markov random field: kernel u(d) = -d^2.
struct GmrfPrior {
  double beta = 2.0;
  double lower = 2.5;
  double upper = 4.5;
};

/// Gaussian field obtained by smoothing a latent lattice process with a
/// radially symmetric Gaussian kernel. The sampled parameter is the latent
/// vector u; conductivity = offset + scale * sum_j u_j k(s - w_j).
struct ConvolutionPrior {
  std::vector<std::array<double, 2>> knots = lattice_knots(10);
  double sigma_u = 1.0;     // sd of each latent value
  double kernel_sd = 0.11;  // sd of the smoothing kernel
  double offset = 3.5;
  double scale = 0.02;

  static std::vector<std::array<double, 2>> lattice_knots(std::size_t per_side);
};

using PriorSpec = std::variant<TricubePrior, GmrfPrior, ConvolutionPrior>;

/// (1/s)(1 - |d/s|^3)^3 on |d| < s, zero elsewhere.
double tricube_kernel(double d, double s);

bool is_mrf(const PriorSpec& prior);

/// Dimension of the sampled parameter for a field on `grid`.
std::size_t parameter_dimension(const PriorSpec& prior, const GridSpec& grid);

/// Log-density up to an additive constant. For the MRF priors `x` is the
/// field and values outside the bounds give -inf; for the convolution prior
/// `x` is the latent vector.
double log_prior(const PriorSpec& prior, std::span<const double> x, const GridSpec& grid);
double log_prior(const PriorSpec& prior, const ConductivityField& x);

/// log pi(x') - log pi(x) where x' equals x except x'_i = xi_new, from the
/// neighbor terms of site i only. Throws UnsupportedOperation for the
/// convolution prior.
double site_log_ratio(const PriorSpec& prior, std::span<const double> x, const GridSpec& grid, std::size_t i,
                      double xi_new);
double site_log_ratio(const PriorSpec& prior, const ConductivityField& x, std::size_t i, double xi_new);

/// Same quantity for any prior in its sampled parameterization; for the
/// convolution prior the latent components are independent.
double parameter_site_log_ratio(const PriorSpec& prior, std::span<const double> x, const GridSpec& grid,
                                std::size_t i, double xi_new);

/// sum_j u_j k(s - w_j) at every cell center, no offset or scale.
ConductivityField expand_latent(const ConvolutionPrior& prior, std::span<const double> u, const GridSpec& grid);

/// Maps the sampled parameter to the conductivity field.
ConductivityField parameter_to_field(const PriorSpec& prior, std::span<const double> x, const GridSpec& grid);

inline constexpr std::size_t kPriorSweeps = 5000;
inline constexpr double kPriorProposalSd = 0.5;

/// MRF priors: single-site Metropolis on the prior alone, started at the
/// midpoint of the bounds, run for `sweeps` sweeps. Convolution prior: exact
/// latent draw expanded without offset or scale.
ConductivityField sample_prior(const PriorSpec& prior, const GridSpec& grid, Rng& rng,
                               std::size_t sweeps = kPriorSweeps);

/// Exact draw of the latent vector.
std::vector<double> sample_latent(const ConvolutionPrior& prior, Rng& rng);

}  // namespace eitmc
