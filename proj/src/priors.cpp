#include "eitmc/priors.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "eitmc/errors.hpp"

namespace eitmc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <class Kernel>
double mrf_sum(std::span<const double> x, std::size_t side, Kernel u) {
  double s = 0.0;
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      const std::size_t i = r * side + c;
      if (c + 1 < side) s += u(x[i] - x[i + 1]);
      if (r + 1 < side) s += u(x[i] - x[i + side]);
    }
  }
  return s;
}

template <class Kernel>
double mrf_site(std::span<const double> x, std::size_t side, std::size_t i, double v, Kernel u) {
  const std::size_t r = i / side, c = i % side;
  double s = 0.0;
  auto add = [&](std::size_t j) { s += u(v - x[j]) - u(x[i] - x[j]); };
  if (c > 0) add(i - 1);
  if (c + 1 < side) add(i + 1);
  if (r > 0) add(i - side);
  if (r + 1 < side) add(i + side);
  return s;
}

bool in_bounds(std::span<const double> x, double lo, double hi) {
  for (double v : x)
    if (!(v >= lo && v <= hi)) return false;
  return true;
}

void check_size(std::span<const double> x, std::size_t n) {
  if (x.size() != n)
    throw DimensionError("parameter has " + std::to_string(x.size()) + " values, expected " + std::to_string(n));
}

}  // namespace

std::vector<std::array<double, 2>> ConvolutionPrior::lattice_knots(std::size_t per_side) {
  std::vector<std::array<double, 2>> k;
  k.reserve(per_side * per_side);
  const double n = static_cast<double>(per_side);
  for (std::size_t i = 0; i < per_side; ++i)
    for (std::size_t j = 0; j < per_side; ++j)
      k.push_back({(static_cast<double>(j) + 0.5) / n, (static_cast<double>(i) + 0.5) / n});
  return k;
}

double tricube_kernel(double d, double s) {
  const double a = std::abs(d) / s;
  if (a >= 1.0) return 0.0;
  const double t = 1.0 - a * a * a;
  return t * t * t / s;
}

bool is_mrf(const PriorSpec& prior) { return !std::holds_alternative<ConvolutionPrior>(prior); }

std::size_t parameter_dimension(const PriorSpec& prior, const GridSpec& grid) {
  if (const auto* c = std::get_if<ConvolutionPrior>(&prior)) return c->knots.size();
  return grid.cells();
}

double log_prior(const PriorSpec& prior, std::span<const double> x, const GridSpec& grid) {
  check_size(x, parameter_dimension(prior, grid));
  return std::visit(
      [&](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, TricubePrior>) {
          if (!in_bounds(x, p.lower, p.upper)) return kNegInf;
          return p.beta * mrf_sum(x, grid.side(), [s = p.s](double d) { return tricube_kernel(d, s); });
        } else if constexpr (std::is_same_v<P, GmrfPrior>) {
          if (!in_bounds(x, p.lower, p.upper)) return kNegInf;
          return p.beta * mrf_sum(x, grid.side(), [](double d) { return -d * d; });
        } else {
          double s = 0.0;
          for (double u : x) s += u * u;
          return -0.5 * s / (p.sigma_u * p.sigma_u);
        }
      },
      prior);
}

double log_prior(const PriorSpec& prior, const ConductivityField& x) {
  if (!is_mrf(prior)) throw UnsupportedOperation("convolution prior density is defined on the latent vector");
  return log_prior(prior, x.values(), x.grid());
}

double site_log_ratio(const PriorSpec& prior, std::span<const double> x, const GridSpec& grid, std::size_t i,
                      double xi_new) {
  if (!is_mrf(prior)) throw UnsupportedOperation("site_log_ratio: the convolution prior has no local conditional");
  return parameter_site_log_ratio(prior, x, grid, i, xi_new);
}

double site_log_ratio(const PriorSpec& prior, const ConductivityField& x, std::size_t i, double xi_new) {
  return site_log_ratio(prior, x.values(), x.grid(), i, xi_new);
}

double parameter_site_log_ratio(const PriorSpec& prior, std::span<const double> x, const GridSpec& grid,
                                std::size_t i, double xi_new) {
  if (i >= x.size()) throw DimensionError("site index out of range");
  return std::visit(
      [&](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, TricubePrior>) {
          if (!(xi_new >= p.lower && xi_new <= p.upper)) return kNegInf;
          return p.beta * mrf_site(x, grid.side(), i, xi_new, [s = p.s](double d) { return tricube_kernel(d, s); });
        } else if constexpr (std::is_same_v<P, GmrfPrior>) {
          if (!(xi_new >= p.lower && xi_new <= p.upper)) return kNegInf;
          return p.beta * mrf_site(x, grid.side(), i, xi_new, [](double d) { return -d * d; });
        } else {
          return 0.5 * (x[i] * x[i] - xi_new * xi_new) / (p.sigma_u * p.sigma_u);
        }
      },
      prior);
}

ConductivityField expand_latent(const ConvolutionPrior& prior, std::span<const double> u, const GridSpec& grid) {
  check_size(u, prior.knots.size());
  const double var = prior.kernel_sd * prior.kernel_sd;
  const double norm = 1.0 / (2.0 * std::numbers::pi * var);
  std::vector<double> x(grid.cells(), 0.0);
  for (std::size_t cell = 0; cell < grid.cells(); ++cell) {
    const auto s = grid.center(cell);
    double acc = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
      if (u[j] == 0.0) continue;
      const double dx = s[0] - prior.knots[j][0], dy = s[1] - prior.knots[j][1];
      acc += u[j] * norm * std::exp(-0.5 * (dx * dx + dy * dy) / var);
    }
    x[cell] = acc;
  }
  return ConductivityField(grid, std::move(x));
}

ConductivityField parameter_to_field(const PriorSpec& prior, std::span<const double> x, const GridSpec& grid) {
  if (const auto* c = std::get_if<ConvolutionPrior>(&prior)) {
    const auto raw = expand_latent(*c, x, grid);
    std::vector<double> v(raw.values().begin(), raw.values().end());
    for (double& e : v) e = c->offset + c->scale * e;
    return ConductivityField(grid, std::move(v));
  }
  check_size(x, grid.cells());
  return ConductivityField(grid, std::vector<double>(x.begin(), x.end()));
}

std::vector<double> sample_latent(const ConvolutionPrior& prior, Rng& rng) {
  std::vector<double> u(prior.knots.size());
  for (double& v : u) v = prior.sigma_u * rng.normal();
  return u;
}

ConductivityField sample_prior(const PriorSpec& prior, const GridSpec& grid, Rng& rng, std::size_t sweeps) {
  if (const auto* c = std::get_if<ConvolutionPrior>(&prior)) return expand_latent(*c, sample_latent(*c, rng), grid);
  const auto [lo, hi] = std::visit(
      [](const auto& p) -> std::pair<double, double> {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, ConvolutionPrior>) return {0.0, 0.0};
        else return {p.lower, p.upper};
      },
      prior);
  std::vector<double> x(grid.cells(), 0.5 * (lo + hi));
  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double v = x[i] + kPriorProposalSd * rng.normal();
      const double r = parameter_site_log_ratio(prior, x, grid, i, v);
      if (r >= 0.0 || std::log(rng.uniform()) < r) x[i] = v;
    }
  }
  return ConductivityField(grid, std::move(x));
}

}  // namespace eitmc
