#include "eitmc/forward_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "eitmc/errors.hpp"
#include "eitmc/io.hpp"

namespace eitmc {

namespace {

constexpr std::size_t L = simd::kLanes;
static_assert(L == kElectrodes, "one SIMD lane per drive pattern");

// Squared preconditioned residual, relative to its starting value, below
// which an iterative lane counts as converged.
constexpr double kRoundoff = 1e-28;

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

std::span<const double> standard_currents() {
  static const std::array<double, kData> block = [] {
    std::array<double, kData> c{};
    for (std::size_t p = 0; p < kElectrodes; ++p) {
      const auto d = DrivePattern::standard(p);
      std::copy(d.currents.begin(), d.currents.end(), c.begin() + p * kElectrodes);
    }
    return c;
  }();
  return block;
}

}  // namespace

DrivePattern DrivePattern::standard(std::size_t injector, double current) {
  if (injector >= kElectrodes) throw DimensionError("injector index out of range");
  DrivePattern d;
  d.injector = injector;
  d.currents.fill(-current / static_cast<double>(kElectrodes - 1));
  d.currents[injector] = current;
  return d;
}

VoltageSet::VoltageSet(std::span<const double> flat) {
  if (flat.size() != kData) throw DimensionError("voltage set needs 256 values, got " + std::to_string(flat.size()));
  std::copy(flat.begin(), flat.end(), values_.begin());
}

double VoltageSet::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

std::string format_voltages(const VoltageSet& v) {
  std::ostringstream ss;
  ss << "pattern";
  for (std::size_t e = 0; e < kElectrodes; ++e) ss << ",e" << e;
  ss << '\n';
  for (std::size_t p = 0; p < kElectrodes; ++p) {
    ss << p;
    for (std::size_t e = 0; e < kElectrodes; ++e) ss << ',' << io::format_double(v(p, e));
    ss << '\n';
  }
  return ss.str();
}

VoltageSet parse_voltages(const std::string& text, const std::string& source) {
  const auto ls = io::lines(text);
  if (ls.size() < kElectrodes + 1)
    throw ParseError(source + ": expected a header and 16 rows, found " + std::to_string(ls.size()) + " lines");
  VoltageSet v;
  for (std::size_t p = 0; p < kElectrodes; ++p) {
    const std::string where = source + ": line " + std::to_string(p + 2);
    const auto toks = io::split(ls[p + 1], ',');
    if (toks.size() != kElectrodes + 1) throw ParseError(where + ": expected 17 fields");
    for (std::size_t e = 0; e < kElectrodes; ++e) v(p, e) = io::parse_double(toks[e + 1], where);
  }
  return v;
}

void save_voltages(const VoltageSet& v, const std::filesystem::path& path) {
  io::write_atomic(path, format_voltages(v));
}

VoltageSet load_voltages(const std::filesystem::path& path) {
  return parse_voltages(io::read_text(path), path.string());
}

StiffnessMatrix::StiffnessMatrix(const ConductivityField& field)
    : grid_(field.grid()), east_(field.size(), 0.0), south_(field.size(), 0.0), diag_(field.size(), 0.0) {
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (!(field[i] > 0.0) || !std::isfinite(field[i]))
      throw DomainError("conductivity must be positive and finite at cell " + std::to_string(i));
  }
  const std::size_t n = grid_.side();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t i = grid_.index(r, c);
      if (c + 1 < n) {
        const double t = harmonic(field[i], field[i + 1]);
        east_[i] = t;
        diag_[i] += t;
        diag_[i + 1] += t;
      }
      if (r + 1 < n) {
        const double t = harmonic(field[i], field[i + n]);
        south_[i] = t;
        diag_[i] += t;
        diag_[i + n] += t;
      }
    }
  }
}

std::vector<double> StiffnessMatrix::to_dense() const {
  const std::size_t m = size(), n = grid_.side();
  std::vector<double> a(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    a[i * m + i] = diag_[i];
    const std::size_t c = i % n, r = i / n;
    if (c + 1 < n) a[i * m + i + 1] = a[(i + 1) * m + i] = -east_[i];
    if (r + 1 < n) a[i * m + i + n] = a[(i + n) * m + i] = -south_[i];
  }
  return a;
}

SolverHandle::SolverHandle(const ConductivityField& field, const ElectrodeLayout& layout,
                           const simd::KernelTable& kernels)
    : matrix_(field), layout_(layout), kernels_(&kernels) {
  if (!(layout.grid() == field.grid())) throw DimensionError("electrode layout and field use different grids");
}

// Sources enter with a negative sign: the boundary flux x dv/dn = j is read
// with n pointing into the domain, so current injected at an electrode lowers
// its potential relative to the others.
std::vector<double> SolverHandle::rhs_block(std::span<const double> currents) const {
  std::vector<double> b(matrix_.size() * L, 0.0);
  for (std::size_t lane = 0; lane < L; ++lane)
    for (std::size_t e = 0; e < kElectrodes; ++e) b[layout_.cell(e) * L + lane] -= currents[lane * kElectrodes + e];
  return b;
}

void SolverHandle::extract(const std::vector<double>& block, std::span<double> out) const {
  for (std::size_t lane = 0; lane < L; ++lane) {
    double mean = 0.0;
    for (std::size_t e = 0; e < kElectrodes; ++e) mean += block[layout_.cell(e) * L + lane];
    mean /= static_cast<double>(kElectrodes);
    for (std::size_t e = 0; e < kElectrodes; ++e)
      out[lane * kElectrodes + e] = block[layout_.cell(e) * L + lane] - mean;
  }
}

void SolverHandle::solve_direct_currents(std::span<const double> currents, std::span<double> out) const {
  if (currents.size() != kData || out.size() != kData) throw DimensionError("expected 16x16 current and output blocks");
  const std::size_t m = matrix_.size(), side = matrix_.grid().side();
  // The last cell is held at zero potential; the remaining system is SPD.
  const std::size_t n = m - 1, w = side, stride = w + 1;
  const auto st = matrix_.view();
  std::vector<double> band(n * stride, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    band[i * stride + w] = st.diag[i];
    if (i % side != 0) band[i * stride + w - 1] = -st.east[i - 1];
    if (i >= side) band[i * stride] = -st.south[i - side];
  }
  const std::ptrdiff_t bad = kernels_->band_cholesky(band.data(), n, w);
  if (bad >= 0) {
    const auto d = matrix_.diagonal();
    const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
    std::ostringstream ss;
    ss << "Cholesky breakdown at pivot " << bad << " of " << n << " (diagonal range " << *lo << " to " << *hi
       << ")";
    throw NumericalError(ss.str());
  }
  std::vector<double> b = rhs_block(currents);
  kernels_->band_solve_block(band.data(), n, w, b.data());
  std::fill(b.begin() + static_cast<std::ptrdiff_t>(n * L), b.end(), 0.0);
  extract(b, out);
}

VoltageSet SolverHandle::solve_direct() const {
  std::array<double, kData> out{};
  solve_direct_currents(standard_currents(), out);
  return VoltageSet(out);
}

VoltageSet SolverHandle::solve_iterative(std::size_t iters) const {
  if (iters == 0) throw DomainError("iteration count must be positive");
  const std::size_t m = matrix_.size();
  const auto st = matrix_.view();
  const auto& k = *kernels_;
  std::vector<double> inv_diag(m);
  for (std::size_t i = 0; i < m; ++i) inv_diag[i] = 1.0 / st.diag[i];

  std::vector<double> r = rhs_block(standard_currents());
  std::vector<double> x(m * L, 0.0), z(m * L), p(m * L), q(m * L);
  std::array<double, L> rz{}, rz0{}, rz_new{}, pq{}, alpha{}, beta{};
  std::array<bool, L> done{};
  k.block_row_scale(inv_diag.data(), r.data(), z.data(), m);
  p = z;
  k.block_dot(r.data(), z.data(), m, rz.data());
  rz0 = rz;
  for (std::size_t it = 0; it < iters; ++it) {
    // A lane whose residual has reached roundoff stops moving; iterating past
    // that point only amplifies rounding noise.
    bool all_done = true;
    for (std::size_t l = 0; l < L; ++l) {
      done[l] = done[l] || !(rz[l] > kRoundoff * rz0[l]);
      all_done = all_done && done[l];
    }
    if (all_done) break;
    k.stencil_apply_block(st, p.data(), q.data());
    k.block_dot(p.data(), q.data(), m, pq.data());
    for (std::size_t l = 0; l < L; ++l) alpha[l] = (!done[l] && pq[l] > 0.0) ? rz[l] / pq[l] : 0.0;
    k.block_axpy(alpha.data(), p.data(), x.data(), m);
    for (std::size_t l = 0; l < L; ++l) alpha[l] = -alpha[l];
    k.block_axpy(alpha.data(), q.data(), r.data(), m);
    k.block_row_scale(inv_diag.data(), r.data(), z.data(), m);
    k.block_dot(r.data(), z.data(), m, rz_new.data());
    for (std::size_t l = 0; l < L; ++l) beta[l] = (!done[l] && rz[l] != 0.0) ? rz_new[l] / rz[l] : 0.0;
    k.block_xpby(z.data(), beta.data(), p.data(), m);
    for (std::size_t l = 0; l < L; ++l)
      if (!done[l]) rz[l] = rz_new[l];
  }
  std::array<double, kData> out{};
  extract(x, out);
  return VoltageSet(out);
}

VoltageSet solve_fine(const ConductivityField& field, const ElectrodeLayout& layout) {
  return SolverHandle(field, layout).solve_direct();
}

VoltageSet solve_fine(const ConductivityField& field) {
  return solve_fine(field, ElectrodeLayout::standard(field.grid()));
}

VoltageSet solve_approx(const ConductivityField& field, const ElectrodeLayout& layout, std::size_t iters) {
  return SolverHandle(field, layout).solve_iterative(iters);
}

VoltageSet solve_approx(const ConductivityField& field, std::size_t iters) {
  return solve_approx(field, ElectrodeLayout::standard(field.grid()), iters);
}

VoltageSet solve_coarse(const ConductivityField& field, const GridSpec& coarse, CoarsenRule rule) {
  const auto c = eitmc::coarsen(field, coarse, rule);
  return solve_fine(c, ElectrodeLayout::standard(coarse));
}

std::array<double, kData> transfer_matrix(const ConductivityField& field, const ElectrodeLayout& layout) {
  std::array<double, kData> currents{};
  for (std::size_t j = 0; j < kElectrodes; ++j)
    for (std::size_t e = 0; e < kElectrodes; ++e)
      currents[j * kElectrodes + e] = (e == j ? 1.0 : 0.0) - 1.0 / static_cast<double>(kElectrodes);
  std::array<double, kData> lanes{};
  SolverHandle(field, layout).solve_direct_currents(currents, lanes);
  std::array<double, kData> r{};
  for (std::size_t j = 0; j < kElectrodes; ++j)
    for (std::size_t e = 0; e < kElectrodes; ++e) r[e * kElectrodes + j] = lanes[j * kElectrodes + e];
  return r;
}

std::array<double, kData> transfer_matrix(const ConductivityField& field) {
  return transfer_matrix(field, ElectrodeLayout::standard(field.grid()));
}

ForwardModel::ForwardModel(GridSpec parameter_grid, ForwardModelOptions options)
    : param_grid_(parameter_grid),
      solve_grid_(parameter_grid.side() * std::max<std::size_t>(options.refine, 1)),
      coarse_grid_(options.coarse_side),
      options_(options),
      solve_layout_(ElectrodeLayout::standard(solve_grid_)),
      coarse_layout_(ElectrodeLayout::standard(coarse_grid_)) {
  if (options.refine == 0) throw DimensionError("refinement factor must be positive");
  if (solve_grid_.side() % coarse_grid_.side() != 0)
    throw DimensionError("coarse side " + std::to_string(coarse_grid_.side()) + " does not divide solve side " +
                         std::to_string(solve_grid_.side()));
  if (options.approx_iters == 0) throw DomainError("approx_iters must be positive");
  for (auto& c : calls_) c.store(0);
}

VoltageSet ForwardModel::evaluate(const ConductivityField& field, Fidelity fidelity) const {
  if (!(field.grid() == param_grid_)) throw DimensionError("field grid does not match the forward model");
  const ConductivityField solve_field = refine(field, options_.refine);
  calls_[static_cast<std::size_t>(fidelity)].fetch_add(1, std::memory_order_relaxed);
  switch (fidelity) {
    case Fidelity::fine:
      return SolverHandle(solve_field, solve_layout_).solve_direct();
    case Fidelity::approx:
      return SolverHandle(solve_field, solve_layout_).solve_iterative(options_.approx_iters);
    case Fidelity::coarse:
      return SolverHandle(eitmc::coarsen(solve_field, coarse_grid_, options_.coarsen), coarse_layout_).solve_direct();
  }
  throw UnsupportedOperation("unknown fidelity");
}

void ForwardModel::reset_calls() const {
  for (auto& c : calls_) c.store(0);
}

}  // namespace eitmc
