#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "eitmc/field_grid.hpp"
#include "eitmc/simd.hpp"

namespace eitmc {

inline constexpr std::size_t kData = kElectrodes * kElectrodes;

/// Current injected at one electrode and withdrawn evenly at the other fifteen.
struct DrivePattern {
  std::size_t injector = 0;
  std::array<double, kElectrodes> currents{};

  static DrivePattern standard(std::size_t injector, double current = 1.0);
};

/// Electrode voltages, row p measured under drive pattern p, each row
/// referenced to its electrode mean.
class VoltageSet {
 public:
  VoltageSet() { values_.fill(0.0); }
  explicit VoltageSet(std::span<const double> flat);

  double operator()(std::size_t pattern, std::size_t electrode) const {
    return values_[pattern * kElectrodes + electrode];
  }
  double& operator()(std::size_t pattern, std::size_t electrode) {
    return values_[pattern * kElectrodes + electrode];
  }
  std::span<const double, kData> flat() const { return values_; }
  std::span<const double, kElectrodes> row(std::size_t p) const {
    return std::span<const double, kElectrodes>(values_.data() + p * kElectrodes, kElectrodes);
  }
  double max_abs() const;

 private:
  std::array<double, kData> values_;
};

std::string format_voltages(const VoltageSet& v);
VoltageSet parse_voltages(const std::string& text, const std::string& source);
void save_voltages(const VoltageSet& v, const std::filesystem::path& path);
VoltageSet load_voltages(const std::filesystem::path& path);

/// Cell-centered finite-volume operator with harmonic-mean face
/// transmissibilities and zero-flux outer boundary. Row sums are zero.
class StiffnessMatrix {
 public:
  explicit StiffnessMatrix(const ConductivityField& field);

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return grid_.cells(); }
  simd::StencilView view() const { return {grid_.side(), east_.data(), south_.data(), diag_.data()}; }
  /// Row-major dense copy, for inspection and testing.
  std::vector<double> to_dense() const;
  std::span<const double> diagonal() const { return diag_; }

 private:
  GridSpec grid_;
  std::vector<double> east_, south_, diag_;
};

/// Assembled system for one field and layout. Immutable after construction.
class SolverHandle {
 public:
  SolverHandle(const ConductivityField& field, const ElectrodeLayout& layout,
               const simd::KernelTable& kernels = simd::active());

  const StiffnessMatrix& matrix() const { return matrix_; }
  const ElectrodeLayout& layout() const { return layout_; }

  /// Direct banded Cholesky solve, one factorization shared by all patterns.
  VoltageSet solve_direct() const;
  /// Jacobi-preconditioned conjugate gradients, fixed iteration count, zero start.
  VoltageSet solve_iterative(std::size_t iters) const;
  /// Centered electrode voltages for an arbitrary zero-sum current vector per
  /// lane. currents is kLanes x kElectrodes row-major (lane-major).
  void solve_direct_currents(std::span<const double> currents, std::span<double> out) const;

 private:
  std::vector<double> rhs_block(std::span<const double> currents) const;
  void extract(const std::vector<double>& block, std::span<double> out) const;

  StiffnessMatrix matrix_;
  ElectrodeLayout layout_;
  const simd::KernelTable* kernels_;
};

VoltageSet solve_fine(const ConductivityField& field, const ElectrodeLayout& layout);
VoltageSet solve_fine(const ConductivityField& field);
VoltageSet solve_approx(const ConductivityField& field, std::size_t iters);
VoltageSet solve_approx(const ConductivityField& field, const ElectrodeLayout& layout, std::size_t iters);
VoltageSet solve_coarse(const ConductivityField& field, const GridSpec& coarse,
                        CoarsenRule rule = CoarsenRule::arithmetic);

/// 16x16 row-major map from a zero-sum electrode current vector to centered
/// electrode voltages. Column j is the response to e_j - (1/16) 1.
std::array<double, kData> transfer_matrix(const ConductivityField& field);
std::array<double, kData> transfer_matrix(const ConductivityField& field, const ElectrodeLayout& layout);

enum class Fidelity { fine, approx, coarse };

struct ForwardModelOptions {
  std::size_t refine = 1;           // parameter cells are split into refine x refine solve cells
  std::size_t coarse_side = 8;      // side of the coarse solve grid
  std::size_t approx_iters = 60;
  CoarsenRule coarsen = CoarsenRule::arithmetic;
};

/// The three simulators for a parameter grid, with per-fidelity call counts.
class ForwardModel {
 public:
  ForwardModel(GridSpec parameter_grid, ForwardModelOptions options);

  const GridSpec& parameter_grid() const { return param_grid_; }
  const GridSpec& solve_grid() const { return solve_grid_; }
  const GridSpec& coarse_grid() const { return coarse_grid_; }
  const ForwardModelOptions& options() const { return options_; }

  VoltageSet evaluate(const ConductivityField& field, Fidelity fidelity) const;

  std::uint64_t calls(Fidelity f) const { return calls_[static_cast<std::size_t>(f)].load(); }
  void reset_calls() const;

 private:
  GridSpec param_grid_, solve_grid_, coarse_grid_;
  ForwardModelOptions options_;
  ElectrodeLayout solve_layout_, coarse_layout_;
  mutable std::array<std::atomic<std::uint64_t>, 3> calls_{};
};

}  // namespace eitmc
