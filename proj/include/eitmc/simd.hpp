#pragma once

// Arithmetic inner loops shared by the forward solvers and the adaptive
// likelihood. Every kernel has a portable scalar reference version; an AVX2/FMA
// version is compiled on x86-64 and selected at runtime when the CPU supports
// it. Setting EITMC_ISA=scalar in the environment forces the reference path.
//
// Band storage: a symmetric matrix of order n with half-bandwidth w keeps its
// lower triangle row by row, w + 1 slots per row. Entry (i, j), i - w <= j <= i,
// lives at band[i * (w + 1) + (j - i + w)]. Slots with j < 0 are unused.
//
// Block storage: `rows` x kLanes row-major, one lane per drive pattern.

#include <cstddef>
#include <string_view>

namespace eitmc::simd {

inline constexpr std::size_t kLanes = 16;

enum class Isa { scalar, avx2 };

/// Cell-centered 5-point operator on a side x side lattice.
/// out_i = diag_i v_i - sum over faces T_f v_neighbor.
struct StencilView {
  std::size_t side = 0;
  const double* east = nullptr;   // face (r, c)-(r, c+1); ignored on the last column
  const double* south = nullptr;  // face (r, c)-(r+1, c); ignored on the last row
  const double* diag = nullptr;
};

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // s = keep * s + add * d d^T on a dense n x n row-major matrix.
  void (*rank_one_update)(double* s, const double* d, double keep, double add, std::size_t n);
  // In-place Cholesky of a banded SPD matrix. Returns -1 on success or the
  // index of the first non-positive pivot.
  std::ptrdiff_t (*band_cholesky)(double* band, std::size_t n, std::size_t w);
  // Solves L y = b in place.
  void (*band_forward)(const double* band, std::size_t n, std::size_t w, double* b);
  // Solves L^T x = y in place.
  void (*band_backward)(const double* band, std::size_t n, std::size_t w, double* b);
  // Solves L L^T X = B in place for kLanes right-hand sides.
  void (*band_solve_block)(const double* band, std::size_t n, std::size_t w, double* rhs);
  void (*stencil_apply_block)(const StencilView& s, const double* v, double* out);
  // out[l] = sum_i a[i][l] * b[i][l]
  void (*block_dot)(const double* a, const double* b, std::size_t rows, double* out);
  // y[i][l] += alpha[l] * x[i][l]
  void (*block_axpy)(const double* alpha, const double* x, double* y, std::size_t rows);
  // y[i][l] = x[i][l] + beta[l] * y[i][l]
  void (*block_xpby)(const double* x, const double* beta, double* y, std::size_t rows);
  // y[i][l] = scale[i] * x[i][l]
  void (*block_row_scale)(const double* scale, const double* x, double* y, std::size_t rows);
};

const KernelTable& scalar_kernels();

/// nullptr when the AVX2 variant was not compiled into this build.
const KernelTable* avx2_kernels();

bool isa_supported(Isa isa);

/// Table for the given ISA. Throws UnsupportedOperation if unavailable.
const KernelTable& kernels_for(Isa isa);

/// Table selected once per process: best supported ISA unless overridden.
const KernelTable& active();

std::string_view isa_name(Isa isa);

}  // namespace eitmc::simd
