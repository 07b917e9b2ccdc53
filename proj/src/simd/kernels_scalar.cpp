#include <algorithm>
#include <cmath>
#include <vector>

#include "eitmc/simd.hpp"

namespace eitmc::simd {
namespace {

constexpr std::size_t L = kLanes;

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void rank_one_update(double* s, const double* d, double keep, double add, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double c = add * d[i];
    double* row = s + i * n;
    for (std::size_t j = 0; j < n; ++j) row[j] = keep * row[j] + c * d[j];
  }
}

std::ptrdiff_t band_cholesky(double* band, std::size_t n, std::size_t w) {
  const std::size_t stride = w + 1;
  // Reciprocal pivots keep divisions off the dependency chain.
  std::vector<double> inv(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i > w ? i - w : 0;
    double* row_i = band + i * stride;
    for (std::size_t j = lo; j <= i; ++j) {
      const double* row_j = band + j * stride;
      double s = row_i[j + w - i];
      const double* a = row_i + (lo + w - i);
      const double* b = row_j + (lo + w - j);
      for (std::size_t k = 0; k < j - lo; ++k) s -= a[k] * b[k];
      if (j < i) {
        row_i[j + w - i] = s * inv[j];
      } else {
        if (!(s > 0.0)) return static_cast<std::ptrdiff_t>(i);
        row_i[w] = std::sqrt(s);
        inv[i] = 1.0 / row_i[w];
      }
    }
  }
  return -1;
}

void band_forward(const double* band, std::size_t n, std::size_t w, double* b) {
  const std::size_t stride = w + 1;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i > w ? i - w : 0;
    const double* row = band + i * stride;
    double s = b[i];
    const double* a = row + (lo + w - i);
    for (std::size_t k = 0; k < i - lo; ++k) s -= a[k] * b[lo + k];
    b[i] = s / row[w];
  }
}

void band_backward(const double* band, std::size_t n, std::size_t w, double* b) {
  const std::size_t stride = w + 1;
  for (std::size_t i = n; i-- > 0;) {
    const std::size_t lo = i > w ? i - w : 0;
    const double* row = band + i * stride;
    const double xi = b[i] / row[w];
    b[i] = xi;
    const double* a = row + (lo + w - i);
    for (std::size_t k = 0; k < i - lo; ++k) b[lo + k] -= a[k] * xi;
  }
}

void band_solve_block(const double* band, std::size_t n, std::size_t w, double* rhs) {
  const std::size_t stride = w + 1;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i > w ? i - w : 0;
    const double* row = band + i * stride;
    double* yi = rhs + i * L;
    for (std::size_t k = lo; k < i; ++k) {
      const double lik = row[k + w - i];
      const double* yk = rhs + k * L;
      for (std::size_t l = 0; l < L; ++l) yi[l] -= lik * yk[l];
    }
    const double inv = 1.0 / row[w];
    for (std::size_t l = 0; l < L; ++l) yi[l] *= inv;
  }
  for (std::size_t i = n; i-- > 0;) {
    const std::size_t lo = i > w ? i - w : 0;
    const double* row = band + i * stride;
    double* xi = rhs + i * L;
    const double inv = 1.0 / row[w];
    for (std::size_t l = 0; l < L; ++l) xi[l] *= inv;
    for (std::size_t k = lo; k < i; ++k) {
      const double lik = row[k + w - i];
      double* yk = rhs + k * L;
      for (std::size_t l = 0; l < L; ++l) yk[l] -= lik * xi[l];
    }
  }
}

void stencil_apply_block(const StencilView& s, const double* v, double* out) {
  const std::size_t side = s.side;
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      const std::size_t i = r * side + c;
      const double* vi = v + i * L;
      double* oi = out + i * L;
      const double d = s.diag[i];
      for (std::size_t l = 0; l < L; ++l) oi[l] = d * vi[l];
      if (c + 1 < side) {
        const double t = s.east[i];
        const double* vn = v + (i + 1) * L;
        for (std::size_t l = 0; l < L; ++l) oi[l] -= t * vn[l];
      }
      if (c > 0) {
        const double t = s.east[i - 1];
        const double* vn = v + (i - 1) * L;
        for (std::size_t l = 0; l < L; ++l) oi[l] -= t * vn[l];
      }
      if (r + 1 < side) {
        const double t = s.south[i];
        const double* vn = v + (i + side) * L;
        for (std::size_t l = 0; l < L; ++l) oi[l] -= t * vn[l];
      }
      if (r > 0) {
        const double t = s.south[i - side];
        const double* vn = v + (i - side) * L;
        for (std::size_t l = 0; l < L; ++l) oi[l] -= t * vn[l];
      }
    }
  }
}

void block_dot(const double* a, const double* b, std::size_t rows, double* out) {
  std::fill(out, out + L, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t l = 0; l < L; ++l) out[l] += a[i * L + l] * b[i * L + l];
}

void block_axpy(const double* alpha, const double* x, double* y, std::size_t rows) {
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t l = 0; l < L; ++l) y[i * L + l] += alpha[l] * x[i * L + l];
}

void block_xpby(const double* x, const double* beta, double* y, std::size_t rows) {
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t l = 0; l < L; ++l) y[i * L + l] = x[i * L + l] + beta[l] * y[i * L + l];
}

void block_row_scale(const double* scale, const double* x, double* y, std::size_t rows) {
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t l = 0; l < L; ++l) y[i * L + l] = scale[i] * x[i * L + l];
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      Isa::scalar,      dot,        squared_distance, rank_one_update, band_cholesky,
      band_forward,     band_backward, band_solve_block, stencil_apply_block, block_dot,
      block_axpy,       block_xpby, block_row_scale,
  };
  return table;
}

}  // namespace eitmc::simd
