// AVX2/FMA variants. This translation unit is the only one compiled with
// -mavx2 -mfma; nothing here may be called unless the CPU reports both.

#include <immintrin.h>

#include <cmath>
#include <vector>

#include "eitmc/simd.hpp"

namespace eitmc::simd {
namespace {

constexpr std::size_t L = kLanes;

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), s1);
    s2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), s2);
    s3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), s3);
  }
  for (; i + 4 <= n; i += 4) s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
  double s = hsum(_mm256_add_pd(_mm256_add_pd(s0, s1), _mm256_add_pd(s2, s3)));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
    s0 = _mm256_fmadd_pd(d0, d0, s0);
    s1 = _mm256_fmadd_pd(d1, d1, s1);
  }
  double s = hsum(_mm256_add_pd(s0, s1));
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void axpy_neg(double* y, const double* a, double x, std::size_t n) {
  const __m256d xv = _mm256_set1_pd(x);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4)
    _mm256_storeu_pd(y + k, _mm256_fnmadd_pd(_mm256_loadu_pd(a + k), xv, _mm256_loadu_pd(y + k)));
  for (; k < n; ++k) y[k] -= a[k] * x;
}

void rank_one_update(double* s, const double* d, double keep, double add, std::size_t n) {
  const __m256d kv = _mm256_set1_pd(keep);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = add * d[i];
    const __m256d cv = _mm256_set1_pd(c);
    double* row = s + i * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const __m256d r = _mm256_mul_pd(kv, _mm256_loadu_pd(row + j));
      _mm256_storeu_pd(row + j, _mm256_fmadd_pd(cv, _mm256_loadu_pd(d + j), r));
    }
    for (; j < n; ++j) row[j] = keep * row[j] + c * d[j];
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
      const double s = row_i[j + w - i] - dot(row_i + (lo + w - i), row_j + (lo + w - j), j - lo);
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
    b[i] = (b[i] - dot(row + (lo + w - i), b + lo, i - lo)) / row[w];
  }
}

void band_backward(const double* band, std::size_t n, std::size_t w, double* b) {
  const std::size_t stride = w + 1;
  for (std::size_t i = n; i-- > 0;) {
    const std::size_t lo = i > w ? i - w : 0;
    const double* row = band + i * stride;
    const double xi = b[i] / row[w];
    b[i] = xi;
    axpy_neg(b + lo, row + (lo + w - i), xi, i - lo);
  }
}

struct Lane16 {
  __m256d v[4];
};

inline Lane16 load16(const double* p) {
  return {{_mm256_loadu_pd(p), _mm256_loadu_pd(p + 4), _mm256_loadu_pd(p + 8), _mm256_loadu_pd(p + 12)}};
}

inline void store16(double* p, const Lane16& x) {
  _mm256_storeu_pd(p, x.v[0]);
  _mm256_storeu_pd(p + 4, x.v[1]);
  _mm256_storeu_pd(p + 8, x.v[2]);
  _mm256_storeu_pd(p + 12, x.v[3]);
}

inline void fnmadd16(Lane16& acc, __m256d c, const double* p) {
  acc.v[0] = _mm256_fnmadd_pd(c, _mm256_loadu_pd(p), acc.v[0]);
  acc.v[1] = _mm256_fnmadd_pd(c, _mm256_loadu_pd(p + 4), acc.v[1]);
  acc.v[2] = _mm256_fnmadd_pd(c, _mm256_loadu_pd(p + 8), acc.v[2]);
  acc.v[3] = _mm256_fnmadd_pd(c, _mm256_loadu_pd(p + 12), acc.v[3]);
}

inline void scale16(Lane16& acc, __m256d c) {
  for (auto& v : acc.v) v = _mm256_mul_pd(v, c);
}

void band_solve_block(const double* band, std::size_t n, std::size_t w, double* rhs) {
  const std::size_t stride = w + 1;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i > w ? i - w : 0;
    const double* row = band + i * stride;
    Lane16 acc = load16(rhs + i * L);
    for (std::size_t k = lo; k < i; ++k) fnmadd16(acc, _mm256_set1_pd(row[k + w - i]), rhs + k * L);
    scale16(acc, _mm256_set1_pd(1.0 / row[w]));
    store16(rhs + i * L, acc);
  }
  for (std::size_t i = n; i-- > 0;) {
    const std::size_t lo = i > w ? i - w : 0;
    const double* row = band + i * stride;
    Lane16 xi = load16(rhs + i * L);
    scale16(xi, _mm256_set1_pd(1.0 / row[w]));
    store16(rhs + i * L, xi);
    for (std::size_t k = lo; k < i; ++k) {
      const __m256d c = _mm256_set1_pd(row[k + w - i]);
      double* yk = rhs + k * L;
      for (int q = 0; q < 4; ++q)
        _mm256_storeu_pd(yk + 4 * q, _mm256_fnmadd_pd(c, xi.v[q], _mm256_loadu_pd(yk + 4 * q)));
    }
  }
}

void stencil_apply_block(const StencilView& s, const double* v, double* out) {
  const std::size_t side = s.side;
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      const std::size_t i = r * side + c;
      Lane16 acc = load16(v + i * L);
      scale16(acc, _mm256_set1_pd(s.diag[i]));
      if (c + 1 < side) fnmadd16(acc, _mm256_set1_pd(s.east[i]), v + (i + 1) * L);
      if (c > 0) fnmadd16(acc, _mm256_set1_pd(s.east[i - 1]), v + (i - 1) * L);
      if (r + 1 < side) fnmadd16(acc, _mm256_set1_pd(s.south[i]), v + (i + side) * L);
      if (r > 0) fnmadd16(acc, _mm256_set1_pd(s.south[i - side]), v + (i - side) * L);
      store16(out + i * L, acc);
    }
  }
}

void block_dot(const double* a, const double* b, std::size_t rows, double* out) {
  Lane16 acc{{_mm256_setzero_pd(), _mm256_setzero_pd(), _mm256_setzero_pd(), _mm256_setzero_pd()}};
  for (std::size_t i = 0; i < rows; ++i) {
    const double* pa = a + i * L;
    const double* pb = b + i * L;
    for (int q = 0; q < 4; ++q)
      acc.v[q] = _mm256_fmadd_pd(_mm256_loadu_pd(pa + 4 * q), _mm256_loadu_pd(pb + 4 * q), acc.v[q]);
  }
  store16(out, acc);
}

void block_axpy(const double* alpha, const double* x, double* y, std::size_t rows) {
  const Lane16 a = load16(alpha);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* px = x + i * L;
    double* py = y + i * L;
    for (int q = 0; q < 4; ++q)
      _mm256_storeu_pd(py + 4 * q, _mm256_fmadd_pd(a.v[q], _mm256_loadu_pd(px + 4 * q), _mm256_loadu_pd(py + 4 * q)));
  }
}

void block_xpby(const double* x, const double* beta, double* y, std::size_t rows) {
  const Lane16 b = load16(beta);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* px = x + i * L;
    double* py = y + i * L;
    for (int q = 0; q < 4; ++q)
      _mm256_storeu_pd(py + 4 * q, _mm256_fmadd_pd(b.v[q], _mm256_loadu_pd(py + 4 * q), _mm256_loadu_pd(px + 4 * q)));
  }
}

void block_row_scale(const double* scale, const double* x, double* y, std::size_t rows) {
  for (std::size_t i = 0; i < rows; ++i) {
    const __m256d c = _mm256_set1_pd(scale[i]);
    for (int q = 0; q < 4; ++q)
      _mm256_storeu_pd(y + i * L + 4 * q, _mm256_mul_pd(c, _mm256_loadu_pd(x + i * L + 4 * q)));
  }
}

}  // namespace

const KernelTable& avx2_kernel_table() {
  static const KernelTable table{
      Isa::avx2,    dot,           squared_distance, rank_one_update,     band_cholesky,
      band_forward, band_backward, band_solve_block, stencil_apply_block, block_dot,
      block_axpy,   block_xpby,    block_row_scale,
  };
  return table;
}

}  // namespace eitmc::simd
