#include <Eigen/Dense>

#include "eitmc/errors.hpp"
#include "eitmc/simd.hpp"
#include "support.hpp"

using namespace eitmc;
using testing::max_abs_diff;
using testing::random_vector;

namespace {

constexpr std::size_t L = simd::kLanes;

// Random SPD band matrix of order n and half-width w in band storage.
std::vector<double> random_band(std::size_t n, std::size_t w, unsigned seed) {
  auto v = random_vector(n * (w + 1), seed, -1.0, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < w; ++k)
      if (k + i < w) v[i * (w + 1) + k] = 0.0;
    v[i * (w + 1) + w] = 2.0 * static_cast<double>(w) + 1.0;
  }
  return v;
}

Eigen::MatrixXd band_to_dense(const std::vector<double>& band, std::size_t n, std::size_t w) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = (i > w ? i - w : 0); j <= i; ++j) {
      const double v = band[i * (w + 1) + (j + w - i)];
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  return a;
}

std::vector<const simd::KernelTable*> tables() {
  std::vector<const simd::KernelTable*> t{&simd::scalar_kernels()};
  if (simd::isa_supported(simd::Isa::avx2)) t.push_back(&simd::kernels_for(simd::Isa::avx2));
  return t;
}

}  // namespace

TEST_CASE("scalar table is always available and labelled") {
  CHECK(simd::isa_supported(simd::Isa::scalar));
  CHECK(simd::kernels_for(simd::Isa::scalar).isa == simd::Isa::scalar);
  CHECK(simd::isa_name(simd::Isa::avx2) == "avx2");
  if (!simd::isa_supported(simd::Isa::avx2)) CHECK_THROWS_AS(simd::kernels_for(simd::Isa::avx2), UnsupportedOperation);
}

TEST_CASE("band Cholesky agrees with a dense factorization") {
  for (const auto* k : tables()) {
    CAPTURE(simd::isa_name(k->isa));
    for (std::size_t w : {1u, 3u, 12u}) {
      const std::size_t n = 37;
      auto band = random_band(n, w, 11 + static_cast<unsigned>(w));
      const Eigen::MatrixXd a = band_to_dense(band, n, w);
      REQUIRE(k->band_cholesky(band.data(), n, w) == -1);
      const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(a).matrixL();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = (i > w ? i - w : 0); j <= i; ++j)
          CHECK(band[i * (w + 1) + (j + w - i)] ==
                doctest::Approx(l(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))).epsilon(1e-12));

      auto b = random_vector(n, 5);
      Eigen::VectorXd rhs = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(n));
      const Eigen::VectorXd x = a.llt().solve(rhs);
      k->band_forward(band.data(), n, w, b.data());
      k->band_backward(band.data(), n, w, b.data());
      for (std::size_t i = 0; i < n; ++i) CHECK(b[i] == doctest::Approx(x(static_cast<Eigen::Index>(i))).epsilon(1e-10));
    }
  }
}

TEST_CASE("band Cholesky reports the failing pivot") {
  for (const auto* k : tables()) {
    // n = 3, w = 1, diagonal (4, 1, 0): the last pivot is zero.
    std::vector<double> band{0.0, 4.0, 1.0, 1.0, 0.0, 0.0};
    CHECK(k->band_cholesky(band.data(), 3, 1) == 2);
  }
}

TEST_CASE("AVX2 kernels match the scalar reference") {
  if (!simd::isa_supported(simd::Isa::avx2)) return;
  const auto& s = simd::scalar_kernels();
  const auto& v = simd::kernels_for(simd::Isa::avx2);
  const double tol = 1e-12;

  SUBCASE("dot and squared distance for every tail length") {
    for (std::size_t n = 0; n < 70; ++n) {
      const auto a = random_vector(n, 1), b = random_vector(n, 2);
      CHECK(v.dot(a.data(), b.data(), n) == doctest::Approx(s.dot(a.data(), b.data(), n)).epsilon(tol));
      CHECK(v.squared_distance(a.data(), b.data(), n) ==
            doctest::Approx(s.squared_distance(a.data(), b.data(), n)).epsilon(tol));
    }
  }
  SUBCASE("rank-one update") {
    for (std::size_t n : {1u, 5u, 16u, 33u}) {
      auto m1 = random_vector(n * n, 3), m2 = m1;
      const auto d = random_vector(n, 4);
      s.rank_one_update(m1.data(), d.data(), 0.75, 0.2, n);
      v.rank_one_update(m2.data(), d.data(), 0.75, 0.2, n);
      CHECK(max_abs_diff(m1, m2) < tol);
    }
  }
  SUBCASE("band factor and solves") {
    for (std::size_t w : {1u, 4u, 24u}) {
      const std::size_t n = 60;
      auto b1 = random_band(n, w, 7), b2 = b1;
      REQUIRE(s.band_cholesky(b1.data(), n, w) == -1);
      REQUIRE(v.band_cholesky(b2.data(), n, w) == -1);
      CHECK(max_abs_diff(b1, b2) < tol);
      auto r1 = random_vector(n, 8), r2 = r1;
      s.band_forward(b1.data(), n, w, r1.data());
      v.band_forward(b1.data(), n, w, r2.data());
      CHECK(max_abs_diff(r1, r2) < 1e-10);
      s.band_backward(b1.data(), n, w, r1.data());
      v.band_backward(b1.data(), n, w, r2.data());
      CHECK(max_abs_diff(r1, r2) < 1e-10);
      auto k1 = random_vector(n * L, 9), k2 = k1;
      s.band_solve_block(b1.data(), n, w, k1.data());
      v.band_solve_block(b1.data(), n, w, k2.data());
      CHECK(max_abs_diff(k1, k2) < 1e-10);
    }
  }
  SUBCASE("stencil and block vector operations") {
    const std::size_t side = 7, m = side * side;
    const auto east = random_vector(m, 10, 0.5, 2.0), south = random_vector(m, 11, 0.5, 2.0);
    const auto diag = random_vector(m, 12, 4.0, 8.0);
    const simd::StencilView st{side, east.data(), south.data(), diag.data()};
    const auto x = random_vector(m * L, 13), y0 = random_vector(m * L, 14);
    std::vector<double> o1(m * L), o2(m * L);
    s.stencil_apply_block(st, x.data(), o1.data());
    v.stencil_apply_block(st, x.data(), o2.data());
    CHECK(max_abs_diff(o1, o2) < tol);

    std::vector<double> d1(L), d2(L);
    s.block_dot(x.data(), y0.data(), m, d1.data());
    v.block_dot(x.data(), y0.data(), m, d2.data());
    CHECK(max_abs_diff(d1, d2) < tol);

    const auto coef = random_vector(L, 15);
    auto y1 = y0, y2 = y0;
    s.block_axpy(coef.data(), x.data(), y1.data(), m);
    v.block_axpy(coef.data(), x.data(), y2.data(), m);
    CHECK(max_abs_diff(y1, y2) < tol);
    s.block_xpby(x.data(), coef.data(), y1.data(), m);
    v.block_xpby(x.data(), coef.data(), y2.data(), m);
    CHECK(max_abs_diff(y1, y2) < tol);
    s.block_row_scale(diag.data(), x.data(), y1.data(), m);
    v.block_row_scale(diag.data(), x.data(), y2.data(), m);
    CHECK(max_abs_diff(y1, y2) < tol);
  }
}

TEST_CASE("stencil of a constant vector vanishes when the diagonal is the face sum") {
  const std::size_t side = 4, m = side * side;
  std::vector<double> east(m, 1.5), south(m, 0.5), diag(m, 0.0);
  for (std::size_t r = 0; r < side; ++r)
    for (std::size_t c = 0; c < side; ++c) {
      const std::size_t i = r * side + c;
      if (c + 1 < side) diag[i] += east[i], diag[i + 1] += east[i];
      if (r + 1 < side) diag[i] += south[i], diag[i + side] += south[i];
    }
  const simd::StencilView st{side, east.data(), south.data(), diag.data()};
  std::vector<double> ones(m * L, 1.0), out(m * L);
  for (const auto* k : tables()) {
    k->stencil_apply_block(st, ones.data(), out.data());
    CHECK(testing::max_abs(out) < 1e-14);
  }
}
