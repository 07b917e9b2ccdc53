#include <Eigen/Dense>

#include <chrono>

#include "eitmc/errors.hpp"
#include "eitmc/forward_solver.hpp"
#include "forward_oracle.hpp"
#include "support.hpp"

using namespace eitmc;
using testing::max_abs_diff;
using testing::random_vector;
using testing::dense_oracle;
using testing::oracle_electrodes;
using testing::rel_diff;

namespace {

ConductivityField random_field(std::size_t side, unsigned seed) {
  return ConductivityField(GridSpec(side), random_vector(side * side, seed, 2.5, 4.5));
}

// Quarter turn counter-clockwise: cell (r, c) moves to (n-1-c, r).
ConductivityField rotate(const ConductivityField& f) {
  const std::size_t n = f.grid().side();
  std::vector<double> v(n * n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) v[(n - 1 - c) * n + r] = f.at(r, c);
  return ConductivityField(f.grid(), v);
}

}  // namespace

TEST_CASE("drive patterns carry zero net current") {
  for (std::size_t p = 0; p < kElectrodes; ++p) {
    const auto d = DrivePattern::standard(p);
    double s = 0.0;
    for (double c : d.currents) s += c;
    CHECK(std::abs(s) < 1e-15);
    CHECK(d.currents[p] == 1.0);
  }
  CHECK_THROWS_AS(DrivePattern::standard(16), DimensionError);
}

TEST_CASE("stiffness matrix examples") {
  SUBCASE("constant field is the scaled Neumann Laplacian") {
    const std::size_t n = 5;
    const auto k = StiffnessMatrix(ConductivityField::constant(GridSpec(n), 3.0)).to_dense();
    const std::size_t m = n * n;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) {
        const std::size_t i = r * n + c;
        const double nbrs = (r > 0) + (r + 1 < n) + (c > 0) + (c + 1 < n);
        CHECK(k[i * m + i] == doctest::Approx(3.0 * nbrs));
        if (c + 1 < n) CHECK(k[i * m + i + 1] == doctest::Approx(-3.0));
        if (r + 1 < n) CHECK(k[i * m + i + n] == doctest::Approx(-3.0));
      }
  }
  SUBCASE("symmetric with the constants in its null space") {
    const auto f = random_field(7, 3);
    const auto k = StiffnessMatrix(f).to_dense();
    const std::size_t m = 49;
    for (std::size_t i = 0; i < m; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        CHECK(k[i * m + j] == k[j * m + i]);
        row += k[i * m + j];
      }
      CHECK(std::abs(row) < 1e-12);
    }
  }
  SUBCASE("non-positive conductivity is rejected") {
    std::vector<double> v(16, 3.0);
    v[5] = 0.0;
    CHECK_THROWS_AS(StiffnessMatrix(ConductivityField(GridSpec(4), v)), DomainError);
    v[5] = -1.0;
    CHECK_THROWS_AS(solve_fine(ConductivityField(GridSpec(4), v)), DomainError);
  }
}

TEST_CASE("fine solve matches the dense oracle on a 6x6 grid") {
  for (unsigned seed : {1u, 2u, 3u}) {
    const auto f = random_field(6, seed);
    const auto v = solve_fine(f);
    CHECK(rel_diff(v.flat(), dense_oracle(f)) < 1e-10);
  }
  const auto c = ConductivityField::constant(GridSpec(6), 3.0);
  CHECK(rel_diff(solve_fine(c).flat(), dense_oracle(c)) < 1e-10);
}

TEST_CASE("voltage sign: injector is negative and dominant") {
  const auto v = solve_fine(ConductivityField::constant(GridSpec(12), 3.0));
  for (std::size_t p = 0; p < kElectrodes; ++p) {
    CHECK(v(p, p) < 0.0);
    for (std::size_t e = 0; e < kElectrodes; ++e)
      if (e != p) CHECK(std::abs(v(p, e)) < std::abs(v(p, p)));
  }
}

TEST_CASE("homogeneity for all three fidelities") {
  const auto f = random_field(12, 5);
  const auto f2 = f.scaled(2.0);
  auto check = [](const VoltageSet& a, const VoltageSet& b) {
    std::vector<double> half(a.flat().begin(), a.flat().end());
    for (auto& x : half) x *= 0.5;
    CHECK(rel_diff(b.flat(), half) < 1e-10);
  };
  check(solve_fine(f), solve_fine(f2));
  check(solve_approx(f, 25), solve_approx(f2, 25));
  check(solve_coarse(f, GridSpec(4)), solve_coarse(f2, GridSpec(4)));
  for (double c : {0.1, 7.0}) {
    const auto a = solve_fine(f), b = solve_fine(f.scaled(c));
    std::vector<double> want(a.flat().begin(), a.flat().end());
    for (auto& x : want) x /= c;
    CHECK(rel_diff(b.flat(), want) < 1e-10);
  }
}

TEST_CASE("voltage rows sum to zero") {
  for (unsigned seed = 0; seed < 4; ++seed) {
    const auto f = random_field(12, 20 + seed);
    for (const auto& v : {solve_fine(f), solve_approx(f, 10), solve_coarse(f, GridSpec(4))})
      for (std::size_t p = 0; p < kElectrodes; ++p) {
        double s = 0.0, mx = 0.0;
        for (double x : v.row(p)) s += x, mx = std::max(mx, std::abs(x));
        CHECK(std::abs(s) <= 1e-9 * mx);
      }
  }
}

TEST_CASE("quarter-turn symmetry of the constant field") {
  for (std::size_t n : {8u, 12u, 24u}) {
    const auto v = solve_fine(ConductivityField::constant(GridSpec(n), 3.0));
    for (std::size_t p = 0; p < kElectrodes; ++p)
      for (std::size_t e = 0; e < kElectrodes; ++e)
        CHECK(std::abs(v((p + 4) % 16, (e + 4) % 16) - v(p, e)) < 1e-10);
  }
  // Rotating a random field rotates electrode labels by four.
  const auto f = random_field(12, 8);
  const auto a = solve_fine(f), b = solve_fine(rotate(f));
  for (std::size_t p = 0; p < kElectrodes; ++p)
    for (std::size_t e = 0; e < kElectrodes; ++e) CHECK(std::abs(b((p + 4) % 16, (e + 4) % 16) - a(p, e)) < 1e-10);
}

TEST_CASE("transfer matrix") {
  for (unsigned seed : {0u, 1u}) {
    const auto f = seed == 0 ? ConductivityField::constant(GridSpec(12), 3.0) : random_field(12, 31);
    const auto r = transfer_matrix(f);
    for (std::size_t i = 0; i < 16; ++i)
      for (std::size_t j = 0; j < 16; ++j) CHECK(std::abs(r[i * 16 + j] - r[j * 16 + i]) < 1e-10);
    const auto v = solve_fine(f);
    for (std::size_t p = 0; p < kElectrodes; ++p) {
      const auto d = DrivePattern::standard(p);
      for (std::size_t e = 0; e < kElectrodes; ++e) {
        double s = 0.0;
        for (std::size_t j = 0; j < 16; ++j) s += r[e * 16 + j] * d.currents[j];
        CHECK(std::abs(s - v(p, e)) < 1e-10);
      }
    }
  }
}

TEST_CASE("iterative solve converges to the direct solve") {
  const auto f = random_field(12, 40);
  const auto exact = solve_fine(f);
  const double scale = exact.max_abs();
  CHECK(max_abs_diff(solve_approx(f, 1440).flat(), exact.flat()) < 1e-8 * scale);

  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t it : {1u, 2u, 4u, 8u, 16u, 32u, 64u}) {
    const auto v = solve_approx(f, it);
    double e2 = 0.0;
    for (std::size_t i = 0; i < kData; ++i) e2 += std::pow(v.flat()[i] - exact.flat()[i], 2);
    CHECK(e2 <= prev);
    prev = e2;
  }
  CHECK_THROWS_AS(solve_approx(f, 0), DomainError);
}

TEST_CASE("coarse solve is the direct solve of the coarsened field") {
  const auto f = random_field(12, 41);
  const auto c = solve_coarse(f, GridSpec(4));
  CHECK(max_abs_diff(c.flat(), solve_fine(coarsen(f, GridSpec(4))).flat()) == 0.0);
  const auto k = ConductivityField::constant(GridSpec(12), 3.0);
  CHECK(max_abs_diff(solve_coarse(k, GridSpec(4)).flat(), solve_fine(ConductivityField::constant(GridSpec(4), 3.0)).flat()) == 0.0);
  CHECK(max_abs_diff(solve_coarse(k, GridSpec(4)).flat(), solve_fine(k).flat()) > 1e-3);
}

TEST_CASE("grid self-convergence for the constant field") {
  auto at = [](std::size_t n) { return solve_fine(ConductivityField::constant(GridSpec(n), 3.0)); };
  const auto a = at(12), b = at(24), c = at(48);
  double d1 = 0.0, d2 = 0.0;
  for (std::size_t i = 0; i < kData; ++i) {
    d1 += std::pow(a.flat()[i] - b.flat()[i], 2);
    d2 += std::pow(b.flat()[i] - c.flat()[i], 2);
  }
  CHECK(d2 < d1);
}

TEST_CASE("solves are bit-reproducible and ISA independent") {
  const auto f = random_field(24, 42);
  CHECK(max_abs_diff(solve_fine(f).flat(), solve_fine(f).flat()) == 0.0);
  CHECK(max_abs_diff(solve_approx(f, 30).flat(), solve_approx(f, 30).flat()) == 0.0);
  if (!simd::isa_supported(simd::Isa::avx2)) return;
  const auto lay = ElectrodeLayout::standard(f.grid());
  const SolverHandle s(f, lay, simd::scalar_kernels()), v(f, lay, simd::kernels_for(simd::Isa::avx2));
  const auto a = s.solve_direct(), b = v.solve_direct();
  CHECK(rel_diff(a.flat(), b.flat()) < 1e-12);
  CHECK(rel_diff(s.solve_iterative(40).flat(), v.solve_iterative(40).flat()) < 1e-10);
}

TEST_CASE("coarse solve is much cheaper than the fine solve at side 24 vs 8") {
  const auto f = random_field(24, 43);
  auto time = [&](auto&& fn) {
    double best = 1e30;
    for (int rep = 0; rep < 5; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      for (int i = 0; i < 20; ++i) fn();
      best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
  };
  const double tf = time([&] { (void)solve_fine(f); });
  const double tc = time([&] { (void)solve_coarse(f, GridSpec(8)); });
  CHECK(tc * 20.0 <= tf);
}

TEST_CASE("forward model refines, coarsens and counts calls") {
  ForwardModelOptions o;
  o.refine = 2;
  o.coarse_side = 4;
  o.approx_iters = 12;
  const ForwardModel model(GridSpec(6), o);
  CHECK(model.solve_grid().side() == 12);
  const auto f = random_field(6, 44);
  const auto r = refine(f, 2);
  CHECK(max_abs_diff(model.evaluate(f, Fidelity::fine).flat(), solve_fine(r).flat()) == 0.0);
  CHECK(max_abs_diff(model.evaluate(f, Fidelity::approx).flat(), solve_approx(r, 12).flat()) == 0.0);
  CHECK(max_abs_diff(model.evaluate(f, Fidelity::coarse).flat(), solve_coarse(r, GridSpec(4)).flat()) == 0.0);
  CHECK(model.calls(Fidelity::fine) == 1);
  CHECK(model.calls(Fidelity::approx) == 1);
  CHECK(model.calls(Fidelity::coarse) == 1);
  model.reset_calls();
  CHECK(model.calls(Fidelity::fine) == 0);
  CHECK_THROWS_AS(model.evaluate(random_field(4, 1), Fidelity::fine), DimensionError);
  ForwardModelOptions bad;
  bad.coarse_side = 5;
  CHECK_THROWS_AS(ForwardModel(GridSpec(12), bad), DimensionError);
}

TEST_CASE("voltage CSV round trip") {
  const auto dir = testing::scratch_dir("volts");
  const auto v = solve_fine(random_field(8, 45));
  save_voltages(v, dir / "v.csv");
  CHECK(max_abs_diff(load_voltages(dir / "v.csv").flat(), v.flat()) == 0.0);
  CHECK_THROWS_AS(parse_voltages("pattern,e0\n0,1\n", "short.csv"), ParseError);
  CHECK_THROWS_AS(VoltageSet(std::vector<double>(5)), DimensionError);
}
