#include <fstream>
#include <set>

#include "eitmc/errors.hpp"
#include "eitmc/field_grid.hpp"
#include "eitmc/io.hpp"
#include "support.hpp"

using namespace eitmc;

TEST_CASE("grid geometry") {
  CHECK_THROWS_AS(GridSpec(1), DimensionError);
  const GridSpec g(4);
  CHECK(g.cells() == 16);
  const auto c0 = g.center(0);
  CHECK(c0[0] == doctest::Approx(0.125));
  CHECK(c0[1] == doctest::Approx(0.875));
  const auto c15 = g.center(15);
  CHECK(c15[0] == doctest::Approx(0.875));
  CHECK(c15[1] == doctest::Approx(0.125));
}

TEST_CASE("electrodes on a 24 grid sit at cells 3, 9, 15, 21 of each side") {
  const GridSpec g(24);
  const auto lay = ElectrodeLayout::standard(g);
  const std::size_t offs[4] = {3, 9, 15, 21};
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(lay.cell(j) == g.index(23, offs[j]));           // bottom, left to right
    CHECK(lay.cell(4 + j) == g.index(23 - offs[j], 23));  // right, bottom to top
    CHECK(lay.cell(8 + j) == g.index(0, 23 - offs[j]));   // top, right to left
    CHECK(lay.cell(12 + j) == g.index(offs[j], 0));       // left, top to bottom
  }
  std::set<std::size_t> distinct(lay.cells().begin(), lay.cells().end());
  CHECK(distinct.size() == kElectrodes);
  // Every electrode point lies inside the boundary cell it is attached to.
  for (std::size_t e = 0; e < kElectrodes; ++e) {
    const auto p = lay.positions()[e];
    const auto c = g.center(lay.cell(e));
    CHECK(std::abs(p[0] - c[0]) <= 0.5 / 24 + 1e-12);
    CHECK(std::abs(p[1] - c[1]) <= 0.5 / 24 + 1e-12);
  }
}

TEST_CASE("coarsen examples") {
  const auto c = coarsen(ConductivityField::constant(GridSpec(24), 3.0), GridSpec(8));
  for (double v : c.values()) CHECK(v == 3.0);

  std::vector<double> v(36, 4.5);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t cc = 0; cc < 3; ++cc) v[r * 6 + cc] = 2.5;
  const auto c2 = coarsen(ConductivityField(GridSpec(6), v), GridSpec(2));
  CHECK(c2.at(0, 0) == 2.5);
  CHECK(c2.at(0, 1) == 4.5);
  CHECK(c2.at(1, 0) == 4.5);
  CHECK(c2.at(1, 1) == 4.5);

  CHECK_THROWS_AS(coarsen(ConductivityField::constant(GridSpec(6), 3.0), GridSpec(4)), DimensionError);
}

TEST_CASE("coarsening the shipped truth image matches a direct block average") {
  const auto truth = load_field(std::filesystem::path(EITMC_SOURCE_DIR) / "data/truth24.txt");
  REQUIRE(truth.grid().side() == 24);
  std::set<double> levels(truth.values().begin(), truth.values().end());
  CHECK(levels == std::set<double>{3.0, 4.0});
  const auto c = coarsen(truth, GridSpec(8));
  for (std::size_t R = 0; R < 8; ++R)
    for (std::size_t C = 0; C < 8; ++C) {
      double s = 0.0;
      for (std::size_t r = 3 * R; r < 3 * R + 3; ++r)
        for (std::size_t cc = 3 * C; cc < 3 * C + 3; ++cc) s += truth.at(r, cc);
      CHECK(c.at(R, C) == doctest::Approx(s / 9.0).epsilon(1e-14));
    }
}

TEST_CASE("coarsen properties") {
  for (unsigned seed = 0; seed < 5; ++seed) {
    const auto v = testing::random_vector(144, seed, 2.5, 4.5);
    const ConductivityField f(GridSpec(12), v);
    for (auto rule : {CoarsenRule::arithmetic, CoarsenRule::harmonic}) {
      const auto same = coarsen(f, GridSpec(12), rule);
      CHECK(testing::max_abs_diff(same.values(), f.values()) == 0.0);
      for (std::size_t side : {2u, 3u, 4u, 6u}) {
        const auto c = coarsen(f, GridSpec(side), rule);
        for (double x : c.values()) {
          CHECK(x >= 2.5);
          CHECK(x <= 4.5);
        }
        if (rule == CoarsenRule::arithmetic) {
          double a = 0.0, b = 0.0;
          for (double x : f.values()) a += x;
          for (double x : c.values()) b += x;
          CHECK(std::abs(a / 144.0 - b / static_cast<double>(side * side)) < 1e-12);
        }
      }
    }
  }
  // Harmonic block mean of {1, 3} pairs.
  const ConductivityField f(GridSpec(2), {1.0, 3.0, 1.0, 3.0});
  CHECK(coarsen(f, GridSpec(2), CoarsenRule::harmonic)[0] == 1.0);
}

TEST_CASE("refine replicates blocks and coarsen undoes it") {
  const auto v = testing::random_vector(9, 3, 2.5, 4.5);
  const ConductivityField f(GridSpec(3), v);
  const auto r = refine(f, 4);
  CHECK(r.grid().side() == 12);
  CHECK(r.at(5, 11) == f.at(1, 2));
  for (auto rule : {CoarsenRule::arithmetic, CoarsenRule::harmonic})
    CHECK(testing::max_abs_diff(coarsen(r, GridSpec(3), rule).values(), f.values()) < 1e-14);
}

TEST_CASE("field text round trip and malformed input") {
  const auto dir = testing::scratch_dir("field");
  const ConductivityField f(GridSpec(24), testing::random_vector(576, 9, 2.5, 4.5));
  save_field(f, dir / "f.txt");
  const auto g = load_field(dir / "f.txt");
  CHECK(testing::max_abs_diff(f.values(), g.values()) == 0.0);

  try {
    parse_field("3 3\n1 2 3\n4 5 6\n", "short.txt");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("expected 3 rows") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_field("2 3\n1 2 3\n4 5 6\n", "rect.txt"), DimensionError);
  CHECK_THROWS_AS(parse_field("2 2\n1 x\n3 4\n", "bad.txt"), ParseError);
  CHECK_THROWS_AS(parse_field("2 2\n1 2 3\n3 4\n", "wide.txt"), ParseError);
  CHECK_THROWS_AS(load_field(dir / "missing.txt"), ConfigError);
}

TEST_CASE("pgm export maps [2.5, 4.5] onto 0..255") {
  const auto dir = testing::scratch_dir("pgm");
  save_pgm(ConductivityField(GridSpec(2), {2.5, 3.5, 4.5, 9.0}), dir / "f.pgm");
  const auto toks = io::split_ws(io::read_text(dir / "f.pgm"));
  REQUIRE(toks.size() == 8);
  CHECK(toks[0] == "P2");
  CHECK(toks[3] == "255");
  CHECK(toks[4] == "0");
  CHECK(toks[5] == "128");
  CHECK(toks[6] == "255");
  CHECK(toks[7] == "255");
}

TEST_CASE("number formatting round-trips") {
  for (double v : testing::random_vector(200, 4, -1e6, 1e6)) CHECK(io::parse_double(io::format_double(v), "t") == v);
  CHECK(io::format_double(std::nan("")) == "nan");
  CHECK(std::isnan(io::parse_double("nan", "t")));
  CHECK_THROWS_AS(io::parse_double("1.5x", "t"), ParseError);
}
