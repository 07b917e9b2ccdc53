#include "eitmc/field_grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "eitmc/errors.hpp"
#include "eitmc/io.hpp"

namespace eitmc {

GridSpec::GridSpec(std::size_t side) : side_(side) {
  if (side < 2) throw DimensionError("grid side must be at least 2, got " + std::to_string(side));
}

std::array<double, 2> GridSpec::center(std::size_t cell) const {
  const double h = cell_size();
  const std::size_t r = cell / side_, c = cell % side_;
  return {(static_cast<double>(c) + 0.5) * h, 1.0 - (static_cast<double>(r) + 0.5) * h};
}

ConductivityField::ConductivityField(GridSpec grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.cells())
    throw DimensionError("field has " + std::to_string(values_.size()) + " values, grid needs " +
                         std::to_string(grid_.cells()));
}

ConductivityField ConductivityField::constant(GridSpec grid, double value) {
  return ConductivityField(grid, std::vector<double>(grid.cells(), value));
}

ConductivityField ConductivityField::scaled(double c) const {
  std::vector<double> v(values_);
  for (double& x : v) x *= c;
  return ConductivityField(grid_, std::move(v));
}

ElectrodeLayout ElectrodeLayout::standard(const GridSpec& grid) {
  ElectrodeLayout layout(grid);
  const std::size_t n = grid.side();
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t j = 0; j < 4; ++j) {
      const std::size_t e = 4 * s + j;
      const std::size_t k = (2 * j + 1) * n / 8;
      const double t = static_cast<double>(2 * j + 1) / 8.0;
      std::size_t row = 0, col = 0;
      std::array<double, 2> p{};
      switch (s) {
        case 0:  // bottom, left to right
          row = n - 1, col = k, p = {t, 0.0};
          break;
        case 1:  // right, bottom to top
          row = n - 1 - k, col = n - 1, p = {1.0, t};
          break;
        case 2:  // top, right to left
          row = 0, col = n - 1 - k, p = {1.0 - t, 1.0};
          break;
        default:  // left, top to bottom
          row = k, col = 0, p = {0.0, 1.0 - t};
          break;
      }
      layout.cells_[e] = grid.index(row, col);
      layout.positions_[e] = p;
    }
  }
  return layout;
}

ConductivityField coarsen(const ConductivityField& fine, const GridSpec& coarse, CoarsenRule rule) {
  const std::size_t fs = fine.grid().side(), cs = coarse.side();
  if (fs % cs != 0)
    throw DimensionError("coarse side " + std::to_string(cs) + " does not divide fine side " +
                         std::to_string(fs));
  const std::size_t f = fs / cs;
  if (f == 1) return fine;
  std::vector<double> out(coarse.cells(), 0.0);
  const bool harmonic = rule == CoarsenRule::harmonic;
  for (std::size_t r = 0; r < fs; ++r) {
    const double* row = fine.values().data() + r * fs;
    double* dst = out.data() + (r / f) * cs;
    for (std::size_t bc = 0; bc < cs; ++bc) {
      double acc = 0.0;
      for (std::size_t c = bc * f; c < (bc + 1) * f; ++c) acc += harmonic ? 1.0 / row[c] : row[c];
      dst[bc] += acc;
    }
  }
  const double count = static_cast<double>(f * f);
  for (double& v : out) v = rule == CoarsenRule::arithmetic ? v / count : count / v;
  return ConductivityField(coarse, std::move(out));
}

ConductivityField refine(const ConductivityField& coarse, std::size_t factor) {
  if (factor == 0) throw DimensionError("refinement factor must be positive");
  if (factor == 1) return coarse;
  const std::size_t cs = coarse.grid().side();
  const GridSpec fine(cs * factor);
  std::vector<double> out(fine.cells());
  for (std::size_t r = 0; r < fine.side(); ++r)
    for (std::size_t c = 0; c < fine.side(); ++c) out[fine.index(r, c)] = coarse.at(r / factor, c / factor);
  return ConductivityField(fine, std::move(out));
}

ConductivityField parse_field(const std::string& text, const std::string& source) {
  const auto ls = io::lines(text);
  std::size_t li = 0;
  auto next_line = [&]() -> std::vector<std::string> {
    while (li < ls.size()) {
      auto toks = io::split_ws(ls[li++]);
      if (!toks.empty()) return toks;
    }
    return {};
  };
  const auto header = next_line();
  if (header.size() != 2) throw ParseError(source + ": line 1: expected 'rows cols'");
  const double rows_d = io::parse_double(header[0], source + ": line 1");
  const double cols_d = io::parse_double(header[1], source + ": line 1");
  if (rows_d < 1 || cols_d < 1 || rows_d != std::floor(rows_d) || cols_d != std::floor(cols_d))
    throw ParseError(source + ": line 1: bad dimensions");
  const auto rows = static_cast<std::size_t>(rows_d), cols = static_cast<std::size_t>(cols_d);
  if (rows != cols) throw DimensionError(source + ": field must be square, got " + header[0] + "x" + header[1]);
  std::vector<double> values;
  values.reserve(rows * cols);
  std::size_t got = 0;
  while (got < rows) {
    const auto toks = next_line();
    if (toks.empty())
      throw ParseError(source + ": expected " + std::to_string(rows) + " rows, found " + std::to_string(got));
    const std::string where = source + ": line " + std::to_string(li);
    if (toks.size() != cols)
      throw ParseError(where + ": expected " + std::to_string(cols) + " values, found " +
                       std::to_string(toks.size()));
    for (const auto& t : toks) values.push_back(io::parse_double(t, where));
    ++got;
  }
  if (!next_line().empty()) throw ParseError(source + ": line " + std::to_string(li) + ": trailing data after " + std::to_string(rows) + " rows");
  return ConductivityField(GridSpec(rows), std::move(values));
}

ConductivityField load_field(const std::filesystem::path& path) {
  return parse_field(io::read_text(path), path.string());
}

std::string format_field(const ConductivityField& field) {
  const std::size_t n = field.grid().side();
  std::ostringstream ss;
  ss << n << ' ' << n << '\n';
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) ss << (c ? " " : "") << io::format_double(field.at(r, c));
    ss << '\n';
  }
  return ss.str();
}

void save_field(const ConductivityField& field, const std::filesystem::path& path) {
  io::write_atomic(path, format_field(field));
}

void save_pgm(const ConductivityField& field, const std::filesystem::path& path, double lo, double hi) {
  const std::size_t n = field.grid().side();
  std::ostringstream ss;
  ss << "P2\n" << n << ' ' << n << "\n255\n";
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const double t = std::clamp((field.at(r, c) - lo) / (hi - lo), 0.0, 1.0);
      ss << (c ? " " : "") << static_cast<int>(std::lround(255.0 * t));
    }
    ss << '\n';
  }
  io::write_atomic(path, ss.str());
}

}  // namespace eitmc
