#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace eitmc {

/// Square lattice over the unit square with `side` cells per edge.
class GridSpec {
 public:
  explicit GridSpec(std::size_t side);

  std::size_t side() const { return side_; }
  std::size_t cells() const { return side_ * side_; }
  double cell_size() const { return 1.0 / static_cast<double>(side_); }
  std::size_t index(std::size_t row, std::size_t col) const { return row * side_ + col; }

  /// Cell center in image coordinates: x to the right, y upward, row 0 at the top.
  std::array<double, 2> center(std::size_t cell) const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  std::size_t side_;
};

/// Per-cell conductivities, row-major, (row 0, col 0) at the top-left.
class ConductivityField {
 public:
  ConductivityField(GridSpec grid, std::vector<double> values);
  static ConductivityField constant(GridSpec grid, double value);

  const GridSpec& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double at(std::size_t row, std::size_t col) const { return values_[grid_.index(row, col)]; }
  std::size_t size() const { return values_.size(); }

  ConductivityField scaled(double c) const;

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

inline constexpr std::size_t kElectrodes = 16;

/// Sixteen point electrodes, four per side, numbered counter-clockwise from
/// the bottom edge. On each side electrode j sits at arc offset (2j+1)/8 and
/// is attached to the boundary cell containing that point, which for side 24
/// gives cell offsets 3, 9, 15, 21.
class ElectrodeLayout {
 public:
  static ElectrodeLayout standard(const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  std::size_t cell(std::size_t e) const { return cells_[e]; }
  const std::array<std::size_t, kElectrodes>& cells() const { return cells_; }
  /// Boundary point in image coordinates (x right, y up).
  const std::array<std::array<double, 2>, kElectrodes>& positions() const { return positions_; }

 private:
  explicit ElectrodeLayout(GridSpec grid) : grid_(grid) {}

  GridSpec grid_;
  std::array<std::size_t, kElectrodes> cells_{};
  std::array<std::array<double, 2>, kElectrodes> positions_{};
};

enum class CoarsenRule { arithmetic, harmonic };

/// Block average onto a grid whose side divides the input side.
ConductivityField coarsen(const ConductivityField& fine, const GridSpec& coarse,
                          CoarsenRule rule = CoarsenRule::arithmetic);

/// Replicates each cell into a factor x factor block.
ConductivityField refine(const ConductivityField& coarse, std::size_t factor);

ConductivityField load_field(const std::filesystem::path& path);
ConductivityField parse_field(const std::string& text, const std::string& source);
void save_field(const ConductivityField& field, const std::filesystem::path& path);
std::string format_field(const ConductivityField& field);

/// Plain PGM (P2); values in [lo, hi] map linearly to 0..255, clamped outside.
void save_pgm(const ConductivityField& field, const std::filesystem::path& path, double lo = 2.5,
              double hi = 4.5);

}  // namespace eitmc
