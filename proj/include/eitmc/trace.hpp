#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "eitmc/samplers.hpp"

namespace eitmc {

struct TraceRecord {
  std::size_t index = 0;
  Counters cost;
  double rate_stage1 = 0.0;
  double rate_stage2 = 0.0;  // NaN for single-stage kernels
  std::vector<double> values;
};

/// Thinned chain output. Record 0 is the state at the start of sampling;
/// later records are taken at fixed iteration intervals.
struct Trace {
  std::vector<std::size_t> pixels;  // field index of each value column
  std::vector<TraceRecord> records;

  std::size_t thinned_count() const { return records.empty() ? 0 : records.size() - 1; }
  /// Values of column k across records.
  std::vector<double> column(std::size_t k) const;

  std::string to_csv() const;
  static Trace parse_csv(const std::string& text, const std::string& source);
  void save(const std::filesystem::path& path) const;
  static Trace load(const std::filesystem::path& path);
};

}  // namespace eitmc
