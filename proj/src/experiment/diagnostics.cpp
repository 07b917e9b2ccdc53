#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "eitmc/errors.hpp"
#include "eitmc/experiment.hpp"
#include "eitmc/io.hpp"

namespace eitmc {

Ess effective_sample_size(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) throw DomainError("empty series");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) s += (x[t] - mean) * (x[t + lag] - mean);
    return s / static_cast<double>(n);
  };
  const double g0 = autocov(0);
  if (!(g0 > 0.0) || n < 4) return {static_cast<double>(n), true};
  // Sums of adjacent autocovariance pairs are positive and decreasing for a
  // reversible chain; truncate at the first non-positive pair and enforce
  // monotonicity.
  double sum = 0.0, prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = autocov(2 * k) + autocov(2 * k + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev);
    prev = pair;
    sum += pair;
  }
  const double tau = (-g0 + 2.0 * sum) / g0;
  return {static_cast<double>(n) / std::max(tau, 1e-12), false};
}

std::size_t mode_switches(std::span<const double> series, double midline) {
  std::size_t count = 0;
  int sign = 0;
  for (double v : series) {
    const int s = v > midline ? 1 : (v < midline ? -1 : 0);
    if (s == 0) continue;
    if (sign != 0 && s != sign) ++count;
    sign = s;
  }
  return count;
}

Summary summarize(const Trace& trace, double midline) {
  if (trace.records.empty()) throw DomainError("trace has no records");
  Summary s;
  s.records = trace.records.size();
  s.pixels = trace.pixels;
  const auto& last = trace.records.back();
  s.rate_stage1 = last.rate_stage1;
  s.rate_stage2 = last.rate_stage2;
  s.final_cost = last.cost;
  for (std::size_t k = 0; k < trace.pixels.size(); ++k) {
    const auto col = trace.column(k);
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(col.size());
    double var = 0.0;
    for (double v : col) var += (v - mean) * (v - mean);
    var = col.size() > 1 ? var / static_cast<double>(col.size() - 1) : 0.0;
    s.mean.push_back(mean);
    s.variance.push_back(var);
    s.ess.push_back(effective_sample_size(col));
    s.switches.push_back(mode_switches(col, midline));
    s.total_switches += s.switches.back();
  }
  return s;
}

std::string format_summary(const Summary& s) {
  std::ostringstream ss;
  ss << "records " << s.records << '\n'
     << "fine_evals " << s.final_cost.fine << '\n'
     << "approx_evals " << s.final_cost.approx << '\n'
     << "coarse_evals " << s.final_cost.coarse << '\n'
     << "acceptance_rate_stage1 " << io::format_double(s.rate_stage1) << '\n'
     << "acceptance_rate_stage2 " << io::format_double(s.rate_stage2) << '\n'
     << "total_mode_switches " << s.total_switches << '\n'
     << "pixel,mean,variance,ess,degenerate,mode_switches\n";
  for (std::size_t k = 0; k < s.pixels.size(); ++k)
    ss << s.pixels[k] << ',' << io::format_double(s.mean[k]) << ',' << io::format_double(s.variance[k]) << ','
       << io::format_double(s.ess[k].value) << ',' << (s.ess[k].degenerate ? 1 : 0) << ',' << s.switches[k] << '\n';
  return ss.str();
}

std::string compare_table(const std::vector<Trace>& traces, const std::vector<std::string>& names,
                          std::size_t column) {
  if (traces.empty()) throw DomainError("nothing to compare");
  if (names.size() != traces.size()) throw DimensionError("one name per trace is required");
  std::size_t rows = traces.front().records.size();
  for (const auto& t : traces) {
    if (column >= t.pixels.size()) throw DimensionError("column " + std::to_string(column) + " is not in every trace");
    rows = std::min(rows, t.records.size());
  }
  std::ostringstream ss;
  ss << "record_index,fine_evals";
  for (const auto& n : names) ss << ',' << n;
  ss << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    ss << r << ',' << traces.front().records[r].cost.fine;
    for (const auto& t : traces) ss << ',' << io::format_double(t.records[r].values[column]);
    ss << '\n';
  }
  return ss.str();
}

}  // namespace eitmc
