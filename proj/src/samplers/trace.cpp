#include "eitmc/trace.hpp"

#include <sstream>

#include "eitmc/errors.hpp"
#include "eitmc/io.hpp"

namespace eitmc {

namespace {

constexpr const char* kFixedColumns[] = {"record_index",           "cumulative_fine_evals",
                                         "cumulative_approx_evals", "cumulative_coarse_evals",
                                         "acceptance_rate_stage1", "acceptance_rate_stage2"};
constexpr std::size_t kFixed = 6;

std::uint64_t parse_count(const std::string& tok, const std::string& where) {
  const double v = io::parse_double(tok, where);
  if (v < 0 || v != static_cast<double>(static_cast<std::uint64_t>(v))) throw ParseError(where + ": not a count: " + tok);
  return static_cast<std::uint64_t>(v);
}

}  // namespace

std::vector<double> Trace::column(std::size_t k) const {
  if (k >= pixels.size()) throw DimensionError("trace column out of range");
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.values[k]);
  return out;
}

std::string Trace::to_csv() const {
  std::ostringstream ss;
  for (std::size_t i = 0; i < kFixed; ++i) ss << (i ? "," : "") << kFixedColumns[i];
  for (std::size_t p : pixels) ss << ",x" << p;
  ss << '\n';
  for (const auto& r : records) {
    ss << r.index << ',' << r.cost.fine << ',' << r.cost.approx << ',' << r.cost.coarse << ','
       << io::format_double(r.rate_stage1) << ',' << io::format_double(r.rate_stage2);
    for (double v : r.values) ss << ',' << io::format_double(v);
    ss << '\n';
  }
  return ss.str();
}

Trace Trace::parse_csv(const std::string& text, const std::string& source) {
  const auto ls = io::lines(text);
  if (ls.empty()) throw ParseError(source + ": empty trace");
  const auto head = io::split(ls[0], ',');
  if (head.size() < kFixed) throw ParseError(source + ": line 1: missing trace columns");
  for (std::size_t i = 0; i < kFixed; ++i)
    if (head[i] != kFixedColumns[i]) throw ParseError(source + ": line 1: expected column " + kFixedColumns[i]);
  Trace t;
  for (std::size_t i = kFixed; i < head.size(); ++i) {
    if (head[i].size() < 2 || head[i][0] != 'x') throw ParseError(source + ": line 1: bad column name " + head[i]);
    t.pixels.push_back(parse_count(head[i].substr(1), source + ": line 1"));
  }
  for (std::size_t li = 1; li < ls.size(); ++li) {
    if (ls[li].empty()) continue;
    const std::string where = source + ": line " + std::to_string(li + 1);
    const auto toks = io::split(ls[li], ',');
    if (toks.size() != head.size()) throw ParseError(where + ": expected " + std::to_string(head.size()) + " fields");
    TraceRecord r;
    r.index = parse_count(toks[0], where);
    r.cost.fine = parse_count(toks[1], where);
    r.cost.approx = parse_count(toks[2], where);
    r.cost.coarse = parse_count(toks[3], where);
    r.rate_stage1 = io::parse_double(toks[4], where);
    r.rate_stage2 = io::parse_double(toks[5], where);
    for (std::size_t i = kFixed; i < toks.size(); ++i) r.values.push_back(io::parse_double(toks[i], where));
    t.records.push_back(std::move(r));
  }
  return t;
}

void Trace::save(const std::filesystem::path& path) const { io::write_atomic(path, to_csv()); }

Trace Trace::load(const std::filesystem::path& path) { return parse_csv(io::read_text(path), path.string()); }

}  // namespace eitmc
