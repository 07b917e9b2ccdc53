#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "eitmc/errors.hpp"
#include "eitmc/experiment.hpp"
#include "eitmc/io.hpp"

namespace eitmc {

namespace {

namespace pt = boost::property_tree;

struct Binding {
  std::function<void(const std::string&, const std::string&)> set;
  std::function<std::string()> get;
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

Binding bind(std::string& v) {
  return {[&v](const std::string& s, const std::string&) { v = s; }, [&v] { return v; }};
}

Binding bind(double& v) {
  return {[&v](const std::string& s, const std::string& w) { v = io::parse_double(s, w); },
          [&v] { return io::format_double(v); }};
}

Binding bind(std::optional<double>& v) {
  return {[&v](const std::string& s, const std::string& w) {
            if (s.empty()) v.reset();
            else v = io::parse_double(s, w);
          },
          [&v] { return v ? io::format_double(*v) : std::string(); }};
}

template <class Int>
Binding bind_int(Int& v) {
  return {[&v](const std::string& s, const std::string& w) {
            const double d = io::parse_double(s, w);
            if (d < 0 || d != std::floor(d)) throw ConfigError(w + ": expected a non-negative integer, got '" + s + "'");
            v = static_cast<Int>(d);
          },
          [&v] { return std::to_string(v); }};
}

using Table = std::vector<std::pair<std::string, std::vector<std::pair<std::string, Binding>>>>;

Table bindings(RunConfig& c) {
  auto& p = c.problem;
  auto& r = c.prior;
  auto& s = c.sampler;
  auto& u = c.run;
  return {
      {"problem",
       {{"kind", bind(p.kind)},
        {"fine_side", bind_int(p.fine_side)},
        {"coarse_side", bind_int(p.coarse_side)},
        {"refine", bind_int(p.refine)},
        {"truth", bind(p.truth)},
        {"data", bind(p.data)},
        {"sigma", bind(p.sigma)},
        {"sigma_file", bind(p.sigma_file)},
        {"snr", bind(p.snr)},
        {"data_seed", bind_int(p.data_seed)},
        {"approx_iters", bind_int(p.approx_iters)},
        {"coarsen", bind(p.coarsen)},
        {"toy_truth", bind(p.toy_truth)},
        {"toy_levels", bind(p.toy_levels)}}},
      {"prior",
       {{"kind", bind(r.kind)},
        {"beta", bind(r.beta)},
        {"s", bind(r.s)},
        {"lower", bind(r.lower)},
        {"upper", bind(r.upper)},
        {"sigma_u", bind(r.sigma_u)},
        {"kernel_sd", bind(r.kernel_sd)},
        {"offset", bind(r.offset)},
        {"scale", bind(r.scale)},
        {"knots_per_side", bind_int(r.knots_per_side)}}},
      {"sampler",
       {{"kernel", bind(s.kernel)},
        {"order", bind(s.order)},
        {"sigma_z", bind(s.sigma_z)},
        {"alpha", bind(s.alpha)},
        {"quantum", bind(s.quantum)},
        {"rwm_cov", bind(s.rwm_cov)},
        {"rwm_cov_trace", bind(s.rwm_cov_trace)},
        {"n_step", bind_int(s.n_step)},
        {"coupling_ratio", bind_int(s.coupling_ratio)},
        {"surrogate", bind(s.surrogate)},
        {"tune", bind(s.tune)},
        {"target_rate", bind(s.target_rate)},
        {"tune_window", bind_int(s.tune_window)},
        {"tune_gain", bind(s.tune_gain)},
        {"bias_refactor_every", bind_int(s.bias_refactor_every)}}},
      {"run",
       {{"seed", bind_int(u.seed)},
        {"budget", bind(u.budget)},
        {"burn_in", bind(u.burn_in)},
        {"thin", bind_int(u.thin)},
        {"tracked", bind(u.tracked)},
        {"init", bind(u.init)},
        {"out_dir", bind(u.out_dir)},
        {"checkpoint_every", bind_int(u.checkpoint_every)},
        {"stall_limit", bind_int(u.stall_limit)}}},
  };
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text, const std::string& source) {
  pt::ptree tree;
  // property_tree only knows ';' comments.
  std::string cleaned;
  for (const auto& line : io::lines(text)) {
    const std::string t = trim(line);
    cleaned += (!t.empty() && t[0] == '#') ? std::string() : line;
    cleaned += '\n';
  }
  std::istringstream in(cleaned);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ": line " + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig c;
  auto table = bindings(c);
  for (const auto& [section, node] : tree) {
    if (node.empty() && !node.data().empty())
      throw ConfigError(source + ": key '" + section + "' must appear inside a [section]");
    auto sec = std::find_if(table.begin(), table.end(), [&](const auto& s) { return s.first == section; });
    if (sec == table.end()) throw ConfigError(source + ": unknown section [" + section + "]");
    for (const auto& [key, value] : node) {
      auto k = std::find_if(sec->second.begin(), sec->second.end(), [&](const auto& b) { return b.first == key; });
      if (k == sec->second.end()) throw ConfigError(source + ": unknown key '" + key + "' in [" + section + "]");
      std::string v = trim(value.data());
      const auto sc = v.find(';');
      if (sc != std::string::npos) v = trim(v.substr(0, sc));
      try {
        k->second.set(v, source + ": [" + section + "] " + key);
      } catch (const ParseError& e) {
        throw ConfigError(e.what());
      }
    }
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  RunConfig c = parse(io::read_text(path), path.string());
  c.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return c;
}

std::string RunConfig::to_ini() const {
  RunConfig copy = *this;
  std::ostringstream ss;
  bool first = true;
  for (const auto& [section, keys] : bindings(copy)) {
    ss << (first ? "" : "\n") << '[' << section << "]\n";
    first = false;
    for (const auto& [key, b] : keys) ss << key << " = " << b.get() << '\n';
  }
  return ss.str();
}

std::filesystem::path RunConfig::resolve(const std::string& p) const {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

}  // namespace eitmc
