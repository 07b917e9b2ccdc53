#include <CLI11.hpp>
#include <chrono>
#include <iostream>
#include <sstream>

#include "eitmc/errors.hpp"
#include "eitmc/experiment.hpp"
#include "eitmc/io.hpp"
#include "eitmc/simd.hpp"

namespace eitmc {

namespace {

namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kNumerical = 1;
constexpr int kConfig = 2;

int cmd_gen_data(const std::string& config, const std::string& out_override) {
  const RunConfig cfg = RunConfig::load(config);
  if (cfg.problem.kind != "eit") throw ConfigError("gen-data needs [problem] kind = eit");
  RunConfig synth = cfg;
  synth.problem.data.clear();
  const Problem pb = build_problem(synth);
  const fs::path out = out_override.empty() ? cfg.resolve(cfg.run.out_dir) : fs::path(out_override);
  const SyntheticData d = cfg.problem.sigma > 0.0
                              ? generate_data_sigma(*pb.model, *pb.truth, cfg.problem.sigma, cfg.problem.data_seed)
                              : generate_data(*pb.model, *pb.truth, cfg.problem.snr, cfg.problem.data_seed);
  save_voltages(d.y, out / "data.csv");
  save_voltages(d.eta, out / "eta_truth.csv");
  io::write_atomic(out / "sigma.txt", io::format_double(d.sigma) + "\n");
  save_field(*pb.truth, out / "truth.txt");
  save_pgm(*pb.truth, out / "truth.pgm");
  std::cout << "sigma " << io::format_double(d.sigma) << "\nwrote " << (out / "data.csv").string() << '\n';
  return kOk;
}

void write_outputs(const fs::path& out, const Driver& d, const RunConfig& cfg) {
  d.trace().save(out / "trace.csv");
  io::write_atomic(out / "checkpoint.txt", d.checkpoint());
  std::ostringstream ss;
  const Counters c = d.counters();
  ss << "kernel " << cfg.sampler.kernel << '\n'
     << "finished " << (d.finished() ? 1 : 0) << '\n'
     << "steps " << d.steps() << '\n'
     << "fine_evals " << c.fine << '\n'
     << "approx_evals " << c.approx << '\n'
     << "coarse_evals " << c.coarse << '\n'
     << "records " << d.trace().records.size() << '\n'
     << "scale " << io::format_double(d.tuner().scale()) << '\n'
     << "acceptance_rate_stage1 " << io::format_double(d.stage1().rate()) << '\n'
     << "acceptance_rate_stage2 " << io::format_double(d.stage2().rate()) << '\n';
  if (const auto* a = d.adaptive()) ss << "bias_updates " << a->bias().k << '\n';
  io::write_atomic(out / "run_state.txt", ss.str());
  if (const auto* a = d.adaptive()) save_bias(a->bias(), out / "bias.txt");
}

int cmd_run(const std::string& config, bool resume, std::uint64_t stop_after, const std::string& out_override) {
  RunConfig cfg = RunConfig::load(config);
  if (!out_override.empty()) cfg.run.out_dir = fs::absolute(out_override).string();
  if (!(cfg.run.budget >= 0.0)) throw ConfigError("[run] budget must be non-negative");
  const fs::path out = cfg.resolve(cfg.run.out_dir);
  const Problem pb = build_problem(cfg);
  const RunOptions opts = build_run_options(cfg, pb);
  const RunTargets targets = build_targets(cfg, pb);
  fs::create_directories(out);
  io::write_atomic(out / "effective.ini", cfg.to_ini());
  Driver d = resume ? Driver::resume(opts, targets, io::read_text(out / "checkpoint.txt"))
                    : Driver(opts, targets, pb.x0);
  const auto t0 = std::chrono::steady_clock::now();
  std::uint64_t remaining = stop_after == 0 ? std::numeric_limits<std::uint64_t>::max() : stop_after;
  const std::uint64_t chunk = cfg.run.checkpoint_every == 0 ? remaining : cfg.run.checkpoint_every;
  while (!d.finished() && remaining > 0) {
    const std::uint64_t n = std::min(chunk, remaining);
    const std::uint64_t before = d.steps();
    d.advance(n);
    remaining -= std::min(remaining, d.steps() - before);
    if (d.steps() == before) break;
    if (!d.finished() && remaining > 0) write_outputs(out, d, cfg);
  }
  write_outputs(out, d, cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << (d.finished() ? "finished" : "stopped") << ": " << d.steps() << " steps, " << d.counters().fine
            << " fine evaluations, " << d.trace().records.size() << " records, " << secs << " s ("
            << simd::isa_name(simd::active().isa) << ")\n";
  return kOk;
}

int cmd_summarize(const std::string& trace_path, const std::string& out_override, double midline) {
  const Trace t = Trace::load(trace_path);
  const Summary s = summarize(t, midline);
  const fs::path out = out_override.empty() ? fs::path(trace_path).parent_path() : fs::path(out_override);
  io::write_atomic(out / "diagnostics.txt", format_summary(s));
  const std::size_t m = t.pixels.size();
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(m))));
  bool full = side >= 2 && side * side == m;
  for (std::size_t i = 0; full && i < m; ++i) full = t.pixels[i] == i;
  if (full) {
    const ConductivityField mean(GridSpec(side), s.mean);
    save_field(mean, out / "mean.txt");
    save_field(ConductivityField(GridSpec(side), s.variance), out / "variance.txt");
    save_pgm(mean, out / "mean.pgm");
  }
  std::cout << format_summary(s);
  return kOk;
}

int cmd_compare(const std::vector<std::string>& paths, std::size_t column, const std::string& out) {
  std::vector<Trace> traces;
  std::vector<std::string> names;
  for (const auto& p : paths) {
    traces.push_back(Trace::load(p));
    const fs::path path(p);
    names.push_back(path.parent_path().filename().string().empty() ? path.stem().string()
                                                                    : path.parent_path().filename().string());
  }
  const std::string table = compare_table(traces, names, column);
  if (out.empty()) std::cout << table;
  else io::write_atomic(out, table);
  return kOk;
}

int cmd_oracle(const std::string& config, const std::string& trace_path) {
  const RunConfig cfg = RunConfig::load(config);
  const Problem pb = build_problem(cfg);
  if (!pb.toy) throw ConfigError("oracle needs [problem] kind = toy");
  const ProbabilityTable table = enumerate_posterior(*pb.exact, pb.levels);
  const Trace t = Trace::load(trace_path);
  if (t.pixels.size() != table.dimension) throw ConfigError("trace must record every toy pixel (tracked = all)");
  std::vector<std::vector<double>> samples;
  for (std::size_t i = 1; i < t.records.size(); ++i) samples.push_back(t.records[i].values);
  const auto freq = empirical_distribution(table, samples);
  std::cout << "state,posterior,empirical\n";
  for (std::size_t i = 0; i < table.p.size(); ++i) {
    const auto x = table.state(i);
    for (std::size_t j = 0; j < x.size(); ++j) std::cout << (j ? " " : "") << io::format_double(x[j]);
    std::cout << ',' << io::format_double(table.p[i]) << ',' << io::format_double(freq[i]) << '\n';
  }
  std::cout << "samples " << samples.size() << "\ntv_distance " << io::format_double(tv_distance(table.p, freq))
            << '\n';
  return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Delayed-acceptance MCMC for electrical impedance tomography"};
  app.require_subcommand(1);

  std::string config, out, trace_path;
  bool resume = false;
  std::uint64_t stop_after = 0;
  double midline = 3.5;
  std::vector<std::string> traces;
  std::size_t column = 0;

  auto* gen = app.add_subcommand("gen-data", "Synthesize noisy voltages from the truth image");
  gen->add_option("-c,--config", config, "Run configuration")->required();
  gen->add_option("-o,--out", out, "Output directory (default: [run] out_dir)");

  auto* run = app.add_subcommand("run", "Run a sampler to its budget");
  run->add_option("-c,--config", config, "Run configuration")->required();
  run->add_flag("--resume", resume, "Continue from out_dir/checkpoint.txt");
  run->add_option("--stop-after", stop_after, "Stop after this many steps and checkpoint");
  run->add_option("-o,--out", out, "Output directory (default: [run] out_dir)");

  auto* sum = app.add_subcommand("summarize", "Diagnostics and mean image for a trace");
  sum->add_option("-t,--trace", trace_path, "Trace CSV")->required();
  sum->add_option("-o,--out", out, "Output directory (default: next to the trace)");
  sum->add_option("--midline", midline, "Level separating low and high conductivity");

  auto* cmp = app.add_subcommand("compare", "Align traces on a shared cost axis");
  cmp->add_option("-t,--trace", traces, "Trace CSV (repeat)")->required();
  cmp->add_option("--column", column, "Value column to compare");
  cmp->add_option("-o,--out", out, "Output CSV (default: stdout)");

  auto* orc = app.add_subcommand("oracle", "Total-variation distance of a toy trace from the exact posterior");
  orc->add_option("-c,--config", config, "Toy configuration")->required();
  orc->add_option("-t,--trace", trace_path, "Trace CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*gen) return cmd_gen_data(config, out);
    if (*run) return cmd_run(config, resume, stop_after, out);
    if (*sum) return cmd_summarize(trace_path, out, midline);
    if (*cmp) return cmd_compare(traces, column, out);
    if (*orc) return cmd_oracle(config, trace_path);
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  }
  return kConfig;
}

}  // namespace eitmc
