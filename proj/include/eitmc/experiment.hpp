#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "eitmc/driver.hpp"
#include "eitmc/field_grid.hpp"
#include "eitmc/forward_solver.hpp"
#include "eitmc/posterior.hpp"
#include "eitmc/trace.hpp"

namespace eitmc {

/// Every key of the run configuration, with its default. The file format is
/// INI: [section] headers, key = value lines, ';' or '#' comments.
struct RunConfig {
  struct Problem {
    std::string kind = "eit";  // eit | toy
    std::size_t fine_side = 12;
    std::size_t coarse_side = 4;
    std::size_t refine = 1;
    std::string truth = "data/truth12.txt";
    std::string data;        // voltage CSV; empty synthesizes data from the truth
    double sigma = 0.0;      // explicit noise sd; 0 uses sigma_file or the snr rule
    std::string sigma_file;
    double snr = 1000.0 / 3.0;
    std::uint64_t data_seed = 7;
    std::size_t approx_iters = 30;
    std::string coarsen = "arithmetic";  // arithmetic | harmonic
    std::string toy_truth = "3 4 4 3";   // row-major values of the 2x2 toy truth
    std::string toy_levels = "3 4";
  } problem;

  struct Prior {
    std::string kind = "tricube";  // tricube | gmrf | convolution
    std::optional<double> beta;    // 0.5 for tricube, 2 for gmrf
    double s = 0.3;
    double lower = 2.5;
    double upper = 4.5;
    double sigma_u = 1.0;
    double kernel_sd = 0.11;
    double offset = 3.5;
    double scale = 0.02;
    std::size_t knots_per_side = 10;
  } prior;

  struct Sampler {
    std::string kernel = "ssm";
    std::string order = "random";  // random | deterministic
    double sigma_z = 0.3;
    double alpha = 1.0;
    double quantum = 0.0;
    std::string rwm_cov = "identity";  // identity | diagonal | full
    std::string rwm_cov_trace;
    std::size_t n_step = 100;
    std::size_t coupling_ratio = 3;
    std::string surrogate = "approx";  // approx | coarse
    std::string tune = "auto";         // auto | true | false
    std::optional<double> target_rate;
    std::size_t tune_window = 0;
    double tune_gain = 1.0;
    std::size_t bias_refactor_every = 1;
  } sampler;

  struct Run {
    std::uint64_t seed = 1;
    double budget = 2000.0;
    double burn_in = 200.0;
    std::size_t thin = 10;
    std::string tracked = "auto";  // auto | all | comma-separated cell indices
    std::string init = "constant:3";  // constant:<v> | truth | prior | <field file>
    std::string out_dir = "out";
    std::uint64_t checkpoint_every = 0;  // steps; 0 writes only at the end
    std::uint64_t stall_limit = 100000;
  } run;

  /// Directory relative paths are resolved against.
  std::filesystem::path base_dir = ".";

  static RunConfig parse(const std::string& text, const std::string& source);
  static RunConfig load(const std::filesystem::path& path);
  std::string to_ini() const;
  std::filesystem::path resolve(const std::string& p) const;
};

double default_target_rate(KernelKind k);
bool default_tune(KernelKind k);

struct SyntheticData {
  VoltageSet eta;  // noiseless voltages of the truth
  VoltageSet y;
  double sigma = 0.0;
};

/// y = eta(truth) + N(0, sigma^2 I) with sigma = max|eta| / snr. An infinite
/// snr gives sigma = 0 and y = eta exactly.
SyntheticData generate_data(const ForwardModel& model, const ConductivityField& truth, double snr,
                            std::uint64_t seed);
/// Same with an explicit noise sd.
SyntheticData generate_data_sigma(const ForwardModel& model, const ConductivityField& truth, double sigma,
                                  std::uint64_t seed);

/// Everything a run needs, assembled from a configuration.
struct Problem {
  std::shared_ptr<const ForwardModel> model;
  std::unique_ptr<Posterior> exact, approx, coarse, adaptive;
  std::optional<ConductivityField> truth;
  double sigma = 0.0;
  std::vector<double> x0;
  std::vector<std::size_t> tracked;
  std::vector<double> levels;  // toy only
  bool toy = false;

  const Posterior& surrogate(const std::string& name) const;
};

Problem build_problem(const RunConfig& cfg);
RunOptions build_run_options(const RunConfig& cfg, const Problem& problem);
RunTargets build_targets(const RunConfig& cfg, const Problem& problem);

/// Three tracked cells: inside the circular object, in the background, and
/// on the edge of the circle.
std::vector<std::size_t> default_tracked_pixels(const GridSpec& grid);

/// Exact posterior over a finite lattice of states.
struct ProbabilityTable {
  std::vector<double> levels;
  std::size_t dimension = 0;
  std::vector<double> p;  // index = sum_i level_index_i * q^i

  std::size_t index_of(std::span<const double> x) const;  // throws DomainError off the lattice
  std::vector<double> state(std::size_t index) const;
};

inline constexpr std::size_t kMaxEnumeration = 10000;

/// Normalized posterior for every state in levels^dimension through the same
/// evaluation path the samplers use. `reversed` sums in reverse order.
ProbabilityTable enumerate_posterior(const Posterior& posterior, const std::vector<double>& levels,
                                     bool reversed = false);
double tv_distance(std::span<const double> p, std::span<const double> q);
/// Relative frequencies of visited lattice states.
std::vector<double> empirical_distribution(const ProbabilityTable& table,
                                           const std::vector<std::vector<double>>& samples);

struct Ess {
  double value = 0.0;
  bool degenerate = false;
};
/// Effective sample size from Geyer's initial monotone sequence estimator.
Ess effective_sample_size(std::span<const double> series);
/// Sign changes of (v - midline) along the series; values on the midline keep the previous sign.
std::size_t mode_switches(std::span<const double> series, double midline = 3.5);

struct Summary {
  std::size_t records = 0;
  std::vector<std::size_t> pixels;
  std::vector<double> mean, variance;
  std::vector<Ess> ess;
  std::vector<std::size_t> switches;
  std::size_t total_switches = 0;
  double rate_stage1 = 0.0, rate_stage2 = 0.0;
  Counters final_cost;
};

Summary summarize(const Trace& trace, double midline = 3.5);
std::string format_summary(const Summary& s);

/// One row per record of the shortest trace: record index, exact-evaluation
/// cost of the first trace, then column `column` of every trace.
std::string compare_table(const std::vector<Trace>& traces, const std::vector<std::string>& names,
                          std::size_t column);

/// Command-line entry point. Returns the process exit status.
int run_cli(int argc, const char* const* argv);

}  // namespace eitmc
