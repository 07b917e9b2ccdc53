// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <Eigen/Dense>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "eitmc/driver.hpp"
#include "eitmc/experiment.hpp"
#include "eitmc/io.hpp"
#include "forward_oracle.hpp"

using namespace eitmc;

namespace {

const std::filesystem::path kSource = EITMC_SOURCE_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream ss;
  ss.precision(digits);
  ss << v;
  return ss.str();
}

RunConfig desk_config() { return RunConfig::load(kSource / "data" / "desk.ini"); }

RunConfig toy_config(const std::string& kernel) {
  RunConfig cfg;
  cfg.problem.kind = "toy";
  cfg.sampler.kernel = kernel;
  cfg.sampler.order = "random";
  cfg.sampler.sigma_z = 1.0;
  cfg.sampler.alpha = 0.5;
  cfg.sampler.tune = "false";
  cfg.sampler.n_step = 4;
  cfg.sampler.surrogate = "approx";
  cfg.sampler.bias_refactor_every = 64;
  cfg.run.burn_in = 50;
  cfg.run.budget = 1e12;
  cfg.run.thin = 1;
  cfg.run.tracked = "all";
  return cfg;
}

// Runs a toy chain until it holds `records` thinned records and returns the
// TV distance of those records from the enumerated posterior.
Outcome toy_exactness(const std::string& kernel, double tolerance, std::size_t records = 100000) {
  const RunConfig cfg = toy_config(kernel);
  const Problem pb = build_problem(cfg);
  Driver d(build_run_options(cfg, pb), build_targets(cfg, pb), pb.x0);
  while (d.trace().thinned_count() < records) d.advance(1000);
  const auto& recs = d.trace().records;
  std::vector<std::vector<double>> samples;
  for (std::size_t i = 1; i <= records; ++i) samples.push_back(recs[i].values);
  const auto table = enumerate_posterior(*pb.exact, pb.levels);
  const double tv = tv_distance(table.p, empirical_distribution(table, samples));
  double min_ess = 1e300;
  Trace t = d.trace();
  t.records.resize(records + 1);
  for (const auto& e : summarize(t).ess) min_ess = std::min(min_ess, e.value);
  return {tv < tolerance, kernel + " TV " + fmt(tv) + " (< " + fmt(tolerance) + ", min ESS " + fmt(min_ess, 5) + ")"};
}

Outcome criterion1() {
  Outcome all{true, ""};
  const std::vector<std::pair<std::string, double>> kernels{
      {"ssm", 0.05}, {"rwm", 0.05}, {"coupling", 0.05}, {"da", 0.05}, {"msda", 0.05}, {"amsda", 0.07}};
  for (const auto& [k, tol] : kernels) {
    const auto o = toy_exactness(k, tol);
    all.pass = all.pass && o.pass;
    all.detail += (all.detail.empty() ? "" : "; ") + o.detail;
  }
  return all;
}

Outcome criterion2() {
  Rng rng(11);
  auto random_field = [&](std::size_t n) {
    std::vector<double> v(n * n);
    for (double& x : v) x = 2.5 + 2.0 * rng.uniform();
    return ConductivityField(GridSpec(n), v);
  };
  const auto f = random_field(12);
  const auto v = solve_fine(f);
  const auto v2 = solve_fine(f.scaled(2.0));
  double homog = 0.0;
  for (std::size_t i = 0; i < kData; ++i) homog = std::max(homog, std::abs(v2.flat()[i] - 0.5 * v.flat()[i]));
  homog /= 0.5 * v.max_abs();

  double rows = 0.0;
  for (std::size_t p = 0; p < kElectrodes; ++p) {
    double s = 0.0, m = 0.0;
    for (std::size_t e = 0; e < kElectrodes; ++e) {
      s += v.flat()[p * kElectrodes + e];
      m = std::max(m, std::abs(v.flat()[p * kElectrodes + e]));
    }
    rows = std::max(rows, std::abs(s) / m);
  }

  const auto t = transfer_matrix(f);
  double sym = 0.0, tmax = 0.0;
  for (std::size_t i = 0; i < kElectrodes; ++i)
    for (std::size_t j = 0; j < kElectrodes; ++j) {
      sym = std::max(sym, std::abs(t[i * kElectrodes + j] - t[j * kElectrodes + i]));
      tmax = std::max(tmax, std::abs(t[i * kElectrodes + j]));
    }
  sym /= tmax;

  const auto small = random_field(6);
  const double dense = testing::rel_diff(solve_fine(small).flat(), testing::dense_oracle(small));

  const bool pass = homog < 1e-10 && rows < 1e-9 && sym < 1e-10 && dense < 1e-10;
  return {pass, "homogeneity " + fmt(homog, 3) + ", row sums " + fmt(rows, 3) + ", transfer asymmetry " +
                    fmt(sym, 3) + ", 6x6 dense oracle " + fmt(dense, 3)};
}

Outcome criterion3() {
  RunConfig cfg = desk_config();
  cfg.base_dir = kSource / "data";
  cfg.sampler.kernel = "da";
  cfg.sampler.surrogate = "coarse";
  cfg.sampler.tune = "true";
  cfg.sampler.target_rate = 0.33;
  cfg.run.burn_in = 300;
  cfg.run.budget = 300;
  const Problem pb = build_problem(cfg);
  Driver d(build_run_options(cfg, pb), build_targets(cfg, pb), pb.x0);
  std::uint64_t fine_at_start = 0;
  while (!d.sampling()) d.advance(1);
  fine_at_start = d.counters().fine;
  d.advance();
  const Tally s1 = d.stage1();
  const double pass_rate = s1.rate();
  const double ratio =
      static_cast<double>(d.counters().fine - fine_at_start) / static_cast<double>(s1.proposed);
  const bool law = d.counters().fine - fine_at_start == s1.accepted;
  const bool pass = pass_rate >= 0.30 && pass_rate <= 0.36 && ratio >= 0.28 && ratio <= 0.40 && law;
  return {pass, "sigma_z " + fmt(d.tuner().scale()) + ", first-stage pass rate " + fmt(pass_rate) +
                    ", exact evaluations per proposal " + fmt(ratio) + " over " + std::to_string(s1.proposed) +
                    " proposals, evaluations == passes: " + (law ? "yes" : "no")};
}

Outcome criterion4() {
  const std::size_t n = kData, count = 1000;
  Rng rng(4);
  // Stationary stream: fixed offset plus unit noise.
  std::vector<double> offset(n);
  for (double& v : offset) v = rng.normal();
  std::vector<Eigen::VectorXd> rs;
  BiasState b = BiasState::zero(n);
  std::vector<double> steps;
  bool bounded = true;
  for (std::size_t k = 1; k <= count; ++k) {
    Eigen::VectorXd r(n);
    for (std::size_t i = 0; i < n; ++i) r[static_cast<Eigen::Index>(i)] = offset[i] + rng.normal();
    rs.push_back(r);
    const BiasState next = update_bias(b, std::span<const double>(r.data(), n));
    double step = 0.0, jump = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      step += std::pow(next.b[i] - b.b[i], 2);
      jump += std::pow(r[static_cast<Eigen::Index>(i)] - b.b[i], 2);
    }
    bounded = bounded && std::sqrt(step) <= std::sqrt(jump) / static_cast<double>(k) * (1 + 1e-12);
    steps.push_back(std::sqrt(step));
    b = next;
  }
  // Batch oracles: the plain mean, and the covariance as the sum of outer
  // products of each residual about the mean of the residuals up to it.
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  for (const auto& r : rs) mean += r;
  mean /= static_cast<double>(count);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 1; k <= count; ++k) {
    Eigen::VectorXd mk = Eigen::VectorXd::Zero(n);
    for (std::size_t j = 0; j < k; ++j) mk += rs[j];
    mk /= static_cast<double>(k);
    const Eigen::VectorXd d = rs[k - 1] - mk;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(count);
  Eigen::MatrixXd plain = Eigen::MatrixXd::Zero(n, n);
  for (const auto& r : rs) plain += (r - mean) * (r - mean).transpose();
  plain /= static_cast<double>(count);

  double mean_err = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean_err = std::max(mean_err, std::abs(b.b[i] - mean[static_cast<Eigen::Index>(i)]));
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> got(b.sigma.data(), n, n);
  const double cov_err = (got - cov).cwiseAbs().maxCoeff();
  const double plain_gap = (got - plain).cwiseAbs().maxCoeff();

  // O(1/k): k * |b_k - b_{k-1}| stays flat across decades.
  auto scaled = [&](std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) s += static_cast<double>(k) * steps[k - 1];
    return s / static_cast<double>(hi - lo + 1);
  };
  const double early = scaled(10, 100), late = scaled(500, 1000);
  const double drift = late / early;
  const bool pass = mean_err < 1e-12 && cov_err < 1e-12 && bounded && drift > 0.5 && drift < 2.0;
  return {pass, "mean error " + fmt(mean_err, 3) + ", covariance error " + fmt(cov_err, 3) +
                    " (gap to the plain sample covariance " + fmt(plain_gap, 3) + "), k*|db| early " + fmt(early) +
                    " late " + fmt(late) + ", step bound held: " + (bounded ? "yes" : "no")};
}

Outcome criterion5() {
  RunConfig cfg = desk_config();
  cfg.base_dir = kSource / "data";
  const Problem pb = build_problem(cfg);
  std::size_t hits = 0;
  std::ostringstream worst;
  auto count_for = [&](const ConductivityField& x) {
    const auto f = pb.model->evaluate(x, Fidelity::fine);
    const auto c = pb.model->evaluate(x, Fidelity::coarse);
    std::size_t h = 0;
    for (std::size_t p = 0; p < kElectrodes; ++p) {
      std::size_t arg = 0;
      double best = -1.0;
      for (std::size_t e = 0; e < kElectrodes; ++e) {
        const double d = std::abs(f.flat()[p * kElectrodes + e] - c.flat()[p * kElectrodes + e]);
        if (d > best) best = d, arg = e;
      }
      if (arg == p && f.flat()[p * kElectrodes + p] - c.flat()[p * kElectrodes + p] < 0.0) ++h;
    }
    return h;
  };
  hits = count_for(*pb.truth);
  const std::size_t at_start = count_for(ConductivityField(pb.truth->grid(), pb.x0));
  return {hits >= 12, std::to_string(hits) + " of 16 patterns at the truth (" + std::to_string(at_start) +
                          " at the initial field)"};
}

Outcome criterion6() {
  std::size_t switches[2] = {0, 0};
  std::string detail;
  const char* kernels[2] = {"ssm", "amsda"};
  for (int i = 0; i < 2; ++i) {
    RunConfig cfg = desk_config();
    cfg.base_dir = kSource / "data";
    cfg.sampler.kernel = kernels[i];
    const Problem pb = build_problem(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    Driver d(build_run_options(cfg, pb), build_targets(cfg, pb), pb.x0);
    d.advance();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const Summary s = summarize(d.trace());
    switches[i] = s.total_switches;
    detail += std::string(i ? "; " : "") + kernels[i] + " " + std::to_string(s.total_switches) + " switches over " +
              std::to_string(s.records) + " records (" + fmt(secs, 3) + " s)";
  }
  return {switches[1] >= 2 * switches[0], detail};
}

Outcome criterion7() {
  auto swap_rate = [](const std::string& surrogate, std::size_t iters, double& err_over_sigma) {
    RunConfig cfg = desk_config();
    cfg.base_dir = kSource / "data";
    cfg.sampler.kernel = "coupling";
    cfg.sampler.surrogate = surrogate;
    cfg.sampler.tune = "false";
    cfg.problem.approx_iters = iters;
    cfg.run.burn_in = 0;
    cfg.run.budget = 150;
    const Problem pb = build_problem(cfg);
    const auto& s = pb.surrogate(surrogate);
    const auto ef = pb.exact->likelihood(pb.truth->values()).eta;
    const auto es = s.likelihood(pb.truth->values()).eta;
    double err = 0.0;
    for (std::size_t i = 0; i < ef.size(); ++i) err = std::max(err, std::abs(ef[i] - es[i]));
    err_over_sigma = err / pb.sigma;
    Driver d(build_run_options(cfg, pb), build_targets(cfg, pb), pb.x0);
    d.advance();
    return std::pair{d.stage2().rate(), d.stage2().proposed};
  };
  double e_hi = 0.0, e_c = 0.0;
  const auto [hi, n_hi] = swap_rate("approx", 150, e_hi);
  const auto [co, n_co] = swap_rate("coarse", 30, e_c);
  return {hi > 0.5 && co < 0.01, "approx surrogate (150 iterations, error " + fmt(e_hi, 3) + " sigma) swap rate " +
                                     fmt(hi) + " over " + std::to_string(n_hi) +
                                     " proposals; coarse surrogate (error " + fmt(e_c, 3) + " sigma) swap rate " +
                                     fmt(co) + " over " + std::to_string(n_co)};
}

Outcome criterion8() {
  bool identical = true, conserved = true;
  std::string detail;
  for (const std::string kernel : {"ssm", "rwm", "coupling", "da", "msda", "amsda"}) {
    for (bool desk : {false, true}) {
      RunConfig cfg = desk ? desk_config() : toy_config(kernel);
      if (desk) {
        cfg.base_dir = kSource / "data";
        cfg.sampler.kernel = kernel;
        cfg.sampler.surrogate = "coarse";
        cfg.run.burn_in = 2;
        cfg.run.budget = 4;
        cfg.run.thin = 1;
      } else {
        cfg.run.budget = 500;
      }
      std::string csv[2];
      for (int rep = 0; rep < 2; ++rep) {
        const Problem pb = build_problem(cfg);
        pb.model->reset_calls();
        Driver d(build_run_options(cfg, pb), build_targets(cfg, pb), pb.x0);
        d.advance();
        csv[rep] = d.trace().to_csv();
        const Counters c = d.counters();
        const bool ok = c.fine == pb.model->calls(Fidelity::fine) &&
                        c.approx == pb.model->calls(Fidelity::approx) &&
                        c.coarse == pb.model->calls(Fidelity::coarse);
        if (!ok) detail += (detail.empty() ? "" : "; ") + kernel + (desk ? " desk" : " toy") + " counters differ";
        conserved = conserved && ok;
      }
      if (csv[0] != csv[1]) detail += (detail.empty() ? "" : "; ") + kernel + (desk ? " desk" : " toy") + " traces differ";
      identical = identical && csv[0] == csv[1];
    }
  }
  if (detail.empty()) detail = "6 kernels x 2 problems: traces byte-identical, counters equal simulator call counts";
  return {identical && conserved, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 oracle exactness", criterion1},
      {"2 forward-model properties", criterion2},
      {"3 delayed-acceptance cost law", criterion3},
      {"4 bias adaptation", criterion4},
      {"5 coarse-model error pattern", criterion5},
      {"6 efficiency ordering", criterion6},
      {"7 coupling swap sanity", criterion7},
      {"8 determinism and accounting", criterion8},
  };
  // Optional arguments select criteria by number.
  std::vector<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name.substr(0, name.find(' '))) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << name << ": " << o.detail << " [" << fmt(secs, 3)
              << " s]" << std::endl;
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
