#include <algorithm>
#include <cmath>

#include "eitmc/errors.hpp"
#include "eitmc/experiment.hpp"
#include "eitmc/io.hpp"

namespace eitmc {

namespace {

// Noise sd of the 2x2 toy problem when none is configured. Chosen so the
// posterior spreads its mass over several of the 16 states.
constexpr double kToySigma = 0.05;

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::string t = s;
  std::replace(t.begin(), t.end(), ',', ' ');
  for (const auto& tok : io::split_ws(t)) out.push_back(io::parse_double(tok, what));
  return out;
}

PriorSpec make_prior(const RunConfig::Prior& p) {
  if (p.kind == "tricube") return TricubePrior{p.beta.value_or(0.5), p.s, p.lower, p.upper};
  if (p.kind == "gmrf") return GmrfPrior{p.beta.value_or(2.0), p.lower, p.upper};
  if (p.kind == "convolution") {
    if (p.knots_per_side == 0) throw ConfigError("[prior] knots_per_side must be positive");
    ConvolutionPrior c;
    c.knots = ConvolutionPrior::lattice_knots(p.knots_per_side);
    c.sigma_u = p.sigma_u;
    c.kernel_sd = p.kernel_sd;
    c.offset = p.offset;
    c.scale = p.scale;
    return c;
  }
  throw ConfigError("[prior] kind must be tricube, gmrf or convolution, got '" + p.kind + "'");
}

CoarsenRule make_rule(const std::string& s) {
  if (s == "arithmetic") return CoarsenRule::arithmetic;
  if (s == "harmonic") return CoarsenRule::harmonic;
  throw ConfigError("[problem] coarsen must be arithmetic or harmonic, got '" + s + "'");
}

}  // namespace

double default_target_rate(KernelKind k) {
  switch (k) {
    case KernelKind::rwm:
      return 0.3;
    case KernelKind::da:
      return 0.33;
    default:
      return 0.5;
  }
}

bool default_tune(KernelKind k) { return k != KernelKind::msda && k != KernelKind::amsda; }

std::vector<std::size_t> default_tracked_pixels(const GridSpec& grid) {
  const std::array<std::array<double, 2>, 3> points{{{0.35, 0.40}, {0.80, 0.20}, {0.53, 0.40}}};
  std::vector<std::size_t> out;
  const double n = static_cast<double>(grid.side());
  for (const auto& p : points) {
    const auto c = std::min(static_cast<std::size_t>(p[0] * n), grid.side() - 1);
    const auto r = std::min(static_cast<std::size_t>((1.0 - p[1]) * n), grid.side() - 1);
    out.push_back(grid.index(r, c));
  }
  return out;
}

const Posterior& Problem::surrogate(const std::string& name) const {
  if (name == "approx") return *approx;
  if (name == "coarse") return *coarse;
  throw ConfigError("[sampler] surrogate must be approx or coarse, got '" + name + "'");
}

Problem build_problem(const RunConfig& cfg) {
  const auto& pc = cfg.problem;
  Problem pb;
  const PriorSpec prior = make_prior(cfg.prior);
  ForwardModelOptions fo;
  fo.approx_iters = pc.approx_iters;
  fo.coarsen = make_rule(pc.coarsen);

  std::optional<GridSpec> grid;
  if (pc.kind == "toy") {
    pb.toy = true;
    if (!is_mrf(prior)) throw ConfigError("the toy problem needs an MRF prior");
    grid.emplace(2);
    fo.refine = 2;
    fo.coarse_side = 2;
    const auto truth = parse_list(pc.toy_truth, "[problem] toy_truth");
    if (truth.size() != 4) throw ConfigError("[problem] toy_truth needs 4 values");
    pb.truth.emplace(*grid, truth);
    pb.levels = parse_list(pc.toy_levels, "[problem] toy_levels");
    if (pb.levels.size() < 2) throw ConfigError("[problem] toy_levels needs at least two values");
  } else if (pc.kind == "eit") {
    grid.emplace(pc.fine_side);
    fo.refine = pc.refine;
    fo.coarse_side = pc.coarse_side;
    ConductivityField t = load_field(cfg.resolve(pc.truth));
    if (t.grid().side() != grid->side()) {
      if (t.grid().side() % grid->side() != 0)
        throw ConfigError("truth image side " + std::to_string(t.grid().side()) + " is not a multiple of fine_side " +
                          std::to_string(grid->side()));
      t = coarsen(t, *grid);
    }
    pb.truth.emplace(std::move(t));
  } else {
    throw ConfigError("[problem] kind must be eit or toy, got '" + pc.kind + "'");
  }
  auto model = std::make_shared<const ForwardModel>(*grid, fo);
  pb.model = model;

  VoltageSet y;
  if (!pc.data.empty()) {
    y = load_voltages(cfg.resolve(pc.data));
    if (pc.sigma > 0.0) {
      pb.sigma = pc.sigma;
    } else if (!pc.sigma_file.empty()) {
      const auto toks = io::split_ws(io::read_text(cfg.resolve(pc.sigma_file)));
      if (toks.empty()) throw ConfigError(cfg.resolve(pc.sigma_file).string() + ": empty sigma file");
      pb.sigma = io::parse_double(toks[0], cfg.resolve(pc.sigma_file).string());
    } else {
      throw ConfigError("[problem] data is given but neither sigma nor sigma_file is set");
    }
  } else {
    SyntheticData d;
    if (pc.sigma > 0.0) d = generate_data_sigma(*model, *pb.truth, pc.sigma, pc.data_seed);
    else if (pb.toy) d = generate_data_sigma(*model, *pb.truth, kToySigma, pc.data_seed);
    else d = generate_data(*model, *pb.truth, pc.snr, pc.data_seed);
    y = d.y;
    pb.sigma = d.sigma;
  }

  PosteriorSpec spec;
  spec.y.assign(y.flat().begin(), y.flat().end());
  spec.noise = NoiseModel(pb.sigma);
  spec.prior = prior;
  auto make = [&](PosteriorFidelity f) {
    PosteriorSpec s = spec;
    s.fidelity = f;
    return std::make_unique<Posterior>(std::move(s), model);
  };
  pb.exact = make(PosteriorFidelity::fine);
  pb.approx = make(PosteriorFidelity::approx);
  pb.coarse = make(PosteriorFidelity::coarse);
  pb.adaptive = make(PosteriorFidelity::coarse_adaptive);

  const std::string& init = cfg.run.init;
  const std::size_t dim = pb.exact->dimension();
  if (!is_mrf(prior)) {
    if (init == "prior") {
      Rng rng(cfg.run.seed, 2);
      pb.x0 = sample_latent(std::get<ConvolutionPrior>(prior), rng);
    } else {
      pb.x0.assign(dim, 0.0);
    }
  } else if (init.rfind("constant:", 0) == 0) {
    pb.x0.assign(dim, io::parse_double(init.substr(9), "[run] init"));
  } else if (init == "truth") {
    pb.x0.assign(pb.truth->values().begin(), pb.truth->values().end());
  } else if (init == "prior") {
    Rng rng(cfg.run.seed, 2);
    const auto f = sample_prior(prior, *grid, rng);
    pb.x0.assign(f.values().begin(), f.values().end());
  } else {
    const auto f = load_field(cfg.resolve(init));
    if (!(f.grid() == *grid)) throw ConfigError("initial field " + init + " does not match the parameter grid");
    pb.x0.assign(f.values().begin(), f.values().end());
  }

  const std::string& tr = cfg.run.tracked;
  if (tr == "auto") {
    if (!pb.toy) pb.tracked = default_tracked_pixels(*grid);
  } else if (tr != "all") {
    for (double v : parse_list(tr, "[run] tracked")) {
      if (v < 0 || v != std::floor(v) || v >= static_cast<double>(grid->cells()))
        throw ConfigError("[run] tracked: bad cell index " + io::format_double(v));
      pb.tracked.push_back(static_cast<std::size_t>(v));
    }
  }
  return pb;
}

RunOptions build_run_options(const RunConfig& cfg, const Problem& pb) {
  const auto& s = cfg.sampler;
  RunOptions o;
  o.kernel = parse_kernel(s.kernel);
  if (s.order == "random") o.order = ScanOrder::random;
  else if (s.order == "deterministic") o.order = ScanOrder::deterministic;
  else throw ConfigError("[sampler] order must be random or deterministic, got '" + s.order + "'");
  o.sigma_z = s.sigma_z;
  o.alpha = s.alpha;
  o.quantum = s.quantum;
  if (pb.toy && o.quantum == 0.0) o.quantum = pb.levels[1] - pb.levels[0];
  o.n_step = s.n_step;
  o.coupling_ratio = s.coupling_ratio;
  o.bias_refactor_every = s.bias_refactor_every;
  if (s.tune == "auto") o.tune = default_tune(o.kernel);
  else if (s.tune == "true") o.tune = true;
  else if (s.tune == "false") o.tune = false;
  else throw ConfigError("[sampler] tune must be auto, true or false");
  o.target_rate = s.target_rate.value_or(default_target_rate(o.kernel));
  o.tune_window = s.tune_window;
  o.tune_gain = s.tune_gain;
  o.budget = cfg.run.budget;
  o.burn_in = cfg.run.burn_in;
  o.thin = cfg.run.thin;
  o.seed = cfg.run.seed;
  o.stall_limit = cfg.run.stall_limit;
  o.tracked = pb.tracked;
  if (!is_mrf(pb.exact->spec().prior)) {
    const Posterior* post = pb.exact.get();
    o.observe = [post](std::span<const double> x) {
      const auto f = post->field(x);
      return std::vector<double>(f.values().begin(), f.values().end());
    };
  }
  if (o.kernel == KernelKind::rwm && s.rwm_cov != "identity") {
    if (s.rwm_cov != "diagonal" && s.rwm_cov != "full")
      throw ConfigError("[sampler] rwm_cov must be identity, diagonal or full");
    if (s.rwm_cov_trace.empty()) throw ConfigError("[sampler] rwm_cov = " + s.rwm_cov + " needs rwm_cov_trace");
    const Trace t = Trace::load(cfg.resolve(s.rwm_cov_trace));
    const std::size_t m = pb.exact->dimension();
    if (t.pixels.size() != m) throw ConfigError("rwm_cov_trace must record every parameter (tracked = all)");
    std::vector<std::vector<double>> samples;
    for (std::size_t i = 1; i < t.records.size(); ++i) samples.push_back(t.records[i].values);
    o.rwm_covariance = sample_covariance(samples, s.rwm_cov == "diagonal");
  }
  return o;
}

RunTargets build_targets(const RunConfig& cfg, const Problem& pb) {
  RunTargets t;
  t.exact = pb.exact.get();
  const auto k = parse_kernel(cfg.sampler.kernel);
  if (k == KernelKind::da || k == KernelKind::msda || k == KernelKind::coupling)
    t.surrogate = &pb.surrogate(cfg.sampler.surrogate);
  if (k == KernelKind::amsda) t.adaptive = pb.adaptive.get();
  return t;
}

}  // namespace eitmc
