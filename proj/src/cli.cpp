#include "ecbayes/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ecbayes/error.hpp"
#include "ecbayes/json_io.hpp"
#include "ecbayes/mining.hpp"
#include "ecbayes/predictive.hpp"
#include "ecbayes/reproduce.hpp"
#include "ecbayes/service.hpp"

namespace ecbayes {

using nlohmann::json;

namespace {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage:
      return kExitUsage;
    case ErrorKind::convergence:
      return kExitConvergence;
    default:
      return kExitData;
  }
}

[[noreturn]] void usage(const std::string& message) { throw Error(ErrorKind::usage, message); }

std::string default_data_dir() {
  const char* env = std::getenv("EC_DATA_DIR");
  return env && *env ? env : "data";
}

std::vector<double> parse_numbers(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      usage(flag + ": '" + text + "' is not a comma-separated list of numbers");
    }
  }
  return out;
}

// "a,b" is a diagonal matrix, "a,b,c" is (xx, xy, yy).
Cov2 parse_cov(const std::string& text, const std::string& flag) {
  const auto v = parse_numbers(text, flag);
  if (v.size() == 2) return Cov2::diagonal(v[0], v[1]);
  if (v.size() == 3) return Cov2{v[0], v[1], v[2]};
  usage(flag + " expects 2 (diagonal) or 3 (xx,xy,yy) numbers");
}

std::array<double, 2> parse_pair(const std::string& text, const std::string& flag) {
  const auto v = parse_numbers(text, flag);
  if (v.size() != 2) usage(flag + " expects two comma-separated numbers");
  return {v[0], v[1]};
}

// Options shared by every command.
struct Common {
  std::uint64_t seed = 1;
  unsigned workers = 0;
  std::string format = "json";
  bool strict = false;
  std::string out_path;
  std::string data_dir = default_data_dir();
};

void add_common(CLI::App* cmd, Common& c, bool with_strict = false) {
  cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  cmd->add_option("--workers", c.workers, "Worker threads (0 = all cores)")->capture_default_str();
  cmd->add_option("--out,-o", c.out_path, "Write the payload to a file instead of stdout");
  cmd->add_option("--data", c.data_dir, "Directory with <name>.csv ensembles (default $EC_DATA_DIR or ./data)");
  if (with_strict) cmd->add_flag("--strict", c.strict, "Fail when sampler diagnostics are not met");
}

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw Error(ErrorKind::not_found, "cannot write '" + path + "'");
      stream_ = &file_;
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

void write_json(const Common& c, std::ostream& out, const json& payload) {
  Output o(c.out_path, out);
  *o << payload.dump(2) << '\n';
}

void print_warnings(std::ostream& err, const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---------------------------------------------------------------------------
// Ensemble and model prior flags
// ---------------------------------------------------------------------------

struct EnsembleFlags {
  std::string ensemble;
  std::string builtin;
};

struct PriorFlags {
  std::string kind = "reference";
  std::string mu;
  std::string sb;
  std::optional<double> sigma_s;
  std::size_t draws = 20000;
  std::size_t chains = 4;
};

void add_prior_flags(CLI::App* cmd, PriorFlags& p) {
  cmd->add_option("--prior", p.kind, "Model prior")->check(CLI::IsMember({"reference", "subjective"}))->capture_default_str();
  cmd->add_option("--mu", p.mu, "Subjective prior mean of (beta0, beta1), e.g. 0,0");
  cmd->add_option("--Sb", p.sb, "Subjective prior covariance: diagonal a,b or xx,xy,yy");
  cmd->add_option("--sigma-s", p.sigma_s, "Half-Normal scale of the sigma prior");
  cmd->add_option("--draws", p.draws, "Retained posterior draws")->capture_default_str();
  cmd->add_option("--chains", p.chains, "MCMC chains (subjective prior)")->capture_default_str();
}

ModelPrior model_prior(const PriorFlags& p) {
  if (p.kind == "reference") {
    if (!p.mu.empty() || !p.sb.empty() || p.sigma_s) usage("--mu, --Sb and --sigma-s need --prior subjective");
    return ModelPrior::reference();
  }
  if (p.sb.empty() || !p.sigma_s) usage("--prior subjective needs --Sb and --sigma-s");
  const auto mu = p.mu.empty() ? std::array<double, 2>{0.0, 0.0} : parse_pair(p.mu, "--mu");
  auto prior = ModelPrior::subjective(mu, parse_cov(p.sb, "--Sb"), *p.sigma_s);
  prior.validate();
  return prior;
}

SamplerConfig sampler_config(const PriorFlags& p, const Common& c) {
  if (p.draws < kMinConfigDraws) usage("--draws must be >= 1000");
  if (p.chains < kMinConfigChains) usage("--chains must be >= 2");
  return {p.draws, p.chains, c.seed};
}

std::filesystem::path builtin_path(const std::string& name, const Common& c) {
  find_builtin(name);
  return std::filesystem::path(c.data_dir) / (name + ".csv");
}

Ensemble load_ensemble(const EnsembleFlags& f, const Common& c) {
  if (!f.ensemble.empty()) return load_ensemble_csv(f.ensemble);
  const auto path = builtin_path(f.builtin, c);
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorKind::not_found, "external data required: " + path.string() +
                                          " not found (ensemble tables are not bundled; set --data or EC_DATA_DIR)");
  }
  return load_ensemble_csv(path.string());
}

RegressionPosterior fit_with(const Ensemble& e, const ModelPrior& prior, const SamplerConfig& s, const Common& c) {
  AnalysisConfig cfg;
  cfg.sampler = s;
  auto opts = cfg.sampler_options(c.workers);
  opts.strict = c.strict;
  auto rng = fit_stream(s.seed);
  try {
    return fit_posterior(e, prior, opts, rng);
  } catch (const Error& err) {
    rethrow_with_stage(err, "fit");
  }
}

void print_summary(std::ostream& err, const PosteriorSummary& s) {
  err << "parameter        mean        sd\n";
  err << "beta0      " << std::setw(10) << fixed(s.beta0_hat) << std::setw(10) << fixed(s.sd_beta0) << '\n';
  err << "beta1      " << std::setw(10) << fixed(s.beta1_hat) << std::setw(10) << fixed(s.sd_beta1) << '\n';
  err << "sigma      " << std::setw(10) << fixed(s.sigma_mean) << std::setw(10) << fixed(s.sigma_sd) << '\n';
  err << "rho        " << std::setw(10) << fixed(s.rho) << '\n';
}

// ---------------------------------------------------------------------------
// Reality flags
// ---------------------------------------------------------------------------

struct RealityFlags {
  std::string kind;
  std::string confidence;
  std::optional<double> alpha;
  std::optional<double> mu_y;
  std::optional<double> sigma_y;
  std::string sign;
  std::string sb_star;
  std::optional<double> xi;
};

void add_judgement_flags(CLI::App* cmd, RealityFlags& r) {
  cmd->add_option("--confidence", r.confidence, "virtually_certain | very_likely | likely | coin_flip");
  cmd->add_option("--alpha", r.alpha, "Custom confidence: twice the sign-flip probability");
  cmd->add_option("--mu-y", r.mu_y, "Current expectation of the response");
  cmd->add_option("--sigma-y", r.sigma_y, "Current standard deviation of the response");
  cmd->add_option("--sign", r.sign, "Constraint sign")->check(CLI::IsMember({"positive", "negative"}));
}

void add_reality_flags(CLI::App* cmd, RealityFlags& r) {
  cmd->add_option("--reality", r.kind, "Reality layer")->check(CLI::IsMember({"collapsed", "manual", "guided"}));
  add_judgement_flags(cmd, r);
  cmd->add_option("--Sb-star", r.sb_star, "Manual reality covariance: diagonal a,b or xx,xy,yy");
  cmd->add_option("--xi", r.xi, "Manual reality spread of sigma*");
}

GuidedJudgements judgements(const RealityFlags& r) {
  if (!r.confidence.empty() && r.alpha) usage("give either --confidence or --alpha, not both");
  if (r.confidence.empty() && !r.alpha) usage("guided elicitation needs --confidence or --alpha");
  if (!r.mu_y || !r.sigma_y) usage("guided elicitation needs --mu-y and --sigma-y");
  GuidedJudgements j;
  if (r.alpha) {
    j.confidence = ConfidenceLevel::custom(*r.alpha);
  } else {
    try {
      j.confidence = ConfidenceLevel::parse(r.confidence);
    } catch (const Error& e) {
      usage(std::string("--confidence: ") + e.what());
    }
  }
  j.mu_y_star = *r.mu_y;
  j.sigma_y_star = *r.sigma_y;
  if (!r.sign.empty()) j.sign = parse_sign(r.sign);
  j.validate();
  return j;
}

bool has_judgement_flags(const RealityFlags& r) {
  return !r.confidence.empty() || r.alpha || r.mu_y || r.sigma_y || !r.sign.empty();
}

std::optional<RealitySpec> reality_spec(const RealityFlags& r) {
  const bool manual_flags = !r.sb_star.empty() || r.xi;
  if (r.kind.empty()) {
    if (has_judgement_flags(r) || manual_flags) usage("reality flags need --reality guided or --reality manual");
    return std::nullopt;
  }
  if (r.kind == "collapsed") {
    if (has_judgement_flags(r) || manual_flags) usage("--reality collapsed takes no further reality flags");
    return RealitySpec::collapsed();
  }
  if (r.kind == "manual") {
    if (has_judgement_flags(r)) usage("--confidence, --alpha, --mu-y, --sigma-y and --sign need --reality guided");
    if (r.sb_star.empty()) usage("--reality manual needs --Sb-star");
    const double xi = r.xi.value_or(0.0);
    if (!(xi >= 0.0)) usage("--xi must be >= 0");
    return RealitySpec::manual(parse_cov(r.sb_star, "--Sb-star"), xi);
  }
  if (manual_flags) usage("--Sb-star and --xi need --reality manual");
  return RealitySpec::guided_by(judgements(r));
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct FitCommand {
  Common common;
  EnsembleFlags ensemble;
  PriorFlags prior;
  std::string draws_out;

  void setup(CLI::App& app) {
    auto* cmd = app.add_subcommand("fit", "Fit the ensemble regression and summarize the posterior");
    add_common(cmd, common, true);
    auto* e = cmd->add_option("--ensemble", ensemble.ensemble, "Ensemble CSV with header model,x,y");
    auto* b = cmd->add_option("--builtin", ensemble.builtin, "Built-in constraint name (reads <data>/<name>.csv)");
    e->excludes(b);
    add_prior_flags(cmd, prior);
    cmd->add_option("--draws-out", draws_out, "Also write raw posterior draws as CSV");
    cmd->add_option("--format", common.format, "Payload format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  }

  int run(std::ostream& out, std::ostream& err) {
    if (ensemble.ensemble.empty() && ensemble.builtin.empty()) usage("fit needs --ensemble or --builtin");
    const auto p = model_prior(prior);
    const auto s = sampler_config(prior, common);
    const auto e = load_ensemble(ensemble, common);
    const auto post = fit_with(e, p, s, common);
    const auto summary = summarize(post);
    print_summary(err, summary);
    print_warnings(err, post.warnings);

    if (!draws_out.empty()) {
      Output o(draws_out, out);
      write_draws_csv(*o, post);
    }
    if (common.format == "csv") {
      Output o(common.out_path, out);
      write_draws_csv(*o, post);
    } else {
      json payload = fit_payload(post, summary, e);
      payload["seed"] = common.seed;
      write_json(common, out, payload);
    }
    return kExitOk;
  }
};

struct PredictCommand {
  Common common;
  EnsembleFlags ensemble;
  PriorFlags prior;
  RealityFlags reality;
  std::string posterior;
  std::string config;
  std::optional<double> z;
  std::optional<double> sigma_z;
  std::string x_prior;
  std::optional<double> mu_x;
  std::optional<double> sigma_x;
  std::string levels;
  std::string interval;
  std::string density_out;

  void setup(CLI::App& app) {
    auto* cmd = app.add_subcommand("predict", "Posterior predictive intervals for the real-world response");
    add_common(cmd, common, true);
    cmd->add_option("--builtin", ensemble.builtin, "Built-in constraint: observation, x prior and <data>/<name>.csv");
    cmd->add_option("--ensemble", ensemble.ensemble, "Ensemble CSV with header model,x,y");
    cmd->add_option("--posterior", posterior, "Reuse posterior draws written by `fit --draws-out`");
    cmd->add_option("--config", config, "Analysis config JSON; flags override its fields");
    add_prior_flags(cmd, prior);
    add_reality_flags(cmd, reality);
    cmd->add_option("--z", z, "Observed predictor");
    cmd->add_option("--sigma-z", sigma_z, "Observation error sd");
    cmd->add_option("--x-prior", x_prior, "Predictor prior")->check(CLI::IsMember({"flat", "normal"}));
    cmd->add_option("--mu-x", mu_x, "Normal predictor prior mean");
    cmd->add_option("--sigma-x", sigma_x, "Normal predictor prior sd");
    cmd->add_option("--levels", levels, "Interval levels, e.g. 0.66,0.9,0.95");
    cmd->add_option("--interval", interval, "Interval type")->check(CLI::IsMember({"equal_tailed", "hdi"}));
    cmd->add_option("--density-out", density_out, "Also write the density curve as CSV");
    cmd->add_option("--format", common.format, "Payload format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  }

  AnalysisConfig build_config(const CLI::App& cmd) {
    AnalysisConfig cfg;
    bool have_observation = false;
    if (!config.empty()) {
      cfg = load_config(config);
      have_observation = true;
    }
    if (!ensemble.builtin.empty()) {
      const auto& entry = find_builtin(ensemble.builtin);
      cfg.observation = entry.observation;
      cfg.predictor_prior = entry.predictor_prior;
      have_observation = true;
    }
    if (z.has_value() != sigma_z.has_value()) usage("--z and --sigma-z go together");
    if (z) {
      cfg.observation = {*z, *sigma_z};
      have_observation = true;
    }
    if (!have_observation) usage("predict needs an observation: --builtin, --config or --z/--sigma-z");
    cfg.observation.validate();

    if (x_prior == "flat") {
      if (mu_x || sigma_x) usage("--mu-x and --sigma-x need --x-prior normal");
      cfg.predictor_prior = PredictorPrior::flat();
    } else if (x_prior == "normal") {
      if (!mu_x || !sigma_x) usage("--x-prior normal needs --mu-x and --sigma-x");
      cfg.predictor_prior = PredictorPrior::normal(*mu_x, *sigma_x);
    } else if (mu_x || sigma_x) {
      usage("--mu-x and --sigma-x need --x-prior normal");
    }
    cfg.predictor_prior.validate();

    if (config.empty() || cmd.count("--prior") || !prior.mu.empty() || !prior.sb.empty() || prior.sigma_s) {
      cfg.model_prior = model_prior(prior);
    }
    if (config.empty() || cmd.count("--draws")) cfg.sampler.draws = prior.draws;
    if (config.empty() || cmd.count("--chains")) cfg.sampler.chains = prior.chains;
    if (config.empty() || cmd.count("--seed")) cfg.sampler.seed = common.seed;
    if (cfg.sampler.draws < kMinConfigDraws) usage("--draws must be >= 1000");
    if (cfg.sampler.chains < kMinConfigChains) usage("--chains must be >= 2");

    if (auto spec = reality_spec(reality)) cfg.reality = *spec;
    if (!levels.empty()) {
      try {
        cfg.levels = parse_levels(json(parse_numbers(levels, "--levels")), "/levels");
      } catch (const Error& e) {
        usage(std::string("--levels: ") + e.what());
      }
    }
    if (!interval.empty()) cfg.interval_kind = interval == "hdi" ? IntervalKind::hdi : IntervalKind::equal_tailed;
    return cfg;
  }

  int run(const CLI::App& cmd, std::ostream& out, std::ostream& err) {
    const int sources = !ensemble.ensemble.empty() + !posterior.empty();
    if (sources > 1) usage("give at most one of --ensemble and --posterior");
    if (sources == 0 && ensemble.builtin.empty()) usage("predict needs --builtin, --ensemble or --posterior");
    const auto cfg = build_config(cmd);

    PredictiveResult result;
    if (!posterior.empty()) {
      std::ifstream in(posterior, std::ios::binary);
      if (!in) throw Error(ErrorKind::not_found, "cannot read '" + posterior + "'");
      std::stringstream text;
      text << in.rdbuf();
      const auto post = parse_draws_csv(text.str());
      const auto summary = summarize(post);
      result = predict_from_posterior(cfg, post, summary, common.workers);
    } else {
      const auto e = load_ensemble(ensemble, common);
      auto scfg = cfg.sampler;
      const auto post = fit_with(e, cfg.model_prior, scfg, common);
      PosteriorSummary summary;
      try {
        summary = summarize(post);
      } catch (const Error& error) {
        rethrow_with_stage(error, "summarize");
      }
      result = predict_from_posterior(cfg, post, summary, common.workers);
    }

    err << "median " << fixed(result.median, 3) << '\n';
    for (const auto& li : result.intervals) {
      err << level_key(li.level) << "  [" << fixed(li.interval.lo, 3) << ", " << fixed(li.interval.hi, 3) << "]\n";
    }
    print_warnings(err, result.warnings);

    if (!density_out.empty()) {
      Output o(density_out, out);
      write_density_csv(*o, result.density);
    }
    if (common.format == "csv") {
      Output o(common.out_path, out);
      write_density_csv(*o, result.density);
    } else {
      write_json(common, out, to_json(result));
    }
    return kExitOk;
  }
};

struct ElicitCommand {
  Common common;
  EnsembleFlags ensemble;
  RealityFlags reality;
  std::string posterior;
  std::string beta0;
  std::string beta1;
  std::optional<double> rho;
  std::string sigma_fn;

  void setup(CLI::App& app) {
    auto* cmd = app.add_subcommand("elicit", "Guided elicitation of the reality layer");
    add_common(cmd, common);
    cmd->add_option("--builtin", ensemble.builtin, "Fit <data>/<name>.csv with the reference prior");
    cmd->add_option("--ensemble", ensemble.ensemble, "Fit an ensemble CSV with the reference prior");
    cmd->add_option("--posterior", posterior, "Posterior draws CSV written by `fit --draws-out`");
    cmd->add_option("--beta0", beta0, "Posterior mean,sd of the intercept");
    cmd->add_option("--beta1", beta1, "Posterior mean,sd of the slope");
    cmd->add_option("--rho", rho, "Posterior correlation of intercept and slope");
    cmd->add_option("--sigma-fn", sigma_fn, "Folded-Normal fit s,xi of the sigma posterior");
    add_judgement_flags(cmd, reality);
    cmd->add_option("--format", common.format, "Payload format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  }

  PosteriorSummary summary() {
    const bool explicit_summary = !beta0.empty() || !beta1.empty() || rho || !sigma_fn.empty();
    const int sources = explicit_summary + !ensemble.ensemble.empty() + !ensemble.builtin.empty() + !posterior.empty();
    if (sources != 1) usage("elicit needs exactly one of --builtin, --ensemble, --posterior or --beta0/--beta1/--rho/--sigma-fn");
    if (explicit_summary) {
      if (beta0.empty() || beta1.empty() || !rho || sigma_fn.empty()) {
        usage("an explicit summary needs --beta0, --beta1, --rho and --sigma-fn");
      }
      PosteriorSummary s;
      const auto b0 = parse_pair(beta0, "--beta0");
      const auto b1 = parse_pair(beta1, "--beta1");
      const auto fn = parse_pair(sigma_fn, "--sigma-fn");
      s.beta0_hat = b0[0];
      s.sd_beta0 = b0[1];
      s.beta1_hat = b1[0];
      s.sd_beta1 = b1[1];
      s.rho = *rho;
      s.sigma_fn = {fn[0], fn[1]};
      if (!(std::abs(s.rho) <= 1.0)) usage("--rho must lie in [-1, 1]");
      return s;
    }
    if (!posterior.empty()) {
      std::ifstream in(posterior, std::ios::binary);
      if (!in) throw Error(ErrorKind::not_found, "cannot read '" + posterior + "'");
      std::stringstream text;
      text << in.rdbuf();
      return summarize(parse_draws_csv(text.str()));
    }
    const auto e = load_ensemble(ensemble, common);
    return summarize(fit_with(e, ModelPrior::reference(), {20000, 4, common.seed}, common));
  }

  int run(std::ostream& out, std::ostream& err) {
    const auto j = judgements(reality);
    const auto s = summary();
    const auto rp = build_reality_prior(s, RealitySpec::guided_by(j));
    json payload = reality_json(rp);
    payload["alpha"] = j.confidence.alpha;
    payload["confidence"] = std::string(j.confidence.name());

    err << "sd(beta0*) " << fixed(payload["sd_beta0_star"].get<double>()) << "  sd(beta1*) "
        << fixed(payload["sd_beta1_star"].get<double>()) << "  xi* " << fixed(rp.xi) << '\n';
    print_warnings(err, rp.warnings);

    if (common.format == "csv") {
      Output o(common.out_path, out);
      *o << "quantity,value\n";
      for (const char* key : {"alpha", "sd_beta0_star", "sd_beta1_star", "correlation", "xi", "total_sd_beta1",
                              "sign_flip_probability"}) {
        if (payload.contains(key) && payload[key].is_number()) *o << key << ',' << payload[key].dump() << '\n';
      }
    } else {
      write_json(common, out, payload);
    }
    return kExitOk;
  }
};

struct ReproduceCommand {
  Common common;
  int table = 0;

  void setup(CLI::App& app) {
    auto* cmd = app.add_subcommand("reproduce", "Recompute a reference table from local ensemble files");
    add_common(cmd, common);
    common.format = "text";
    cmd->add_option("--table", table, "Table number")->required()->check(CLI::IsMember({1, 2, 4}));
    cmd->add_option("--format", common.format, "Output format")
        ->check(CLI::IsMember({"text", "json", "csv"}))
        ->capture_default_str();
  }

  int run(std::ostream& out, std::ostream& err) {
    const auto report = reproduce_table(table, common.data_dir, common.seed, common.workers);
    if (report.rows.empty()) {
      err << "external data required for table " << table << ":\n";
      for (const auto& path : report.missing) err << "  missing: " << path << '\n';
      err << "ensemble tables are not bundled; place them in --data or $EC_DATA_DIR\n";
      return kExitData;
    }
    print_warnings(err, report.warnings);

    Output o(common.out_path, out);
    if (common.format == "json") {
      *o << to_json(report).dump(2) << '\n';
    } else if (common.format == "csv") {
      *o << "item,expected,computed,tolerance,pass\n";
      for (const auto& c : report.rows) {
        *o << c.item << ',' << json(c.expected).dump() << ',' << json(c.computed).dump() << ','
           << json(c.tolerance).dump() << ',' << (c.pass() ? "true" : "false") << '\n';
      }
    } else {
      *o << "Table " << table << "\n";
      *o << std::left << std::setw(34) << "item" << std::right << std::setw(10) << "expected" << std::setw(10)
         << "computed" << std::setw(8) << "tol" << "  result\n";
      for (const auto& c : report.rows) {
        *o << std::left << std::setw(34) << c.item << std::right << std::setw(10) << fixed(c.expected, 2)
           << std::setw(10) << fixed(c.computed, 3) << std::setw(8) << fixed(c.tolerance, 2) << "  "
           << (c.pass() ? "PASS" : "FAIL") << '\n';
      }
      *o << (report.all_pass() ? "all comparisons within tolerance" : "some comparisons outside tolerance")
         << (report.complete() ? "" : " (partial: missing ensembles)") << '\n';
    }
    return kExitOk;
  }
};

struct MineCommand {
  Common common;
  MiningConfig cfg;
  std::string mode = "all_pairs";

  void setup(CLI::App& app) {
    auto* cmd = app.add_subcommand("mine", "Maximum spurious correlation in a random pseudo-ensemble");
    add_common(cmd, common);
    cmd->add_option("--members", cfg.members, "Ensemble members (rows)")->capture_default_str();
    cmd->add_option("--outputs", cfg.outputs, "Model outputs (columns)")->capture_default_str();
    cmd->add_option("--mode", mode, "Search mode")->check(CLI::IsMember({"one_vs_rest", "all_pairs"}))->capture_default_str();
    cmd->add_flag("--duplicate-column", cfg.duplicate_column, "Copy column 0 into the last column");
    cmd->add_option("--format", common.format, "Payload format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  }

  int run(std::ostream& out, std::ostream& err) {
    cfg.mode = mode == "one_vs_rest" ? MiningMode::one_vs_rest : MiningMode::all_pairs;
    cfg.seed = common.seed;
    cfg.workers = common.workers;
    const auto r = correlation_mining_demo(cfg);
    err << "max |corr| " << fixed(r.max_abs_corr) << " between outputs " << r.argmax.first << " and "
        << r.argmax.second << " (" << r.pairs << " pairs)\n";
    if (common.format == "csv") {
      Output o(common.out_path, out);
      *o << "lo,hi,count\n";
      const double width = (r.histogram.hi - r.histogram.lo) / static_cast<double>(r.histogram.counts.size());
      for (std::size_t i = 0; i < r.histogram.counts.size(); ++i) {
        const double lo = r.histogram.lo + width * static_cast<double>(i);
        *o << json(lo).dump() << ',' << json(lo + width).dump() << ',' << r.histogram.counts[i] << '\n';
      }
    } else {
      json payload = to_json(r);
      payload["members"] = cfg.members;
      payload["outputs"] = cfg.outputs;
      payload["mode"] = mode;
      payload["seed"] = cfg.seed;
      write_json(common, out, payload);
    }
    return kExitOk;
  }
};

struct SynthCommand {
  Common common;
  SyntheticSpec spec;
  bool cox_like = false;

  void setup(CLI::App& app) {
    auto* cmd = app.add_subcommand("synth", "Write a synthetic ensemble CSV");
    add_common(cmd, common);
    cmd->add_option("--n", spec.n, "Members")->capture_default_str();
    cmd->add_option("--intercept", spec.intercept)->capture_default_str();
    cmd->add_option("--slope", spec.slope)->capture_default_str();
    cmd->add_option("--sigma", spec.sigma, "Residual sd")->capture_default_str();
    cmd->add_option("--x-mean", spec.x_mean)->capture_default_str();
    cmd->add_option("--x-sd", spec.x_sd)->capture_default_str();
    cmd->add_flag("--exact", spec.exact, "Rescale so the sample fit equals the parameters exactly");
    cmd->add_flag("--cox-like", cox_like, "Ensemble whose reference fit matches the published Cox summary");
  }

  int run(std::ostream& out, std::ostream&) {
    if (cox_like) spec = cox_like_spec();
    RandomStream rng(common.seed, 3);
    const auto e = synthetic_ensemble(spec, rng);
    Output o(common.out_path, out);
    write_ensemble_csv(*o, e);
    return kExitOk;
  }
};

struct DatasetsCommand {
  Common common;

  void setup(CLI::App& app) {
    auto* cmd = app.add_subcommand("datasets", "List the built-in observations");
    add_common(cmd, common);
  }

  int run(std::ostream& out, std::ostream&) {
    json list = json::array();
    for (const auto& entry : builtin_catalog()) {
      json item = to_json(entry);
      item["ensemble_available"] = std::filesystem::exists(std::filesystem::path(common.data_dir) / (entry.name + ".csv"));
      list.push_back(item);
    }
    write_json(common, out, {{"datasets", list}});
    return kExitOk;
  }
};

struct ServeCommand {
  Common common;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;

  void setup(CLI::App& app) {
    auto* cmd = app.add_subcommand("serve", "Run the HTTP API");
    add_common(cmd, common);
    cmd->add_option("--host", host)->capture_default_str();
    cmd->add_option("--port", port)->capture_default_str();
    cmd->add_option("--static", static_dir, "Directory served at / (web UI bundle)");
  }

  int run(std::ostream&, std::ostream& err) {
    ServiceOptions opts;
    opts.data_dir = common.data_dir;
    opts.static_dir = static_dir;
    opts.workers = common.workers;
    Service service(opts);
    err << "listening on http://" << host << ':' << port << '\n' << std::flush;
    if (serve(service, host, port) != 0) {
      err << "error: cannot listen on " << host << ':' << port << '\n';
      return kExitUsage;
    }
    return kExitOk;
  }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian emergent constraints"};
  app.name("ec");
  app.require_subcommand(1);

  FitCommand fit;
  PredictCommand predict;
  ElicitCommand elicit;
  ReproduceCommand reproduce;
  MineCommand mine;
  SynthCommand synth;
  DatasetsCommand datasets;
  ServeCommand serve_cmd;
  fit.setup(app);
  predict.setup(app);
  elicit.setup(app);
  reproduce.setup(app);
  mine.setup(app);
  synth.setup(app);
  datasets.setup(app);
  serve_cmd.setup(app);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    auto* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    if (name == "fit") return fit.run(out, err);
    if (name == "predict") return predict.run(*cmd, out, err);
    if (name == "elicit") return elicit.run(out, err);
    if (name == "reproduce") return reproduce.run(out, err);
    if (name == "mine") return mine.run(out, err);
    if (name == "synth") return synth.run(out, err);
    if (name == "datasets") return datasets.run(out, err);
    return serve_cmd.run(out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  }
}

}  // namespace ecbayes
