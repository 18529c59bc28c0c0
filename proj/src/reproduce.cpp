#include "ecbayes/reproduce.hpp"

#include <algorithm>
#include <cmath>

#include "ecbayes/error.hpp"
#include "ecbayes/predictive.hpp"

namespace ecbayes {

namespace {

// Response judgements shared by every guided run: the IPCC likely range
// [1.5, 4.5] read as mean 3 and sd 1.5.
constexpr double kMuYStar = 3.0;
constexpr double kSigmaYStar = 1.5;

constexpr double kTable1Tolerance = 0.02;
constexpr double kRhoTolerance = 0.01;
constexpr double kIntervalTolerance = 0.06;
constexpr double kReferenceTolerance = 0.05;

struct PublishedInterval {
  double lo, hi;
};

const char* const kConfidenceLabels[] = {"virtually_certain", "very_likely", "likely", "coin_flip"};

// Table 2: 66, 90 and 95% intervals for the Cox constraint per confidence label.
const PublishedInterval kTable2[4][3] = {
    {{2.19, 3.43}, {1.59, 4.04}, {1.23, 4.36}},
    {{2.09, 3.53}, {1.36, 4.28}, {0.91, 4.70}},
    {{1.81, 3.79}, {0.81, 4.75}, {0.20, 5.35}},
    {{1.56, 4.05}, {0.32, 5.25}, {-0.45, 5.97}},
};
constexpr double kTable2Levels[3] = {0.66, 0.90, 0.95};

struct Table4Row {
  const char* name;
  PublishedInterval reference, virtually_certain, very_likely, likely;
};

const Table4Row kTable4[] = {
    {"sherwood", {3.59, 5.02}, {3.42, 5.18}, {3.19, 5.48}, {2.61, 6.04}},
    {"brient_schneider", {3.10, 4.31}, {3.06, 4.37}, {2.90, 4.55}, {2.52, 4.88}},
    {"tian", {2.66, 4.14}, {2.65, 4.17}, {2.56, 4.25}, {2.27, 4.54}},
    {"zhai", {2.52, 4.33}, {2.52, 4.33}, {2.53, 4.30}, {2.48, 4.35}},
};

std::string format_level(double level) { return std::to_string(static_cast<int>(std::lround(level * 100.0))) + "%"; }

void add_interval(ReproductionReport& r, const std::string& item, const PublishedInterval& expected,
                  const Interval& computed, double tolerance) {
  r.rows.push_back({item + " lo", expected.lo, computed.lo, tolerance});
  r.rows.push_back({item + " hi", expected.hi, computed.hi, tolerance});
}

AnalysisConfig base_config(const CatalogEntry& entry, std::uint64_t seed) {
  AnalysisConfig cfg;
  cfg.observation = entry.observation;
  cfg.predictor_prior = entry.predictor_prior;
  cfg.sampler.draws = kReproductionDraws;
  cfg.sampler.seed = seed;
  return cfg;
}

RealitySpec guided(const char* label, const PosteriorSummary& s) {
  GuidedJudgements j;
  j.confidence = ConfidenceLevel::parse(label);
  j.mu_y_star = kMuYStar;
  j.sigma_y_star = kSigmaYStar;
  j.sign = s.beta1_hat < 0.0 ? ConstraintSign::negative : ConstraintSign::positive;
  return RealitySpec::guided_by(j);
}

struct Fitted {
  Ensemble ensemble;
  RegressionPosterior posterior;
  PosteriorSummary summary;
};

Fitted fit(const std::filesystem::path& path, const AnalysisConfig& cfg, unsigned workers) {
  auto e = load_ensemble_csv(path.string());
  auto rng = fit_stream(cfg.sampler.seed);
  auto post = fit_reference(e, cfg.sampler.draws, rng, workers);
  auto summary = summarize(post);
  return {std::move(e), std::move(post), summary};
}

void append_warnings(ReproductionReport& r, const std::vector<std::string>& w) {
  for (const auto& msg : w) {
    if (std::find(r.warnings.begin(), r.warnings.end(), msg) == r.warnings.end()) r.warnings.push_back(msg);
  }
}

void table1(ReproductionReport& r, const Fitted& f) {
  const auto& s = f.summary;
  r.rows.push_back({"beta0 mean", 1.23, s.beta0_hat, kTable1Tolerance});
  r.rows.push_back({"beta0 sd", 0.46, s.sd_beta0, kTable1Tolerance});
  r.rows.push_back({"beta1 mean", 12.06, s.beta1_hat, kTable1Tolerance});
  r.rows.push_back({"beta1 sd", 2.62, s.sd_beta1, kTable1Tolerance});
  r.rows.push_back({"sigma mean", 0.59, s.sigma_mean, kTable1Tolerance});
  r.rows.push_back({"sigma sd", 0.12, s.sigma_sd, kTable1Tolerance});
  r.rows.push_back({"rho", -0.95, s.rho, kRhoTolerance});
}

void table2(ReproductionReport& r, const Fitted& f, AnalysisConfig cfg, unsigned workers) {
  const auto reference = predict_from_posterior(cfg, f.posterior, f.summary, workers);
  add_interval(r, "reference 66%", {2.2, 3.38}, reference.interval(0.66), kReferenceTolerance);
  r.rows.push_back({"reference median", 2.80, reference.median, kReferenceTolerance});
  append_warnings(r, reference.warnings);

  for (std::size_t k = 0; k < 4; ++k) {
    cfg.reality = guided(kConfidenceLabels[k], f.summary);
    const auto result = predict_from_posterior(cfg, f.posterior, f.summary, workers);
    for (std::size_t l = 0; l < 3; ++l) {
      add_interval(r, std::string(kConfidenceLabels[k]) + " " + format_level(kTable2Levels[l]), kTable2[k][l],
                   result.interval(kTable2Levels[l]), kIntervalTolerance);
    }
    append_warnings(r, result.warnings);
  }

  // Reality covariance equal to the posterior covariance of beta, which
  // doubles the marginal variance of the line.
  cfg.reality = RealitySpec::manual(f.summary.beta().cov, f.summary.sigma_sd * f.summary.sigma_sd);
  const auto doubled = predict_from_posterior(cfg, f.posterior, f.summary, workers);
  add_interval(r, "manual doubling 66%", {2.17, 3.43}, doubled.interval(0.66), kReferenceTolerance);
}

void table4(ReproductionReport& r, const std::filesystem::path& dir, std::uint64_t seed, unsigned workers) {
  for (const auto& row : kTable4) {
    const auto path = dir / (std::string(row.name) + ".csv");
    if (!std::filesystem::exists(path)) {
      r.missing.push_back(path.string());
      r.warnings.push_back(std::string(row.name) + ": skipped, " + path.string() + " not found");
      continue;
    }
    auto cfg = base_config(find_builtin(row.name), seed);
    const auto f = fit(path, cfg, workers);
    const std::string name = row.name;
    add_interval(r, name + " reference", row.reference, predict_from_posterior(cfg, f.posterior, f.summary, workers).interval(0.66),
                 kIntervalTolerance);
    const PublishedInterval* published[] = {&row.virtually_certain, &row.very_likely, &row.likely};
    for (std::size_t k = 0; k < 3; ++k) {
      cfg.reality = guided(kConfidenceLabels[k], f.summary);
      const auto result = predict_from_posterior(cfg, f.posterior, f.summary, workers);
      add_interval(r, name + " " + kConfidenceLabels[k], *published[k], result.interval(0.66), kIntervalTolerance);
      append_warnings(r, result.warnings);
    }
  }
}

}  // namespace

bool Comparison::pass() const { return std::abs(computed - expected) <= tolerance; }

bool ReproductionReport::all_pass() const {
  return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const Comparison& c) { return c.pass(); });
}

ReproductionReport reproduce_table(int table, const std::filesystem::path& data_dir, std::uint64_t seed,
                                   unsigned workers) {
  if (table != 1 && table != 2 && table != 4) {
    throw Error(ErrorKind::usage, "unknown table " + std::to_string(table) + " (expected 1, 2 or 4)");
  }
  ReproductionReport r;
  r.table = table;
  if (table == 4) {
    table4(r, data_dir, seed, workers);
    return r;
  }

  const auto path = data_dir / "cox.csv";
  if (!std::filesystem::exists(path)) {
    r.missing.push_back(path.string());
    return r;
  }
  const auto cfg = base_config(find_builtin("cox"), seed);
  const auto f = fit(path, cfg, workers);
  if (table == 1) {
    table1(r, f);
  } else {
    table2(r, f, cfg, workers);
  }
  return r;
}

nlohmann::json to_json(const ReproductionReport& r) {
  auto rows = nlohmann::json::array();
  for (const auto& c : r.rows) {
    rows.push_back({{"item", c.item},
                    {"expected", c.expected},
                    {"computed", c.computed},
                    {"tolerance", c.tolerance},
                    {"pass", c.pass()}});
  }
  return {{"table", r.table},    {"rows", rows},
          {"missing", r.missing}, {"warnings", r.warnings},
          {"complete", r.complete()}, {"all_pass", r.all_pass()}};
}

}  // namespace ecbayes
