#include "ecbayes/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "ecbayes/error.hpp"

namespace ecbayes {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& pointer, const std::string& message) {
  throw Error(ErrorKind::config, (pointer.empty() ? std::string("/") : pointer) + ": " + message);
}

void require_object(const json& doc, const std::string& pointer) {
  if (!doc.is_object()) fail(pointer, "expected an object");
}

double number_at(const json& doc, const char* key, const std::string& pointer) {
  const std::string where = pointer + "/" + key;
  if (!doc.contains(key)) fail(where, "required field is missing");
  const auto& v = doc.at(key);
  if (!v.is_number()) fail(where, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(where, "must be finite");
  return d;
}

double number_or(const json& doc, const char* key, const std::string& pointer, double fallback) {
  return doc.contains(key) ? number_at(doc, key, pointer) : fallback;
}

std::uint64_t unsigned_or(const json& doc, const char* key, const std::string& pointer, std::uint64_t fallback) {
  if (!doc.contains(key)) return fallback;
  const auto& v = doc.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    fail(pointer + "/" + key, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string string_or(const json& doc, const char* key, const std::string& pointer, std::string fallback) {
  if (!doc.contains(key)) return fallback;
  const auto& v = doc.at(key);
  if (!v.is_string()) fail(pointer + "/" + key, "expected a string");
  return v.get<std::string>();
}

std::array<double, 2> pair_at(const json& doc, const char* key, const std::string& pointer) {
  const std::string where = pointer + "/" + key;
  if (!doc.contains(key)) fail(where, "required field is missing");
  const auto& v = doc.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) fail(where, "expected [number, number]");
  return {v[0].get<double>(), v[1].get<double>()};
}

// Accepts [[a, b], [b, d]] or a diagonal [a, d].
Cov2 cov_at(const json& doc, const char* key, const std::string& pointer) {
  const std::string where = pointer + "/" + key;
  if (!doc.contains(key)) fail(where, "required field is missing");
  const auto& v = doc.at(key);
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return Cov2::diagonal(v[0].get<double>(), v[1].get<double>());
  if (!v.is_array() || v.size() != 2) fail(where, "expected a 2x2 matrix");
  for (std::size_t i = 0; i < 2; ++i) {
    if (!v[i].is_array() || v[i].size() != 2 || !v[i][0].is_number() || !v[i][1].is_number())
      fail(where + "/" + std::to_string(i), "expected [number, number]");
  }
  const double a = v[0][0].get<double>(), b = v[0][1].get<double>();
  const double c = v[1][0].get<double>(), d = v[1][1].get<double>();
  if (std::abs(b - c) > 1e-12 * std::max({1.0, std::abs(b), std::abs(c)})) fail(where, "matrix must be symmetric");
  return {a, b, d};
}

json cov_json(const Cov2& c) { return json::array({json::array({c.xx, c.xy}), json::array({c.xy, c.yy})}); }

}  // namespace

SamplerOptions AnalysisConfig::sampler_options(unsigned workers) const {
  SamplerOptions o;
  o.draws = sampler.draws;
  o.chains = sampler.chains;
  o.workers = workers;
  return o;
}

ObservationSpec parse_observation(const json& doc, const std::string& pointer) {
  require_object(doc, pointer);
  ObservationSpec obs{number_at(doc, "z", pointer), number_at(doc, "sigma_z", pointer)};
  if (!(obs.sigma_z > 0.0)) fail(pointer + "/sigma_z", "must be > 0");
  return obs;
}

PredictorPrior parse_predictor_prior(const json& doc, const std::string& pointer) {
  require_object(doc, pointer);
  const auto kind = string_or(doc, "kind", pointer, "flat");
  if (kind == "flat") return PredictorPrior::flat();
  if (kind != "normal") fail(pointer + "/kind", "expected \"flat\" or \"normal\"");
  const auto prior = PredictorPrior::normal(number_at(doc, "mu_x", pointer), number_at(doc, "sigma_x", pointer));
  if (!(prior.sigma_x > 0.0)) fail(pointer + "/sigma_x", "must be > 0");
  return prior;
}

ModelPrior parse_model_prior(const json& doc, const std::string& pointer) {
  require_object(doc, pointer);
  const auto kind = string_or(doc, "kind", pointer, "reference");
  if (kind == "reference") return ModelPrior::reference();
  if (kind != "subjective") fail(pointer + "/kind", "expected \"reference\" or \"subjective\"");
  const auto mu = doc.contains("mu") ? pair_at(doc, "mu", pointer) : std::array<double, 2>{0.0, 0.0};
  const auto sigma_beta = cov_at(doc, "Sigma_beta", pointer);
  if (!sigma_beta.is_positive_definite()) fail(pointer + "/Sigma_beta", "must be positive definite");
  const double sigma_s = number_at(doc, "sigma_s", pointer);
  if (!(sigma_s > 0.0)) fail(pointer + "/sigma_s", "must be > 0");
  return ModelPrior::subjective(mu, sigma_beta, sigma_s);
}

RealitySpec parse_reality_spec(const json& doc, const std::string& pointer) {
  require_object(doc, pointer);
  const auto kind = string_or(doc, "kind", pointer, "collapsed");
  if (kind == "collapsed") return RealitySpec::collapsed();
  if (kind == "manual") {
    const auto cov = cov_at(doc, "Sigma_beta_star", pointer);
    if (!cov.is_psd()) fail(pointer + "/Sigma_beta_star", "must be positive semidefinite");
    const double xi = number_or(doc, "xi", pointer, 0.0);
    if (xi < 0.0) fail(pointer + "/xi", "must be >= 0");
    return RealitySpec::manual(cov, xi);
  }
  if (kind != "guided") fail(pointer + "/kind", "expected \"collapsed\", \"manual\" or \"guided\"");

  GuidedJudgements j;
  const auto label = string_or(doc, "confidence", pointer, doc.contains("alpha") ? "custom" : "");
  if (label.empty()) fail(pointer + "/confidence", "required field is missing");
  if (label == "custom") {
    const double alpha = number_at(doc, "alpha", pointer);
    if (!(alpha > 0.0 && alpha < 1.0)) fail(pointer + "/alpha", "must lie in (0, 1)");
    j.confidence = ConfidenceLevel::custom(alpha);
  } else {
    try {
      j.confidence = ConfidenceLevel::parse(label);
    } catch (const Error& e) {
      fail(pointer + "/confidence", e.what());
    }
  }
  j.mu_y_star = number_at(doc, "mu_y_star", pointer);
  j.sigma_y_star = number_at(doc, "sigma_y_star", pointer);
  if (!(j.sigma_y_star > 0.0)) fail(pointer + "/sigma_y_star", "must be > 0");
  const auto sign = string_or(doc, "sign", pointer, "positive");
  try {
    j.sign = parse_sign(sign);
  } catch (const Error& e) {
    fail(pointer + "/sign", e.what());
  }
  return RealitySpec::guided_by(j);
}

std::vector<double> parse_levels(const json& doc, const std::string& pointer) {
  if (!doc.is_array() || doc.empty()) fail(pointer, "expected a non-empty array of probabilities");
  std::vector<double> levels;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    if (!doc[i].is_number()) fail(pointer + "/" + std::to_string(i), "expected a number");
    const double p = doc[i].get<double>();
    if (!(p > 0.0 && p < 1.0)) fail(pointer + "/" + std::to_string(i), "level must lie in (0, 1)");
    levels.push_back(p);
  }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  return levels;
}

SamplerConfig parse_sampler(const json& doc, const std::string& pointer) {
  require_object(doc, pointer);
  SamplerConfig out;
  out.draws = unsigned_or(doc, "draws", pointer, out.draws);
  out.chains = unsigned_or(doc, "chains", pointer, out.chains);
  out.seed = unsigned_or(doc, "seed", pointer, out.seed);
  if (out.draws < kMinConfigDraws) fail(pointer + "/draws", "must be >= 1000");
  if (out.chains < kMinConfigChains) fail(pointer + "/chains", "must be >= 2");
  return out;
}

IntervalKind parse_interval_kind(const json& doc, const std::string& pointer) {
  if (doc == "equal_tailed") return IntervalKind::equal_tailed;
  if (doc == "hdi") return IntervalKind::hdi;
  fail(pointer, "expected \"equal_tailed\" or \"hdi\"");
}

AnalysisConfig parse_config(const json& doc) {
  require_object(doc, "");
  AnalysisConfig cfg;
  if (!doc.contains("observation")) fail("/observation", "required field is missing");
  cfg.observation = parse_observation(doc.at("observation"), "/observation");
  if (doc.contains("predictor_prior")) cfg.predictor_prior = parse_predictor_prior(doc.at("predictor_prior"), "/predictor_prior");
  if (doc.contains("model_prior")) cfg.model_prior = parse_model_prior(doc.at("model_prior"), "/model_prior");
  if (doc.contains("reality")) cfg.reality = parse_reality_spec(doc.at("reality"), "/reality");
  if (doc.contains("sampler")) cfg.sampler = parse_sampler(doc.at("sampler"), "/sampler");
  if (doc.contains("levels")) cfg.levels = parse_levels(doc.at("levels"), "/levels");
  if (doc.contains("interval")) cfg.interval_kind = parse_interval_kind(doc.at("interval"), "/interval");
  return cfg;
}

AnalysisConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::not_found, "cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::config, std::string("/: invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

json to_json(const ModelPrior& prior) {
  if (prior.kind == ModelPrior::Kind::reference) return {{"kind", "reference"}};
  return {{"kind", "subjective"},
          {"mu", json::array({prior.mu[0], prior.mu[1]})},
          {"Sigma_beta", cov_json(prior.sigma_beta)},
          {"sigma_s", prior.sigma_s}};
}

json to_json(const RealitySpec& spec) {
  switch (spec.kind) {
    case RealitySpec::Kind::collapsed:
      return {{"kind", "collapsed"}};
    case RealitySpec::Kind::manual:
      return {{"kind", "manual"}, {"Sigma_beta_star", cov_json(spec.sigma_beta_star)}, {"xi", spec.xi}};
    case RealitySpec::Kind::guided: {
      const auto& j = spec.guided;
      json out{{"kind", "guided"},
               {"confidence", std::string(j.confidence.name())},
               {"mu_y_star", j.mu_y_star},
               {"sigma_y_star", j.sigma_y_star},
               {"sign", std::string(to_string(j.sign))}};
      if (j.confidence.label == ConfidenceLevel::Label::custom) out["alpha"] = j.confidence.alpha;
      return out;
    }
  }
  return {};
}

json to_json(const AnalysisConfig& cfg) {
  json prior{{"kind", cfg.predictor_prior.kind == PredictorPrior::Kind::flat ? "flat" : "normal"}};
  if (cfg.predictor_prior.kind == PredictorPrior::Kind::normal) {
    prior["mu_x"] = cfg.predictor_prior.mu_x;
    prior["sigma_x"] = cfg.predictor_prior.sigma_x;
  }
  return {{"observation", {{"z", cfg.observation.z}, {"sigma_z", cfg.observation.sigma_z}}},
          {"predictor_prior", prior},
          {"model_prior", to_json(cfg.model_prior)},
          {"reality", to_json(cfg.reality)},
          {"sampler", {{"draws", cfg.sampler.draws}, {"chains", cfg.sampler.chains}, {"seed", cfg.sampler.seed}}},
          {"levels", cfg.levels},
          {"interval", cfg.interval_kind == IntervalKind::hdi ? "hdi" : "equal_tailed"}};
}

std::string config_digest(const AnalysisConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json(cfg).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ecbayes
