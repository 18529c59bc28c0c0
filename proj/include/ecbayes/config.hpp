#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecbayes/dataio.hpp"
#include "ecbayes/reality.hpp"
#include "ecbayes/regression.hpp"

namespace ecbayes {

struct SamplerConfig {
  std::size_t draws = 20000;
  std::size_t chains = 4;
  std::uint64_t seed = 1;
};

enum class IntervalKind { equal_tailed, hdi };

struct AnalysisConfig {
  ModelPrior model_prior = ModelPrior::reference();
  RealitySpec reality = RealitySpec::collapsed();
  ObservationSpec observation{};
  PredictorPrior predictor_prior = PredictorPrior::flat();
  SamplerConfig sampler{};
  std::vector<double> levels{0.66, 0.90, 0.95};
  IntervalKind interval_kind = IntervalKind::equal_tailed;

  SamplerOptions sampler_options(unsigned workers = 0) const;
};

inline constexpr std::size_t kMinConfigDraws = 1000;
inline constexpr std::size_t kMinConfigChains = 2;

/// Validates and fills defaults. Violations throw ErrorKind::config with a
/// message starting with the JSON pointer of the offending field.
AnalysisConfig parse_config(const nlohmann::json& doc);
AnalysisConfig load_config(const std::string& path);

ModelPrior parse_model_prior(const nlohmann::json& doc, const std::string& pointer);
RealitySpec parse_reality_spec(const nlohmann::json& doc, const std::string& pointer);
ObservationSpec parse_observation(const nlohmann::json& doc, const std::string& pointer);
PredictorPrior parse_predictor_prior(const nlohmann::json& doc, const std::string& pointer);
std::vector<double> parse_levels(const nlohmann::json& doc, const std::string& pointer);
SamplerConfig parse_sampler(const nlohmann::json& doc, const std::string& pointer);
IntervalKind parse_interval_kind(const nlohmann::json& doc, const std::string& pointer);

nlohmann::json to_json(const AnalysisConfig& cfg);
nlohmann::json to_json(const ModelPrior& prior);
nlohmann::json to_json(const RealitySpec& spec);

/// Stable 64-bit FNV-1a digest of the canonical config JSON, as 16 hex digits.
std::string config_digest(const AnalysisConfig& cfg);

}  // namespace ecbayes
