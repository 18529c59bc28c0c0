#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ecbayes/dataio.hpp"
#include "ecbayes/mining.hpp"
#include "ecbayes/predictive.hpp"
#include "ecbayes/reality.hpp"
#include "ecbayes/regression.hpp"

namespace ecbayes {

/// Level keys are written with up to six significant digits ("0.66").
std::string level_key(double level);

nlohmann::json to_json(const PosteriorSummary& s);
nlohmann::json to_json(const LaplaceReport& r);
nlohmann::json to_json(const ConvergenceReport& r);
nlohmann::json to_json(const CatalogEntry& entry);
nlohmann::json to_json(const MiningResult& r);

/// Reality prior plus derived quantities: component sds, correlation and, for
/// a non-degenerate slope, the implied sign-flip probability.
nlohmann::json reality_json(const RealityPrior& rp);

/// {"median", "intervals", "density", "x_star", "seed", "draws", ...}
nlohmann::json to_json(const PredictiveResult& r);

/// Inverse of to_json(PredictiveResult) for the documented fields
/// (draws themselves are not serialized).
PredictiveResult predictive_result_from_json(const nlohmann::json& doc);

/// Fit payload: summary, Laplace check, diagnostics and warnings.
nlohmann::json fit_payload(const RegressionPosterior& post, const PosteriorSummary& summary,
                           const Ensemble& e);

// Plain CSV tables.
void write_density_csv(std::ostream& out, const std::vector<DensityPoint>& density);
std::vector<DensityPoint> parse_density_csv(std::string_view text);
void write_draws_csv(std::ostream& out, const RegressionPosterior& post);
/// Reads `chain,beta0,beta1,sigma` rows back into a reference-kind posterior.
RegressionPosterior parse_draws_csv(std::string_view text);

}  // namespace ecbayes
