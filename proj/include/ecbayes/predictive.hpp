#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ecbayes/config.hpp"
#include "ecbayes/dataio.hpp"
#include "ecbayes/distributions.hpp"
#include "ecbayes/reality.hpp"
#include "ecbayes/regression.hpp"

namespace ecbayes {

/// Posterior for the real-world predictor given its observation.
/// Flat prior: N(z, sigma_z^2). Normal prior: conjugate precision-weighted update.
Gaussian1D posterior_x_star(const ObservationSpec& obs, const PredictorPrior& prior);

/// One y* per retained posterior draw:
///   beta* ~ N(beta, Sigma*), sigma* ~ FN(sigma, xi), x* ~ xstar,
///   y* ~ N(beta0* + beta1* x*, sigma*^2).
/// Draws are produced in fixed-size blocks with one child stream per block, so
/// the output does not depend on the worker count.
std::vector<double> sample_predictive(const RegressionPosterior& post, const RealityPrior& reality,
                                      const Gaussian1D& xstar, RandomStream& rng, unsigned workers = 0);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double v) const { return lo <= v && v <= hi; }
};

inline constexpr std::size_t kMinIntervalDraws = 1000;

/// Linear-interpolation (type 7) quantile of already sorted data.
double quantile_sorted(std::span<const double> sorted, double p);

/// Equal-tailed interval [(1 - level) / 2, (1 + level) / 2]. Throws when the
/// tail probability falls below one order statistic.
Interval credible_interval(std::span<const double> draws, double level);
/// Shortest interval containing ceil(level * n) draws.
Interval hdi_interval(std::span<const double> draws, double level);

struct DensityPoint {
  double x = 0.0;
  double density = 0.0;
};

inline constexpr std::size_t kDensityGridPoints = 512;

/// Gaussian kernel density with Silverman's bandwidth
/// 0.9 min(sd, IQR / 1.34) n^(-1/5) on a 512-point grid over [min - 3h, max + 3h].
std::vector<DensityPoint> kde_density(std::span<const double> draws);
double silverman_bandwidth(std::span<const double> sorted);

struct LevelInterval {
  double level = 0.0;
  Interval interval{};
};

struct PredictiveResult {
  std::vector<double> y_star_draws;
  std::vector<LevelInterval> intervals;  // ascending level
  double median = 0.0;
  std::vector<DensityPoint> density;
  Gaussian1D x_star{};
  std::string provenance;  // config digest
  std::uint64_t seed = 0;
  RealityPrior reality{};
  std::vector<std::string> warnings;

  const Interval& interval(double level) const;
};

/// Reality layer, x* posterior, y* sampling and summaries for an existing
/// posterior. Used directly by the service to avoid refitting.
PredictiveResult predict_from_posterior(const AnalysisConfig& cfg, const RegressionPosterior& post,
                                        const PosteriorSummary& summary, unsigned workers = 0);

/// Full pipeline: fit, summarize, reality prior, x* posterior, y* draws,
/// intervals and density. Errors carry the failing stage label.
PredictiveResult run_constraint(const AnalysisConfig& cfg, const Ensemble& e, unsigned workers = 0);

/// Random streams used by the pipeline stages for a given seed.
inline RandomStream fit_stream(std::uint64_t seed) { return RandomStream(seed, 0); }
inline RandomStream predictive_stream(std::uint64_t seed) { return RandomStream(seed, 1); }

}  // namespace ecbayes
