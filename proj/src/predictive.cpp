#include "ecbayes/predictive.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ecbayes/error.hpp"
#include "ecbayes/parallel.hpp"

namespace ecbayes {
namespace {

template <typename F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    rethrow_with_stage(e, stage);
  }
}

double sample_sd(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::domain, "interval level must lie in (0, 1)");
}

}  // namespace

Gaussian1D posterior_x_star(const ObservationSpec& obs, const PredictorPrior& prior) {
  obs.validate();
  prior.validate();
  if (prior.kind == PredictorPrior::Kind::flat) return {obs.z, obs.sigma_z};
  const double prec_prior = 1.0 / (prior.sigma_x * prior.sigma_x);
  const double prec_obs = 1.0 / (obs.sigma_z * obs.sigma_z);
  const double prec = prec_prior + prec_obs;
  return {(prior.mu_x * prec_prior + obs.z * prec_obs) / prec, 1.0 / std::sqrt(prec)};
}

std::vector<double> sample_predictive(const RegressionPosterior& post, const RealityPrior& reality,
                                      const Gaussian1D& xstar, RandomStream& rng, unsigned workers) {
  if (post.draws.empty()) throw Error(ErrorKind::insufficient_data, "sample_predictive: empty posterior");
  if (!reality.sigma_beta_star.is_psd())
    throw Error(ErrorKind::domain, "reality Sigma_beta_star is not positive semidefinite");
  if (!std::isfinite(reality.xi) || reality.xi < 0.0) throw Error(ErrorKind::domain, "reality xi must be >= 0");
  xstar.validate();

  const auto [l11, l21, l22] = reality.sigma_beta_star.cholesky();
  const double xi_sd = std::sqrt(reality.xi);
  const std::size_t n = post.draws.size();
  std::vector<double> out(n);

  const std::size_t blocks = (n + kDrawBlock - 1) / kDrawBlock;
  parallel_for(blocks, workers, [&](std::size_t b) {
    RandomStream block_rng = rng.child(b);
    const std::size_t end = std::min(n, (b + 1) * kDrawBlock);
    for (std::size_t i = b * kDrawBlock; i < end; ++i) {
      const Draw& d = post.draws[i];
      // Always consume five normals per draw so that different reality
      // settings share the same underlying random numbers.
      const double z1 = block_rng.normal();
      const double z2 = block_rng.normal();
      const double z3 = block_rng.normal();
      const double z4 = block_rng.normal();
      const double z5 = block_rng.normal();
      const double b0 = d.beta0 + l11 * z1;
      const double b1 = d.beta1 + l21 * z1 + l22 * z2;
      const double sigma = std::abs(d.sigma + xi_sd * z3);
      const double x = xstar.mean + xstar.sd * z4;
      out[i] = b0 + b1 * x + sigma * z5;
    }
  });
  return out;
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorKind::insufficient_data, "quantile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Interval credible_interval(std::span<const double> draws, double level) {
  check_level(level);
  if (draws.size() < kMinIntervalDraws)
    throw Error(ErrorKind::insufficient_data, "credible_interval needs at least 1000 draws");
  const double tail = (1.0 - level) / 2.0;
  if (tail * static_cast<double>(draws.size()) < 1.0) {
    throw Error(ErrorKind::insufficient_data,
                "interval level too extreme for " + std::to_string(draws.size()) + " draws");
  }
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  return {quantile_sorted(sorted, tail), quantile_sorted(sorted, 1.0 - tail)};
}

Interval hdi_interval(std::span<const double> draws, double level) {
  check_level(level);
  if (draws.size() < kMinIntervalDraws) throw Error(ErrorKind::insufficient_data, "hdi_interval needs at least 1000 draws");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const auto k = static_cast<std::size_t>(std::ceil(level * static_cast<double>(sorted.size())));
  if (k < 2 || k >= sorted.size()) throw Error(ErrorKind::insufficient_data, "interval level too extreme");
  std::size_t best = 0;
  for (std::size_t i = 1; i + k - 1 < sorted.size(); ++i) {
    if (sorted[i + k - 1] - sorted[i] < sorted[best + k - 1] - sorted[best]) best = i;
  }
  return {sorted[best], sorted[best + k - 1]};
}

double silverman_bandwidth(std::span<const double> sorted) {
  const double sd = sample_sd(sorted);
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(static_cast<double>(sorted.size()), -0.2);
}

std::vector<DensityPoint> kde_density(std::span<const double> draws) {
  if (draws.size() < kMinIntervalDraws) throw Error(ErrorKind::insufficient_data, "kde_density needs at least 1000 draws");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  if (!(sorted.back() > sorted.front())) throw Error(ErrorKind::domain, "kde_density: draws have zero variance");

  const double h = silverman_bandwidth(sorted);
  const double lo = sorted.front() - 3.0 * h;
  const double hi = sorted.back() + 3.0 * h;
  const double step = (hi - lo) / static_cast<double>(kDensityGridPoints - 1);
  const double norm = 1.0 / (static_cast<double>(sorted.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  constexpr double kCutoff = 8.0;  // kernel bandwidths

  std::vector<DensityPoint> grid(kDensityGridPoints);
  for (std::size_t g = 0; g < kDensityGridPoints; ++g) {
    const double x = lo + step * static_cast<double>(g);
    const auto first = std::lower_bound(sorted.begin(), sorted.end(), x - kCutoff * h);
    const auto last = std::upper_bound(first, sorted.end(), x + kCutoff * h);
    double sum = 0.0;
    for (auto it = first; it != last; ++it) {
      const double u = (x - *it) / h;
      sum += std::exp(-0.5 * u * u);
    }
    grid[g] = {x, sum * norm};
  }
  return grid;
}

const Interval& PredictiveResult::interval(double level) const {
  for (const auto& li : intervals) {
    if (std::abs(li.level - level) < 1e-12) return li.interval;
  }
  throw Error(ErrorKind::not_found, "no interval at level " + std::to_string(level));
}

PredictiveResult predict_from_posterior(const AnalysisConfig& cfg, const RegressionPosterior& post,
                                        const PosteriorSummary& summary, unsigned workers) {
  PredictiveResult result;
  result.seed = cfg.sampler.seed;
  result.provenance = config_digest(cfg);
  result.reality = staged("reality", [&] { return build_reality_prior(summary, cfg.reality); });
  result.x_star = staged("observation", [&] { return posterior_x_star(cfg.observation, cfg.predictor_prior); });

  auto rng = predictive_stream(cfg.sampler.seed);
  result.y_star_draws = staged("predictive", [&] { return sample_predictive(post, result.reality, result.x_star, rng, workers); });

  staged("summary", [&] {
    std::vector<double> sorted = result.y_star_draws;
    std::sort(sorted.begin(), sorted.end());
    result.median = quantile_sorted(sorted, 0.5);
    for (double level : cfg.levels) {
      const Interval iv = cfg.interval_kind == IntervalKind::hdi ? hdi_interval(sorted, level)
                                                                 : credible_interval(sorted, level);
      result.intervals.push_back({level, iv});
    }
    std::sort(result.intervals.begin(), result.intervals.end(),
              [](const auto& a, const auto& b) { return a.level < b.level; });
    result.density = kde_density(sorted);
    return 0;
  });

  result.warnings = post.warnings;
  result.warnings.insert(result.warnings.end(), result.reality.warnings.begin(), result.reality.warnings.end());
  return result;
}

PredictiveResult run_constraint(const AnalysisConfig& cfg, const Ensemble& e, unsigned workers) {
  auto rng = fit_stream(cfg.sampler.seed);
  const auto post = staged("fit", [&] { return fit_posterior(e, cfg.model_prior, cfg.sampler_options(workers), rng); });
  const auto summary = staged("summarize", [&] { return summarize(post); });
  return predict_from_posterior(cfg, post, summary, workers);
}

}  // namespace ecbayes
