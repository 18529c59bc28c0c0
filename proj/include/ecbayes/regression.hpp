#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ecbayes/dataio.hpp"
#include "ecbayes/distributions.hpp"
#include "ecbayes/random.hpp"

namespace ecbayes {

/// Prior on the ensemble regression y_i ~ N(b0 + b1 x_i, sigma^2).
///   reference:  pi(beta, sigma^2) proportional to 1 / sigma^2
///   subjective: beta ~ N(mu, sigma_beta), sigma ~ HalfNormal(0, sigma_s^2)
struct ModelPrior {
  enum class Kind { reference, subjective };
  Kind kind = Kind::reference;
  std::array<double, 2> mu{0.0, 0.0};
  Cov2 sigma_beta{};
  double sigma_s = 1.0;

  static ModelPrior reference() { return {}; }
  static ModelPrior subjective(std::array<double, 2> mu, Cov2 sigma_beta, double sigma_s) {
    return {Kind::subjective, mu, sigma_beta, sigma_s};
  }
  /// Subjective priors need a positive-definite sigma_beta and sigma_s > 0.
  void validate() const;
};

struct Draw {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double sigma = 0.0;

  bool operator==(const Draw&) const = default;
};

struct ConvergenceReport {
  std::array<double, 3> rhat{};  // beta0, beta1, sigma
  std::array<double, 3> ess{};
  std::size_t iterations_per_chain = 0;
  bool converged = false;
};

struct RegressionPosterior {
  /// Retained draws, chain-major: chain c occupies [c * per_chain, (c+1) * per_chain).
  std::vector<Draw> draws;
  std::size_t chains = 1;
  ModelPrior prior;
  std::optional<ConvergenceReport> convergence;  // MCMC path only
  std::vector<std::string> warnings;

  std::size_t per_chain() const { return draws.size() / chains; }
};

struct SamplerOptions {
  std::size_t draws = 20000;  // retained, summed over chains
  std::size_t chains = 4;
  unsigned workers = 0;       // 0 = hardware concurrency
  double rhat_max = 1.01;
  double ess_min = 400.0;
  /// The chain length is doubled up to this many times while diagnostics fail.
  int max_extensions = 3;
  /// Throw ErrorKind::convergence instead of attaching a warning.
  bool strict = false;
};

/// Exact draws from the Normal / scaled-inverse-chi-squared posterior under
/// the reference prior. Requires n >= 4 and a positive residual sum of squares.
RegressionPosterior fit_reference(const Ensemble& e, std::size_t draws, RandomStream& rng,
                                  unsigned workers = 0);

/// Gibbs sampler for the subjective prior: conjugate Normal update for beta
/// given sigma, univariate slice sampling for sigma given beta. The first half
/// of each chain is discarded.
RegressionPosterior fit_subjective(const Ensemble& e, const ModelPrior& prior, const SamplerOptions& opts,
                                   RandomStream& rng);

/// Dispatches on prior.kind.
RegressionPosterior fit_posterior(const Ensemble& e, const ModelPrior& prior, const SamplerOptions& opts,
                                  RandomStream& rng);

struct PosteriorSummary {
  double beta0_hat = 0.0;
  double beta1_hat = 0.0;
  double sd_beta0 = 0.0;
  double sd_beta1 = 0.0;
  double rho = 0.0;
  FoldedNormal sigma_fn{};
  double sigma_mean = 0.0;
  double sigma_sd = 0.0;
  std::size_t draws = 0;

  Gaussian2D beta() const {
    return {{beta0_hat, beta1_hat}, Cov2::from_sd_corr(sd_beta0, sd_beta1, rho)};
  }
};

inline constexpr std::size_t kMinSummaryDraws = 1000;

PosteriorSummary summarize(const RegressionPosterior& p);

struct LaplaceReport {
  std::array<double, 3> skewness{};         // beta0, beta1, sigma
  std::array<double, 3> excess_kurtosis{};
  bool approximately_normal = false;        // judged on beta0 and beta1 only
};

/// Normality flag: |skewness| < 0.2 and |excess kurtosis| < 0.5 for both betas.
LaplaceReport laplace_check(const RegressionPosterior& p);

}  // namespace ecbayes
