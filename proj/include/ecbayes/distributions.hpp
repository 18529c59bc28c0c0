#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "ecbayes/random.hpp"

namespace ecbayes {

// ---------------------------------------------------------------------------
// Standard Normal helpers
// ---------------------------------------------------------------------------

double normal_pdf(double z);
double normal_cdf(double z);
/// Upper tail 1 - Phi(z), accurate far into the right tail.
double normal_sf(double z);
/// Inverse standard Normal cdf. Throws ErrorKind::domain unless 0 < p < 1.
double normal_quantile(double p);

// ---------------------------------------------------------------------------
// Univariate Normal
// ---------------------------------------------------------------------------

/// N(mean, sd^2). sd == 0 is accepted as a point mass for sampling only.
struct Gaussian1D {
  double mean = 0.0;
  double sd = 1.0;

  void validate() const;
  double sample(RandomStream& rng) const { return mean + sd * rng.normal(); }
};

// ---------------------------------------------------------------------------
// Symmetric 2x2 covariance and the bivariate Normal
// ---------------------------------------------------------------------------

struct Cov2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  static Cov2 diagonal(double vx, double vy) { return {vx, 0.0, vy}; }
  /// Covariance from standard deviations and a correlation.
  static Cov2 from_sd_corr(double sdx, double sdy, double rho) { return {sdx * sdx, rho * sdx * sdy, sdy * sdy}; }

  double determinant() const { return xx * yy - xy * xy; }
  bool is_zero() const { return xx == 0.0 && xy == 0.0 && yy == 0.0; }
  /// Positive semidefinite up to a relative round-off allowance.
  bool is_psd() const;
  bool is_positive_definite() const;

  /// Lower-triangular factor L with L L^T = *this; valid for singular PSD input.
  /// Returned as {l11, l21, l22}.
  std::array<double, 3> cholesky() const;
};

struct Gaussian2D {
  std::array<double, 2> mean{0.0, 0.0};
  Cov2 cov{};
};

/// Draws from a bivariate Normal. A zero covariance yields copies of the mean.
/// Throws ErrorKind::domain when cov is not PSD.
std::vector<std::array<double, 2>> mvn2_sample(const Gaussian2D& d, std::size_t n, RandomStream& rng);

// ---------------------------------------------------------------------------
// Folded Normal: distribution of |N(location, spread2)|
// ---------------------------------------------------------------------------

/// Half-Normal is the location == 0 case. spread2 is the variance of the
/// Normal before folding, not the variance of the folded variable.
struct FoldedNormal {
  double location = 0.0;
  double spread2 = 1.0;

  static FoldedNormal half_normal(double spread2) { return {0.0, spread2}; }

  /// Throws ErrorKind::domain unless location is finite and spread2 > 0.
  void validate() const;
  double mean() const;
  double variance() const;
};

double fn_pdf(double x, const FoldedNormal& d);
double fn_log_pdf(double x, const FoldedNormal& d);
double fn_cdf(double x, const FoldedNormal& d);
/// P(X > x). Accepts spread2 == 0 as a point mass at |location|.
double fn_survival(double x, const FoldedNormal& d);
/// Bisection on the cdf over [0, location + 10 sqrt(spread2)].
double fn_quantile(double p, const FoldedNormal& d);

/// |N(location, spread2)| draws; spread2 == 0 gives a point mass.
std::vector<double> fn_sample(const FoldedNormal& d, std::size_t n, RandomStream& rng);
double fn_sample_one(double location, double spread2, RandomStream& rng);

double fn_log_likelihood(std::span<const double> samples, const FoldedNormal& d);

/// Moment-matched starting point: matches E[X] / sqrt(E[X^2]) and E[X^2].
FoldedNormal fn_moment_match(std::span<const double> samples);

/// Maximum-likelihood fit by a Nelder-Mead simplex over (location, log spread2)
/// started at the moment-matched point. Requires >= 30 non-negative samples
/// with positive variance. The returned location is >= 0 (the likelihood is
/// symmetric in the sign of the location).
FoldedNormal fn_fit_mle(std::span<const double> samples);

inline constexpr std::size_t kMinFitSamples = 30;

}  // namespace ecbayes
