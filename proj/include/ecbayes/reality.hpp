#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ecbayes/distributions.hpp"
#include "ecbayes/regression.hpp"

namespace ecbayes {

/// Confidence that the emergent relationship carries over to reality,
/// expressed as alpha = P(the slope changes sign) * 2.
struct ConfidenceLevel {
  enum class Label { virtually_certain, very_likely, likely, coin_flip, custom };
  Label label = Label::likely;
  double alpha = 0.34;

  static ConfidenceLevel from_label(Label label);
  static ConfidenceLevel custom(double alpha);
  /// Accepts the label names used in configs ("virtually_certain", ...).
  /// Throws ErrorKind::config for an unknown label.
  static ConfidenceLevel parse(std::string_view label);

  std::string_view name() const;
  void validate() const;
};

enum class ConstraintSign { positive, negative };

std::string_view to_string(ConstraintSign sign);
ConstraintSign parse_sign(std::string_view text);

/// Everything the guided elicitation asks of the user.
struct GuidedJudgements {
  ConfidenceLevel confidence{};
  double mu_y_star = 0.0;     // current expectation of the response
  double sigma_y_star = 1.0;  // current sd of the response
  ConstraintSign sign = ConstraintSign::positive;

  void validate() const;
};

struct RealitySpec {
  enum class Kind { collapsed, manual, guided };
  Kind kind = Kind::collapsed;
  Cov2 sigma_beta_star{};  // manual
  double xi = 0.0;         // manual
  GuidedJudgements guided{};

  static RealitySpec collapsed() { return {}; }
  static RealitySpec manual(Cov2 sigma_beta_star, double xi) { return {Kind::manual, sigma_beta_star, xi, {}}; }
  static RealitySpec guided_by(GuidedJudgements j) { return {Kind::guided, {}, 0.0, j}; }
};

/// Reality layer: beta* | beta ~ N(beta, sigma_beta_star), sigma* | sigma ~ FN(sigma, xi).
struct RealityPrior {
  Cov2 sigma_beta_star{};
  double xi = 0.0;
  PosteriorSummary summary{};
  std::vector<std::string> warnings;
};

/// Extra slope variance such that P(beta1* changes sign) = alpha / 2 under
/// beta1* ~ N(beta1_hat, sd_beta1^2 + result). Clamped at 0.
double guided_slope_variance(double beta1_hat, double sd_beta1, double alpha, ConstraintSign sign);
/// Extra intercept variance such that P(beta0* beyond mu_y_star) = alpha / 2.
/// Clamped at 0.
double guided_intercept_variance(double beta0_hat, double sd_beta0, double mu_y_star, double alpha);

/// Unclamped forms of the two formulas above; negative values mean the
/// stated confidence is weaker than what the posterior already implies.
double guided_slope_variance_unclamped(double beta1_hat, double sd_beta1, double alpha);
double guided_intercept_variance_unclamped(double beta0_hat, double sd_beta0, double mu_y_star, double alpha);

/// Smallest xi* >= 0 with P(sigma* > sigma_y_star) >= alpha / 2 where
/// sigma* ~ FN(s_hat, xi_hat + xi*). Bracketing followed by bisection.
double solve_xi_star(const FoldedNormal& sigma_fn, double sigma_y_star, double alpha);

/// P(beta1* has the opposite sign to beta1_hat) under N(beta1_hat, total_sd^2).
double sign_flip_probability(double beta1_hat, double total_sd);

/// Assembles the reality layer from a posterior summary.
RealityPrior build_reality_prior(const PosteriorSummary& summary, const RealitySpec& spec);

}  // namespace ecbayes
