#include "ecbayes/reality.hpp"

#include <cmath>
#include <sstream>

#include "ecbayes/error.hpp"

namespace ecbayes {
namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::domain, "confidence alpha must lie in (0, 1)");
}

}  // namespace

ConfidenceLevel ConfidenceLevel::from_label(Label label) {
  switch (label) {
    case Label::virtually_certain: return {label, 0.01};
    case Label::very_likely: return {label, 0.10};
    case Label::likely: return {label, 0.34};
    case Label::coin_flip: return {label, 0.499};
    case Label::custom: break;
  }
  throw Error(ErrorKind::domain, "custom confidence needs an explicit alpha");
}

ConfidenceLevel ConfidenceLevel::custom(double alpha) {
  check_alpha(alpha);
  return {Label::custom, alpha};
}

ConfidenceLevel ConfidenceLevel::parse(std::string_view label) {
  if (label == "virtually_certain") return from_label(Label::virtually_certain);
  if (label == "very_likely") return from_label(Label::very_likely);
  if (label == "likely") return from_label(Label::likely);
  if (label == "coin_flip") return from_label(Label::coin_flip);
  throw Error(ErrorKind::config, "unknown confidence level '" + std::string(label) + "'");
}

std::string_view ConfidenceLevel::name() const {
  switch (label) {
    case Label::virtually_certain: return "virtually_certain";
    case Label::very_likely: return "very_likely";
    case Label::likely: return "likely";
    case Label::coin_flip: return "coin_flip";
    case Label::custom: return "custom";
  }
  return "custom";
}

void ConfidenceLevel::validate() const { check_alpha(alpha); }

std::string_view to_string(ConstraintSign sign) { return sign == ConstraintSign::positive ? "positive" : "negative"; }

ConstraintSign parse_sign(std::string_view text) {
  if (text == "positive") return ConstraintSign::positive;
  if (text == "negative") return ConstraintSign::negative;
  throw Error(ErrorKind::config, "constraint sign must be 'positive' or 'negative'");
}

void GuidedJudgements::validate() const {
  confidence.validate();
  if (!std::isfinite(mu_y_star)) throw Error(ErrorKind::domain, "mu_y_star must be finite");
  if (!std::isfinite(sigma_y_star) || !(sigma_y_star > 0.0)) throw Error(ErrorKind::domain, "sigma_y_star must be > 0");
}

// ---------------------------------------------------------------------------

double guided_slope_variance_unclamped(double beta1_hat, double sd_beta1, double alpha) {
  check_alpha(alpha);
  if (!std::isfinite(beta1_hat) || !std::isfinite(sd_beta1) || sd_beta1 < 0.0)
    throw Error(ErrorKind::domain, "slope summary must be finite with sd >= 0");
  if (beta1_hat == 0.0) throw Error(ErrorKind::elicitation, "no constraint: fitted slope is exactly zero");
  const double q = normal_quantile(alpha / 2.0);
  return beta1_hat * beta1_hat / (q * q) - sd_beta1 * sd_beta1;
}

double guided_slope_variance(double beta1_hat, double sd_beta1, double alpha, ConstraintSign /*sign*/) {
  // Both signs reduce to |beta1_hat|, which the squared formula already uses.
  return std::max(0.0, guided_slope_variance_unclamped(beta1_hat, sd_beta1, alpha));
}

double guided_intercept_variance_unclamped(double beta0_hat, double sd_beta0, double mu_y_star, double alpha) {
  check_alpha(alpha);
  if (!std::isfinite(beta0_hat) || !std::isfinite(mu_y_star) || !std::isfinite(sd_beta0) || sd_beta0 < 0.0)
    throw Error(ErrorKind::domain, "intercept summary must be finite with sd >= 0");
  if (mu_y_star == beta0_hat)
    throw Error(ErrorKind::elicitation, "degenerate elicitation: mu_y_star equals the fitted intercept");
  const double q = normal_quantile(1.0 - alpha / 2.0);
  const double gap = mu_y_star - beta0_hat;
  return gap * gap / (q * q) - sd_beta0 * sd_beta0;
}

double guided_intercept_variance(double beta0_hat, double sd_beta0, double mu_y_star, double alpha) {
  return std::max(0.0, guided_intercept_variance_unclamped(beta0_hat, sd_beta0, mu_y_star, alpha));
}

double solve_xi_star(const FoldedNormal& sigma_fn, double sigma_y_star, double alpha) {
  check_alpha(alpha);
  if (!std::isfinite(sigma_y_star) || !(sigma_y_star > 0.0)) throw Error(ErrorKind::domain, "sigma_y_star must be > 0");
  if (!std::isfinite(sigma_fn.location) || !std::isfinite(sigma_fn.spread2) || sigma_fn.spread2 < 0.0)
    throw Error(ErrorKind::domain, "sigma Folded-Normal must have finite location and spread2 >= 0");

  const double target = alpha / 2.0;
  auto survival = [&](double extra) { return fn_survival(sigma_y_star, {sigma_fn.location, sigma_fn.spread2 + extra}); };
  if (survival(0.0) >= target) return 0.0;

  // The survival probability increases monotonically towards 1 as the
  // spread grows whenever |location| < sigma_y_star, which holds here.
  double lo = 0.0;
  double hi = std::max(sigma_fn.spread2, sigma_y_star * sigma_y_star);
  int doublings = 0;
  while (survival(hi) < target) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 200 || !std::isfinite(hi))
      throw Error(ErrorKind::elicitation, "solve_xi_star: target survival probability is unreachable");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (survival(mid) < target ? lo : hi) = mid;
  }
  return hi;
}

double sign_flip_probability(double beta1_hat, double total_sd) {
  if (!(total_sd > 0.0)) throw Error(ErrorKind::domain, "total sd must be > 0");
  return normal_cdf(-std::abs(beta1_hat) / total_sd);
}

RealityPrior build_reality_prior(const PosteriorSummary& summary, const RealitySpec& spec) {
  RealityPrior out;
  out.summary = summary;
  switch (spec.kind) {
    case RealitySpec::Kind::collapsed:
      return out;

    case RealitySpec::Kind::manual:
      if (!spec.sigma_beta_star.is_psd())
        throw Error(ErrorKind::domain, "manual Sigma_beta_star is not positive semidefinite");
      if (!std::isfinite(spec.xi) || spec.xi < 0.0) throw Error(ErrorKind::domain, "manual xi must be >= 0");
      out.sigma_beta_star = spec.sigma_beta_star;
      out.xi = spec.xi;
      return out;

    case RealitySpec::Kind::guided: {
      const auto& j = spec.guided;
      j.validate();
      const double alpha = j.confidence.alpha;
      const double raw1 = guided_slope_variance_unclamped(summary.beta1_hat, summary.sd_beta1, alpha);
      const double raw0 =
          guided_intercept_variance_unclamped(summary.beta0_hat, summary.sd_beta0, j.mu_y_star, alpha);
      if (raw1 < 0.0) {
        out.warnings.push_back("slope discrepancy variance clamped to 0: the stated confidence is weaker than "
                               "the posterior already implies");
      }
      if (raw0 < 0.0) {
        out.warnings.push_back("intercept discrepancy variance clamped to 0: the stated confidence is weaker "
                               "than the posterior already implies");
      }
      const bool fitted_positive = summary.beta1_hat > 0.0;
      if (fitted_positive != (j.sign == ConstraintSign::positive)) {
        std::ostringstream msg;
        msg << "declared " << to_string(j.sign) << " constraint but the fitted slope is " << summary.beta1_hat;
        out.warnings.push_back(msg.str());
      }
      const double v1 = std::max(0.0, raw1);
      const double v0 = std::max(0.0, raw0);
      out.sigma_beta_star = {v0, summary.rho * std::sqrt(v0 * v1), v1};
      out.xi = solve_xi_star(summary.sigma_fn, j.sigma_y_star, alpha);
      return out;
    }
  }
  return out;
}

}  // namespace ecbayes
