#include <doctest.h>

#include <cmath>

#include "ecbayes/error.hpp"
#include "ecbayes/reality.hpp"
#include "oracles.hpp"

using namespace ecbayes;

namespace {

bool throws_kind(ErrorKind kind, const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind() == kind;
  }
  return false;
}

PosteriorSummary table1_summary() {
  PosteriorSummary s;
  s.beta0_hat = 1.23;
  s.sd_beta0 = 0.46;
  s.beta1_hat = 12.06;
  s.sd_beta1 = 2.62;
  s.rho = -0.95;
  s.sigma_fn = {0.59, 0.12 * 0.12};
  s.sigma_mean = 0.59;
  s.sigma_sd = 0.12;
  s.draws = 20000;
  return s;
}

constexpr double kAlphaGrid[] = {0.01, 0.10, 0.34, 0.499};

}  // namespace

TEST_CASE("confidence labels") {
  using L = ConfidenceLevel::Label;
  CHECK(ConfidenceLevel::from_label(L::virtually_certain).alpha == 0.01);
  CHECK(ConfidenceLevel::from_label(L::very_likely).alpha == 0.10);
  CHECK(ConfidenceLevel::from_label(L::likely).alpha == 0.34);
  CHECK(ConfidenceLevel::from_label(L::coin_flip).alpha == 0.499);
  CHECK(ConfidenceLevel::parse("very_likely").label == L::very_likely);
  CHECK(ConfidenceLevel::parse("coin_flip").name() == "coin_flip");
  CHECK(throws_kind(ErrorKind::config, [] { ConfidenceLevel::parse("perhaps"); }));
  CHECK_THROWS_AS(ConfidenceLevel::custom(1.0), Error);
  CHECK_THROWS_AS(ConfidenceLevel::custom(0.0), Error);
  CHECK(ConfidenceLevel::custom(0.2).alpha == 0.2);
  CHECK(parse_sign("negative") == ConstraintSign::negative);
  CHECK_THROWS_AS(parse_sign("up"), Error);
}

TEST_CASE("guided_slope_variance") {
  const double q = oracle::Phi_inv_bisect(0.005);
  CHECK(std::abs(q + 2.5758) < 1e-4);
  const double expected = 12.06 * 12.06 / (q * q) - 2.62 * 2.62;
  CHECK(expected == doctest::Approx(15.0566).epsilon(1e-4));

  const double v = guided_slope_variance(12.06, 2.62, 0.01, ConstraintSign::positive);
  CHECK(std::abs(v - expected) < 1e-8);
  CHECK(std::abs(std::sqrt(v) - 3.880) < 0.005);

  // A negative constraint is the mirror image.
  CHECK(guided_slope_variance(-12.06, 2.62, 0.01, ConstraintSign::negative) == doctest::Approx(v).epsilon(1e-14));

  // Clamp boundary: the posterior alone already gives the requested sign-flip probability.
  const double boundary_alpha = 2.0 * oracle::Phi(-12.06 / 2.62);
  CHECK(std::abs(guided_slope_variance(12.06, 2.62, boundary_alpha, ConstraintSign::positive)) < 1e-6);
  CHECK(guided_slope_variance(12.06, 2.62, 0.9, ConstraintSign::positive) >= 0.0);
  CHECK(guided_slope_variance_unclamped(1.0, 2.62, 0.01) < 0.0);
  CHECK(guided_slope_variance(1.0, 2.62, 0.01, ConstraintSign::positive) == 0.0);

  CHECK(throws_kind(ErrorKind::elicitation, [] { guided_slope_variance(0.0, 2.62, 0.01, ConstraintSign::positive); }));
  CHECK_THROWS_AS(guided_slope_variance(12.06, 2.62, 1.5, ConstraintSign::positive), Error);
}

TEST_CASE("guided_intercept_variance") {
  const double q = oracle::Phi_inv_bisect(0.995);
  const double expected = (3.0 - 1.23) * (3.0 - 1.23) / (q * q) - 0.46 * 0.46;
  const double v = guided_intercept_variance(1.23, 0.46, 3.0, 0.01);
  CHECK(std::abs(v - expected) < 1e-8);
  CHECK(std::abs(v - 0.2606) < 0.001);
  CHECK(std::abs(std::sqrt(v) - 0.5105) < 0.005);

  // With that variance the intercept exceeds mu_y_star with probability alpha / 2.
  const double total = std::sqrt(0.46 * 0.46 + v);
  CHECK(std::abs(oracle::Phi_upper((3.0 - 1.23) / total) - 0.005) < 1e-4);

  const double boundary_alpha = 2.0 * oracle::Phi(-(3.0 - 1.23) / 0.46);
  CHECK(std::abs(guided_intercept_variance(1.23, 0.46, 3.0, boundary_alpha)) < 1e-6);
  CHECK(throws_kind(ErrorKind::elicitation, [] { guided_intercept_variance(1.23, 0.46, 1.23, 0.01); }));
}

TEST_CASE("sign_flip_probability") {
  const double p = sign_flip_probability(12.06, 3.71);
  CHECK(std::abs(p - oracle::Phi(-12.06 / 3.71)) < 1e-15);
  CHECK(std::abs(p - 5.76e-4) < 1e-5);
  CHECK(sign_flip_probability(-12.06, 3.71) == doctest::Approx(p).epsilon(1e-14));
}

TEST_CASE("solve_xi_star") {
  CHECK(solve_xi_star({10.0, 1.0}, 1.0, 0.01) == 0.0);
  CHECK(solve_xi_star({10.0, 1.0}, 1.0, 0.499) == 0.0);

  const double xi = solve_xi_star({0.59, 0.0}, 1.5, 0.34);
  CHECK(std::abs(xi - 0.82) < 0.02);
  CHECK(std::abs(oracle::fn_cdf(1.5, 0.59, xi) - (1.0 - 0.17)) < 1e-6);

  // Independent root of P(|N(0.59, v)| > 1.5) = 0.17 by plain bisection.
  double lo = 1e-6, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double sd = std::sqrt(mid);
    const double tail = 1.0 - oracle::Phi((1.5 - 0.59) / sd) + oracle::Phi((-1.5 - 0.59) / sd);
    (tail < 0.17 ? lo : hi) = mid;
  }
  CHECK(std::abs(lo - 0.830940290707731) < 1e-9);
  CHECK(std::abs(xi - lo) < 1e-4);

  // Defining equation holds whenever the solution is positive.
  for (double alpha : kAlphaGrid) {
    for (double sigma_y : {0.8, 1.5, 3.0}) {
      const FoldedNormal fn{0.59, 0.0144};
      const double x = solve_xi_star(fn, sigma_y, alpha);
      CHECK(x >= 0.0);
      if (x > 0.0) {
        CHECK(std::abs(fn_survival(sigma_y, {0.59, 0.0144 + x}) - alpha / 2.0) < 1e-6);
      }
    }
  }
  CHECK_THROWS_AS(solve_xi_star({0.59, 0.0}, 0.0, 0.34), Error);
}

TEST_CASE("build_reality_prior") {
  const auto summary = table1_summary();

  const auto collapsed = build_reality_prior(summary, RealitySpec::collapsed());
  CHECK(collapsed.sigma_beta_star.is_zero());
  CHECK(collapsed.xi == 0.0);

  GuidedJudgements j;
  j.confidence = ConfidenceLevel::from_label(ConfidenceLevel::Label::virtually_certain);
  j.mu_y_star = 3.0;
  j.sigma_y_star = 1.5;
  const auto guided = build_reality_prior(summary, RealitySpec::guided_by(j));
  const double sd0 = std::sqrt(guided.sigma_beta_star.xx);
  const double sd1 = std::sqrt(guided.sigma_beta_star.yy);
  CHECK(std::abs(sd0 - 0.5105) < 0.001);
  CHECK(std::abs(sd1 - 3.880) < 0.001);
  CHECK(guided.sigma_beta_star.xy / (sd0 * sd1) == doctest::Approx(-0.95).epsilon(1e-12));
  CHECK(guided.sigma_beta_star.is_psd());
  CHECK(guided.xi >= 0.0);
  CHECK(guided.warnings.empty());

  // Manual pass-through, the "doubling" setup.
  const auto cov = summary.beta().cov;
  const auto manual = build_reality_prior(summary, RealitySpec::manual(cov, 0.0144));
  CHECK(manual.sigma_beta_star.xx == cov.xx);
  CHECK(manual.sigma_beta_star.xy == cov.xy);
  CHECK(manual.xi == 0.0144);
  CHECK_THROWS_AS(build_reality_prior(summary, RealitySpec::manual(Cov2{1.0, 5.0, 1.0}, 0.0)), Error);
  CHECK_THROWS_AS(build_reality_prior(summary, RealitySpec::manual(Cov2::diagonal(1.0, 1.0), -1.0)), Error);

  // Weak confidence for a weak fit is clamped with a warning.
  auto weak = summary;
  weak.beta1_hat = 1.0;
  const auto clamped = build_reality_prior(weak, RealitySpec::guided_by(j));
  CHECK(clamped.sigma_beta_star.yy == 0.0);
  CHECK_FALSE(clamped.warnings.empty());

  // A declared sign that contradicts the fit is reported.
  auto flipped = j;
  flipped.sign = ConstraintSign::negative;
  CHECK_FALSE(build_reality_prior(summary, RealitySpec::guided_by(flipped)).warnings.empty());
}

TEST_CASE("discrepancy grows as confidence weakens") {
  const auto summary = table1_summary();
  double prev_v1 = -1.0, prev_v0 = -1.0, prev_xi = -1.0;
  for (double alpha : kAlphaGrid) {
    const double v1 = guided_slope_variance(summary.beta1_hat, summary.sd_beta1, alpha, ConstraintSign::positive);
    const double v0 = guided_intercept_variance(summary.beta0_hat, summary.sd_beta0, 3.0, alpha);
    const double xi = solve_xi_star(summary.sigma_fn, 1.5, alpha);
    CHECK(v1 >= prev_v1);
    CHECK(v0 >= prev_v0);
    CHECK(xi >= prev_xi);
    prev_v1 = v1;
    prev_v0 = v0;
    prev_xi = xi;
  }
}

TEST_CASE("guided slope variance calibrates the sign-flip probability") {
  const auto summary = table1_summary();
  RandomStream rng(17);
  const std::size_t m = 200000;
  for (double alpha : {0.10, 0.34, 0.499}) {
    const double v = guided_slope_variance(summary.beta1_hat, summary.sd_beta1, alpha, ConstraintSign::positive);
    const double sd = std::sqrt(summary.sd_beta1 * summary.sd_beta1 + v);
    std::size_t flips = 0;
    for (std::size_t i = 0; i < m; ++i) flips += (summary.beta1_hat + sd * rng.normal()) < 0.0;
    const double p = static_cast<double>(flips) / static_cast<double>(m);
    const double se = std::sqrt(alpha / 2.0 * (1.0 - alpha / 2.0) / static_cast<double>(m));
    CHECK(std::abs(p - alpha / 2.0) < 3.0 * se);
  }
}

TEST_CASE("Normal and Folded-Normal compositions marginalize") {
  RandomStream rng(23);
  const std::size_t m = 100000;

  // beta ~ N(B, v), beta* | beta ~ N(beta, v*) gives N(B, v + v*).
  std::vector<double> beta_star(m);
  for (auto& b : beta_star) {
    const double beta = 12.06 + 2.62 * rng.normal();
    b = beta + 3.88 * rng.normal();
  }
  const double total = std::hypot(2.62, 3.88);
  CHECK(oracle::ks_distance(beta_star, [&](double v) { return oracle::Phi((v - 12.06) / total); }) < 0.01);

  // sigma ~ FN(s, xi), sigma* | sigma ~ FN(sigma, xi*) gives FN(s, xi + xi*).
  std::vector<double> sigma_star(m);
  for (auto& s : sigma_star) {
    const double sigma = fn_sample_one(0.59, 0.0144, rng);
    s = fn_sample_one(sigma, 0.83, rng);
  }
  CHECK(oracle::ks_distance(sigma_star, [](double v) { return oracle::fn_cdf(v, 0.59, 0.0144 + 0.83); }) < 0.01);
}
