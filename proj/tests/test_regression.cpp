#include <doctest.h>

#include <cmath>

#include "ecbayes/diagnostics.hpp"
#include "ecbayes/error.hpp"
#include "ecbayes/regression.hpp"
#include "oracles.hpp"

using namespace ecbayes;

namespace {

struct Columns {
  std::vector<double> b0, b1, sigma;
};

Columns columns(const RegressionPosterior& p) {
  Columns c;
  for (const auto& d : p.draws) {
    c.b0.push_back(d.beta0);
    c.b1.push_back(d.beta1);
    c.sigma.push_back(d.sigma);
  }
  return c;
}

bool throws_kind(ErrorKind kind, const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind() == kind;
  }
  return false;
}

Ensemble synthetic(std::size_t n, std::uint64_t seed, double sigma = 0.5) {
  RandomStream rng(seed, 99);
  return synthetic_ensemble({n, 1.0, 2.0, sigma, 0.5, 1.0, false}, rng);
}

}  // namespace

TEST_CASE("fit_reference recovers a known line") {
  RandomStream data(21);
  const auto e = synthetic_ensemble({100, 1.0, 2.0, 0.1, 0.0, 1.0, false}, data);
  RandomStream rng(1);
  const auto s = summarize(fit_reference(e, 20000, rng));
  CHECK(std::abs(s.beta0_hat - 1.0) < 0.05);
  CHECK(std::abs(s.beta1_hat - 2.0) < 0.05);
}

TEST_CASE("fit_reference on the Cox-like ensemble reproduces the published summary") {
  RandomStream data(1);
  const auto e = synthetic_ensemble(cox_like_spec(), data);
  RandomStream rng(2);
  const auto s = summarize(fit_reference(e, 100000, rng));
  CHECK(std::abs(s.beta0_hat - 1.23) < 0.02);
  CHECK(std::abs(s.sd_beta0 - 0.46) < 0.02);
  CHECK(std::abs(s.beta1_hat - 12.06) < 0.05);
  CHECK(std::abs(s.sd_beta1 - 2.62) < 0.02);
  CHECK(std::abs(s.sigma_mean - 0.59) < 0.01);
  CHECK(std::abs(s.sigma_sd - 0.12) < 0.01);
  CHECK(std::abs(s.rho + 0.95) < 0.01);
}

TEST_CASE("fit_reference rejects improper posteriors") {
  const Ensemble line({{"a", 0.0, 1.0}, {"b", 1.0, 3.0}, {"c", 2.0, 5.0}, {"d", 3.0, 7.0}, {"e", 4.0, 9.0}});
  RandomStream rng(1);
  CHECK(throws_kind(ErrorKind::improper_posterior, [&] { fit_reference(line, 1000, rng); }));
  const Ensemble three({{"a", 0.0, 1.0}, {"b", 1.0, 3.5}, {"c", 2.0, 5.0}});
  CHECK(throws_kind(ErrorKind::improper_posterior, [&] { fit_reference(three, 1000, rng); }));
}

TEST_CASE("fit_reference marginals match the conjugate closed form") {
  for (std::size_t n : {10u, 40u, 200u}) {
    const auto e = synthetic(n, n);
    const auto& st = e.stats();
    const double dof = static_cast<double>(n) - 2.0;
    const double s2 = st.rss() / dof;
    const double scale1 = std::sqrt(s2 / st.sxx);
    const double scale0 = std::sqrt(s2 * (1.0 / static_cast<double>(n) + st.mean_x * st.mean_x / st.sxx));

    RandomStream rng(n + 1);
    const auto post = fit_reference(e, 20000, rng);
    CHECK(post.draws.size() == 20000);
    const auto c = columns(post);
    CHECK(std::all_of(c.sigma.begin(), c.sigma.end(), [](double v) { return v > 0.0; }));

    CHECK(oracle::ks_distance(c.b1, [&](double v) { return oracle::t_cdf(v, st.slope(), scale1, dof); }) < 0.02);
    CHECK(oracle::ks_distance(c.b0, [&](double v) { return oracle::t_cdf(v, st.intercept(), scale0, dof); }) < 0.02);
    std::vector<double> var(c.sigma.size());
    std::transform(c.sigma.begin(), c.sigma.end(), var.begin(), [](double v) { return v * v; });
    CHECK(oracle::ks_distance(var, [&](double v) { return oracle::scaled_inv_chi2_cdf(v, dof, s2); }) < 0.02);

    // Posterior means equal OLS within 3 MC standard errors.
    const auto m0 = oracle::moments(c.b0);
    const auto m1 = oracle::moments(c.b1);
    CHECK(std::abs(m0.mean - st.intercept()) < 3.0 * m0.sd / std::sqrt(20000.0));
    CHECK(std::abs(m1.mean - st.slope()) < 3.0 * m1.sd / std::sqrt(20000.0));
  }
}

TEST_CASE("fit_reference is exactly invariant to row order") {
  const auto e = synthetic(30, 5);
  auto rows = e.rows();
  std::rotate(rows.begin(), rows.begin() + 11, rows.end());
  const Ensemble permuted(rows);
  RandomStream a(8), b(8);
  CHECK(fit_reference(e, 5000, a).draws == fit_reference(permuted, 5000, b).draws);
}

TEST_CASE("fit_reference output does not depend on the worker count") {
  const auto e = synthetic(30, 6);
  RandomStream a(3), b(3);
  CHECK(fit_reference(e, 10000, a, 1).draws == fit_reference(e, 10000, b, 7).draws);
}

TEST_CASE("fit_subjective with a near-flat prior matches the flat-prior closed form") {
  const std::size_t n = 60;
  const auto e = synthetic(n, 31);
  const auto& st = e.stats();
  const auto prior = ModelPrior::subjective({0.0, 0.0}, Cov2::diagonal(1e10, 1e10), 1e6);
  SamplerOptions opts;
  opts.draws = 20000;
  opts.chains = 4;
  RandomStream rng(4);
  const auto post = fit_subjective(e, prior, opts, rng);
  REQUIRE(post.convergence.has_value());
  CHECK(post.convergence->converged);
  CHECK(post.draws.size() == 20000);
  CHECK(post.chains == 4);

  // A Half-Normal prior with huge scale is flat in sigma, i.e. pi(sigma^2)
  // proportional to 1/sigma, which loses one degree of freedom relative to
  // the reference prior.
  const double dof = static_cast<double>(n) - 3.0;
  const double s2 = st.rss() / dof;
  const auto c = columns(post);
  CHECK(oracle::ks_distance(c.b1, [&](double v) {
          return oracle::t_cdf(v, st.slope(), std::sqrt(s2 / st.sxx), dof);
        }) < 0.03);
  std::vector<double> var(c.sigma.size());
  std::transform(c.sigma.begin(), c.sigma.end(), var.begin(), [](double v) { return v * v; });
  CHECK(oracle::ks_distance(var, [&](double v) { return oracle::scaled_inv_chi2_cdf(v, dof, s2); }) < 0.03);

  // Beta means agree with the reference path within 3 MC standard errors.
  RandomStream ref_rng(5);
  const auto ref = summarize(fit_reference(e, 20000, ref_rng));
  const auto sub = summarize(post);
  const auto& ess = post.convergence->ess;
  const double se0 = std::hypot(ref.sd_beta0 / std::sqrt(20000.0), sub.sd_beta0 / std::sqrt(ess[0]));
  const double se1 = std::hypot(ref.sd_beta1 / std::sqrt(20000.0), sub.sd_beta1 / std::sqrt(ess[1]));
  CHECK(std::abs(ref.beta0_hat - sub.beta0_hat) < 3.0 * se0);
  CHECK(std::abs(ref.beta1_hat - sub.beta1_hat) < 3.0 * se1);
}

TEST_CASE("fit_subjective with a weakly informative prior on the Cox-like ensemble is close to the reference") {
  RandomStream data(1);
  const auto e = synthetic_ensemble(cox_like_spec(), data);
  const auto prior = ModelPrior::subjective({0.0, 0.0}, Cov2::diagonal(25.0, 1156.0), 2.5);
  SamplerOptions opts;
  RandomStream rng(6), ref_rng(7);
  const auto post = fit_subjective(e, prior, opts, rng);
  const auto sub = summarize(post);
  const auto ref = summarize(fit_reference(e, 20000, ref_rng));
  const auto& ess = post.convergence->ess;
  const double se0 = std::hypot(ref.sd_beta0 / std::sqrt(20000.0), sub.sd_beta0 / std::sqrt(ess[0]));
  const double se1 = std::hypot(ref.sd_beta1 / std::sqrt(20000.0), sub.sd_beta1 / std::sqrt(ess[1]));
  CHECK(std::abs(sub.beta0_hat - ref.beta0_hat) < 2.0 * se0);
  CHECK(std::abs(sub.beta1_hat - ref.beta1_hat) < 2.0 * se1);
  CHECK(std::abs(sub.sd_beta1 - ref.sd_beta1) < 0.1);
  CHECK(std::abs(sub.rho - ref.rho) < 0.01);
}

TEST_CASE("fit_subjective with a very tight prior is prior-dominated") {
  const auto e = synthetic(5, 77);
  const auto prior = ModelPrior::subjective({0.0, 0.0}, Cov2::diagonal(1e-8, 1e-8), 1.0);
  SamplerOptions opts;
  opts.draws = 4000;
  RandomStream rng(8);
  const auto s = summarize(fit_subjective(e, prior, opts, rng));
  CHECK(std::abs(s.beta0_hat) < 1e-3);
  CHECK(std::abs(s.beta1_hat) < 1e-3);
}

TEST_CASE("fit_subjective is reproducible and independent of the worker count") {
  const auto e = synthetic(12, 3);
  const auto prior = ModelPrior::subjective({0.0, 1.0}, Cov2::diagonal(4.0, 4.0), 2.0);
  SamplerOptions opts;
  opts.draws = 2000;
  opts.workers = 1;
  RandomStream a(10), b(10);
  const auto first = fit_subjective(e, prior, opts, a);
  opts.workers = 4;
  const auto second = fit_subjective(e, prior, opts, b);
  CHECK(first.draws == second.draws);
}

TEST_CASE("fit_subjective validates the prior") {
  const auto e = synthetic(12, 3);
  SamplerOptions opts;
  RandomStream rng(1);
  CHECK_THROWS_AS(fit_subjective(e, ModelPrior::subjective({0, 0}, Cov2{1.0, 2.0, 1.0}, 1.0), opts, rng), Error);
  CHECK_THROWS_AS(fit_subjective(e, ModelPrior::subjective({0, 0}, Cov2::diagonal(1, 1), 0.0), opts, rng), Error);
}

TEST_CASE("strict mode raises a convergence error when diagnostics cannot be met") {
  const auto e = synthetic(12, 3);
  SamplerOptions opts;
  opts.draws = 1000;
  opts.chains = 2;
  opts.ess_min = 1e9;
  opts.max_extensions = 1;
  RandomStream rng(1);
  const auto prior = ModelPrior::subjective({0, 0}, Cov2::diagonal(10, 10), 2.0);
  opts.strict = true;
  CHECK(throws_kind(ErrorKind::convergence, [&] { fit_subjective(e, prior, opts, rng); }));
  opts.strict = false;
  const auto post = fit_subjective(e, prior, opts, rng);
  CHECK_FALSE(post.convergence->converged);
  CHECK_FALSE(post.warnings.empty());
}

TEST_CASE("summarize") {
  RegressionPosterior degenerate;
  degenerate.draws.assign(2000, Draw{1.0, 2.0, 0.5});
  CHECK_THROWS_AS(summarize(degenerate), Error);

  RegressionPosterior few;
  RandomStream rng(2);
  for (int i = 0; i < 999; ++i) few.draws.push_back({rng.normal(), rng.normal(), 1.0 + rng.uniform()});
  CHECK(throws_kind(ErrorKind::insufficient_data, [&] { summarize(few); }));

  // Draws from a known Gaussian2D are recovered within 3 standard errors.
  const Gaussian2D truth{{1.23, 12.06}, Cov2::from_sd_corr(0.46, 2.62, -0.95)};
  const std::size_t m = 50000;
  const auto beta = mvn2_sample(truth, m, rng);
  RegressionPosterior known;
  for (std::size_t i = 0; i < m; ++i) {
    known.draws.push_back({beta[i][0], beta[i][1], std::abs(0.59 + 0.12 * rng.normal())});
  }
  const auto s = summarize(known);
  const double dm = static_cast<double>(m);
  CHECK(std::abs(s.beta0_hat - 1.23) < 3.0 * 0.46 / std::sqrt(dm));
  CHECK(std::abs(s.beta1_hat - 12.06) < 3.0 * 2.62 / std::sqrt(dm));
  CHECK(std::abs(s.sd_beta0 - 0.46) < 3.0 * 0.46 / std::sqrt(2.0 * dm));
  CHECK(std::abs(s.sd_beta1 - 2.62) < 3.0 * 2.62 / std::sqrt(2.0 * dm));
  CHECK(std::abs(s.rho + 0.95) < 3.0 * (1.0 - 0.95 * 0.95) / std::sqrt(dm));
  CHECK(std::abs(s.sigma_fn.location - 0.59) < 0.01);
}

TEST_CASE("laplace_check") {
  RandomStream rng(3);
  RegressionPosterior gauss, expo;
  for (int i = 0; i < 20000; ++i) {
    gauss.draws.push_back({rng.normal(), rng.normal(), 1.0 + 0.1 * std::abs(rng.normal())});
    expo.draws.push_back({rng.exponential(), rng.exponential(), 1.0 + rng.exponential()});
  }
  CHECK(laplace_check(gauss).approximately_normal);
  const auto r = laplace_check(expo);
  CHECK_FALSE(r.approximately_normal);
  CHECK(std::abs(r.skewness[0] - 2.0) < 0.3);

  // Reference slope draws at n = 39 are t(37): excess kurtosis 6/33.
  RandomStream data(39);
  const auto e = synthetic_ensemble({39, 1.23, 12.06, 0.59, 0.17, 0.06, false}, data);
  RandomStream fit_rng(40);
  const auto report = laplace_check(fit_reference(e, 20000, fit_rng));
  CHECK(report.approximately_normal);
  CHECK(std::abs(report.excess_kurtosis[1] - 6.0 / 33.0) < 0.25);
}

TEST_CASE("split_rhat and effective_sample_size on independent chains") {
  RandomStream rng(12);
  std::vector<std::vector<double>> chains(4, std::vector<double>(5000));
  for (auto& c : chains)
    for (auto& v : c) v = rng.normal();
  CHECK(split_rhat(chains) < 1.01);
  const double ess = effective_sample_size(chains);
  CHECK(ess > 15000.0);
  CHECK(ess < 25000.0);

  // A shifted chain inflates R-hat.
  for (auto& v : chains[0]) v += 1.0;
  CHECK(split_rhat(chains) > 1.05);

  // An AR(1) chain with phi = 0.9 has ESS near n (1 - phi) / (1 + phi).
  std::vector<std::vector<double>> ar(4, std::vector<double>(20000));
  for (auto& c : ar) {
    double prev = 0.0;
    for (auto& v : c) prev = v = 0.9 * prev + std::sqrt(1.0 - 0.81) * rng.normal();
  }
  const double expected = 80000.0 * 0.1 / 1.9;
  CHECK(std::abs(effective_sample_size(ar) / expected - 1.0) < 0.2);
}
