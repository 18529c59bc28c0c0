#include <doctest.h>

#include <cmath>
#include <limits>

#include "ecbayes/distributions.hpp"
#include "ecbayes/error.hpp"
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

}  // namespace

TEST_CASE("fn_pdf") {
  CHECK(fn_pdf(-0.5, {1.0, 1.0}) == 0.0);
  CHECK(fn_pdf(0.0, {0.0, 1.0}) == doctest::Approx(0.7978845608).epsilon(1e-10));
  const double expected = oracle::phi(1.0) + oracle::phi(3.0);
  CHECK(expected == doctest::Approx(0.2464).epsilon(1e-4 / 0.2464));
  CHECK(fn_pdf(2.0, {1.0, 1.0}) == doctest::Approx(expected).epsilon(1e-12));

  CHECK(throws_kind(ErrorKind::domain, [] { fn_pdf(std::nan(""), {1.0, 1.0}); }));
  CHECK(throws_kind(ErrorKind::domain, [] { fn_pdf(1.0, {1.0, 0.0}); }));
  CHECK(throws_kind(ErrorKind::domain, [] { fn_pdf(1.0, {1.0, -1.0}); }));
  CHECK(throws_kind(ErrorKind::domain, [] { fn_pdf(std::numeric_limits<double>::infinity(), {1.0, 1.0}); }));
}

TEST_CASE("fn_log_pdf agrees with fn_pdf and stays finite in the tail") {
  for (double x : {0.0, 0.3, 2.0, 7.5}) {
    CHECK(std::exp(fn_log_pdf(x, {1.2, 0.7})) == doctest::Approx(fn_pdf(x, {1.2, 0.7})).epsilon(1e-12));
  }
  CHECK(std::isfinite(fn_log_pdf(200.0, {0.0, 1.0})));
}

TEST_CASE("fn_cdf") {
  CHECK(fn_cdf(0.0, {1.0, 1.0}) == 0.0);
  CHECK(fn_cdf(-3.0, {1.0, 1.0}) == 0.0);
  CHECK(fn_cdf(std::numeric_limits<double>::infinity(), {1.0, 1.0}) == 1.0);
  CHECK(fn_cdf(1e6, {1.0, 1.0}) == doctest::Approx(1.0));
  const double half_normal = 2.0 * oracle::Phi(1.0) - 1.0;
  CHECK(half_normal == doctest::Approx(0.6827).epsilon(1e-4 / 0.6827));
  CHECK(fn_cdf(1.0, {0.0, 1.0}) == doctest::Approx(half_normal).epsilon(1e-12));
  CHECK(throws_kind(ErrorKind::domain, [] { fn_cdf(1.0, {0.0, 0.0}); }));
}

TEST_CASE("fn_cdf is monotone and the survival complements it") {
  const FoldedNormal d{0.4, 0.3};
  double prev = 0.0;
  for (double x = 0.0; x < 6.0; x += 0.05) {
    const double c = fn_cdf(x, d);
    CHECK(c >= prev);
    CHECK(c + fn_survival(x, d) == doctest::Approx(1.0).epsilon(1e-14));
    prev = c;
  }
  // Point-mass survival for spread2 == 0.
  CHECK(fn_survival(1.0, {0.59, 0.0}) == 0.0);
  CHECK(fn_survival(0.5, {0.59, 0.0}) == 1.0);
}

TEST_CASE("fn_quantile inverts fn_cdf") {
  for (FoldedNormal d : {FoldedNormal{0.0, 1.0}, FoldedNormal{2.0, 0.25}, FoldedNormal{0.59, 0.0144}}) {
    for (double p : {0.01, 0.25, 0.5, 0.9, 0.999}) {
      CHECK(fn_cdf(fn_quantile(p, d), d) == doctest::Approx(p).epsilon(1e-10));
    }
  }
}

TEST_CASE("fn_sample") {
  RandomStream rng(7);
  const auto hn = fn_sample({0.0, 1.0}, 100000, rng);
  CHECK(std::all_of(hn.begin(), hn.end(), [](double v) { return v >= 0.0; }));
  CHECK(oracle::moments(hn).mean == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(0.01 / 0.7979));

  const auto near_normal = fn_sample({10.0, 0.01}, 100000, rng);
  CHECK(std::abs(oracle::moments(near_normal).mean - 10.0) < 0.01);

  // spread2 == 0 is a point mass.
  const auto point = fn_sample({-3.0, 0.0}, 10, rng);
  CHECK(std::all_of(point.begin(), point.end(), [](double v) { return v == 3.0; }));

  // Empirical cdf converges to fn_cdf.
  const FoldedNormal d{0.5, 0.8};
  const auto draws = fn_sample(d, 50000, rng);
  CHECK(oracle::ks_distance(draws, [&](double x) { return oracle::fn_cdf(x, 0.5, 0.8); }) < 0.01);
}

TEST_CASE("FoldedNormal mean and variance match simulation") {
  RandomStream rng(3);
  const FoldedNormal d{0.7, 0.5};
  const auto draws = fn_sample(d, 200000, rng);
  const auto m = oracle::moments(draws);
  CHECK(d.mean() == doctest::Approx(m.mean).epsilon(0.01));
  CHECK(std::sqrt(d.variance()) == doctest::Approx(m.sd).epsilon(0.01));
}

TEST_CASE("fn_fit_mle recovers generating parameters") {
  RandomStream rng(11);
  const auto draws = fn_sample({0.59, 0.0144}, 100000, rng);
  const auto fit = fn_fit_mle(draws);
  CHECK(std::abs(fit.location - 0.59) < 0.02);
  CHECK(std::abs(fit.spread2 - 0.0144) < 0.004);

  // The optimum is at least as likely as the moment-matched start.
  const auto start = fn_moment_match(draws);
  CHECK(fn_log_likelihood(draws, fit) >= fn_log_likelihood(draws, start));
}

TEST_CASE("fn_fit_mle on Half-Normal draws matches the Half-Normal density") {
  RandomStream rng(12);
  const auto draws = fn_sample({0.0, 1.0}, 100000, rng);
  const auto fit = fn_fit_mle(draws);
  double sup = 0.0;
  for (double x = 0.0; x < 5.0; x += 0.01) {
    sup = std::max(sup, std::abs(fn_pdf(x, fit) - oracle::fn_density(x, 0.0, 1.0)));
  }
  CHECK(sup < 0.02);
}

TEST_CASE("fn_fit_mle rejects bad input") {
  CHECK(throws_kind(ErrorKind::insufficient_data, [] { fn_fit_mle(std::vector<double>(29, 1.0)); }));
  CHECK(throws_kind(ErrorKind::domain, [] { fn_fit_mle(std::vector<double>(100, 0.7)); }));
  std::vector<double> with_negative(50, 1.0);
  with_negative[3] = -0.1;
  with_negative[4] = 2.0;
  CHECK(throws_kind(ErrorKind::domain, [&] { fn_fit_mle(with_negative); }));
}

TEST_CASE("normal_quantile") {
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(normal_quantile(0.005) == doctest::Approx(oracle::Phi_inv_bisect(0.005)).epsilon(1e-10));
  CHECK(std::abs(normal_quantile(0.005) - (-2.5758)) < 1e-4);
  CHECK(std::abs(normal_quantile(0.975) - 1.9600) < 1e-4);
  for (double p : {1e-10, 1e-6, 0.001, 0.0123, 0.2, 0.5, 0.77, 0.99, 0.999999}) {
    CHECK(std::abs(oracle::Phi(normal_quantile(p)) - p) < 1e-12);
  }
  CHECK(throws_kind(ErrorKind::domain, [] { normal_quantile(0.0); }));
  CHECK(throws_kind(ErrorKind::domain, [] { normal_quantile(1.0); }));
  CHECK(throws_kind(ErrorKind::domain, [] { normal_quantile(-0.2); }));
}

TEST_CASE("mvn2_sample") {
  RandomStream rng(5);
  const auto degenerate = mvn2_sample({{1.5, -2.0}, Cov2{}}, 100, rng);
  for (const auto& v : degenerate) {
    CHECK(v[0] == 1.5);
    CHECK(v[1] == -2.0);
  }

  auto corr_of = [](const std::vector<std::array<double, 2>>& draws) {
    std::vector<double> a, b;
    for (const auto& v : draws) a.push_back(v[0]), b.push_back(v[1]);
    return oracle::correlation(a, b);
  };
  CHECK(std::abs(corr_of(mvn2_sample({{0, 0}, Cov2::diagonal(1, 1)}, 100000, rng))) < 0.02);

  const auto draws = mvn2_sample({{1.23, 12.06}, Cov2::from_sd_corr(0.46, 2.62, -0.95)}, 100000, rng);
  CHECK(std::abs(corr_of(draws) + 0.95) < 0.01);

  CHECK(throws_kind(ErrorKind::domain, [&] { mvn2_sample({{0, 0}, Cov2{1.0, 2.0, 1.0}}, 10, rng); }));
  CHECK(throws_kind(ErrorKind::domain, [&] { mvn2_sample({{0, 0}, Cov2{-1.0, 0.0, 1.0}}, 10, rng); }));
}

TEST_CASE("fn_pdf integrates to one and fn_cdf is its integral") {
  for (double loc : {0.0, 0.3, 1.0, 5.0}) {
    for (double spread2 : {0.01, 0.25, 1.0, 4.0}) {
      const FoldedNormal d{loc, spread2};
      const double upper = 20.0 * (loc + std::sqrt(spread2));
      const double total = oracle::simpson([&](double x) { return fn_pdf(x, d); }, 0.0, upper, 40000);
      CHECK(std::abs(total - 1.0) < 1e-6);
      for (double frac : {0.05, 0.2, 0.5}) {
        const double x = frac * upper;
        const double integral = oracle::simpson([&](double t) { return fn_pdf(t, d); }, 0.0, x, 20000);
        CHECK(std::abs(integral - fn_cdf(x, d)) < 1e-6);
      }
    }
  }
}

TEST_CASE("Folded Normal tends to the Normal when location is large") {
  for (double spread2 : {0.01, 1.0, 9.0}) {
    const double s = std::sqrt(spread2);
    const FoldedNormal d{10.0 * s, spread2};
    double sup = 0.0;
    for (double x = 0.0; x < 20.0 * s; x += s / 100.0) {
      sup = std::max(sup, std::abs(fn_pdf(x, d) - oracle::phi((x - d.location) / s) / s));
    }
    CHECK(sup < 1e-6);
  }
}

TEST_CASE("random streams are reproducible and distinct") {
  RandomStream a(42, 3), b(42, 3), c(42, 4);
  const auto xa = fn_sample({0.0, 1.0}, 100, a);
  const auto xb = fn_sample({0.0, 1.0}, 100, b);
  const auto xc = fn_sample({0.0, 1.0}, 100, c);
  CHECK(xa == xb);
  CHECK(xa != xc);
  CHECK(a.child(1).stream_id() == b.child(1).stream_id());
  CHECK(a.child(1).stream_id() != a.child(2).stream_id());
}
