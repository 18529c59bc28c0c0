#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ecbayes/mining.hpp"
#include "oracles.hpp"

using namespace ecbayes;

namespace {

double brute_force_max(const OutputMatrix& m, MiningMode mode) {
  double best = 0.0;
  const std::size_t first_limit = mode == MiningMode::one_vs_rest ? 1 : m.outputs;
  for (std::size_t i = 0; i < first_limit; ++i) {
    for (std::size_t j = i + 1; j < m.outputs; ++j) {
      best = std::max(best, std::abs(oracle::correlation(m.column(i), m.column(j))));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("max_abs_correlation agrees with a brute-force oracle") {
  const auto m = random_output_matrix(20, 60, 4);
  for (MiningMode mode : {MiningMode::one_vs_rest, MiningMode::all_pairs}) {
    const auto r = max_abs_correlation(m, mode, 3);
    CHECK(r.max_abs_corr == doctest::Approx(brute_force_max(m, mode)).epsilon(1e-12));
    CHECK(std::abs(oracle::correlation(m.column(r.argmax.first), m.column(r.argmax.second))) ==
          doctest::Approx(r.max_abs_corr).epsilon(1e-12));
  }
  CHECK(max_abs_correlation(m, MiningMode::one_vs_rest).pairs == 59);
  CHECK(max_abs_correlation(m, MiningMode::all_pairs).pairs == 60 * 59 / 2);
}

TEST_CASE("histogram counts every pair") {
  const auto r = max_abs_correlation(random_output_matrix(15, 80, 2), MiningMode::all_pairs);
  REQUIRE(r.histogram.counts.size() == kHistogramBins);
  CHECK(std::accumulate(r.histogram.counts.begin(), r.histogram.counts.end(), std::uint64_t{0}) == r.pairs);
}

TEST_CASE("duplicated column gives exactly one") {
  for (MiningMode mode : {MiningMode::one_vs_rest, MiningMode::all_pairs}) {
    MiningConfig cfg;
    cfg.members = 43;
    cfg.outputs = 500;
    cfg.mode = mode;
    cfg.duplicate_column = true;
    const auto r = correlation_mining_demo(cfg);
    CHECK(r.max_abs_corr == 1.0);
    CHECK(r.argmax == std::pair<std::size_t, std::size_t>{0, 499});
  }
}

TEST_CASE("large samples give small null correlations") {
  int below = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    MiningConfig cfg;
    cfg.members = 1000;
    cfg.outputs = 2;
    cfg.seed = seed;
    below += correlation_mining_demo(cfg).max_abs_corr < 0.15;
  }
  // sd of r is about 1/sqrt(999); 0.15 is 4.7 sd.
  CHECK(below == 100);
}

TEST_CASE("max_abs_corr is bounded and invariant to column-wise affine rescaling") {
  auto m = random_output_matrix(30, 200, 8);
  const auto before = max_abs_correlation(m, MiningMode::all_pairs);
  CHECK(before.max_abs_corr >= 0.0);
  CHECK(before.max_abs_corr <= 1.0);
  for (std::size_t j = 0; j < m.outputs; ++j) {
    const double scale = (j % 3 == 0 ? -1.0 : 1.0) * (0.5 + static_cast<double>(j) * 0.01);
    for (double& v : m.column(j)) v = scale * v + static_cast<double>(j);
  }
  const auto after = max_abs_correlation(m, MiningMode::all_pairs);
  CHECK(after.max_abs_corr == doctest::Approx(before.max_abs_corr).epsilon(1e-9));
  CHECK(after.argmax == before.argmax);
}

TEST_CASE("max over more outputs is at least the max over a nested subset") {
  const auto full = random_output_matrix(43, 400, 5);
  OutputMatrix subset{43, 100, {full.values.begin(), full.values.begin() + 43 * 100}};
  for (MiningMode mode : {MiningMode::one_vs_rest, MiningMode::all_pairs}) {
    CHECK(max_abs_correlation(full, mode).max_abs_corr >= max_abs_correlation(subset, mode).max_abs_corr);
  }
}

TEST_CASE("results do not depend on the worker count") {
  const auto m = random_output_matrix(43, 700, 6);
  const auto a = max_abs_correlation(m, MiningMode::all_pairs, 1);
  const auto b = max_abs_correlation(m, MiningMode::all_pairs, 5);
  CHECK(a.max_abs_corr == b.max_abs_corr);
  CHECK(a.argmax == b.argmax);
  CHECK(a.histogram.counts == b.histogram.counts);
}

TEST_CASE("configuration validation") {
  MiningConfig cfg;
  cfg.members = 2;
  CHECK_THROWS(cfg.validate());
  cfg.members = 3;
  cfg.outputs = 1;
  CHECK_THROWS(cfg.validate());
}
