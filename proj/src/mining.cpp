#include "ecbayes/mining.hpp"

#include <algorithm>
#include <cmath>

#include "ecbayes/error.hpp"
#include "ecbayes/parallel.hpp"
#include "ecbayes/random.hpp"

namespace ecbayes {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

struct Partial {
  double best = -1.0;
  std::pair<std::size_t, std::size_t> argmax{0, 0};
  std::vector<std::uint64_t> counts = std::vector<std::uint64_t>(kHistogramBins, 0);
  std::uint64_t pairs = 0;

  void add(double r, std::size_t i, std::size_t j) {
    const double a = std::abs(r);
    if (a > best) {
      best = a;
      argmax = {i, j};
    }
    auto bin = static_cast<std::size_t>((r + 1.0) * 0.5 * static_cast<double>(kHistogramBins));
    counts[std::min(bin, kHistogramBins - 1)]++;
    ++pairs;
  }
};

}  // namespace

void MiningConfig::validate() const {
  if (members < 3) throw Error(ErrorKind::domain, "mining needs at least 3 members");
  if (outputs < 2) throw Error(ErrorKind::domain, "mining needs at least 2 outputs");
}

OutputMatrix random_output_matrix(std::size_t members, std::size_t outputs, std::uint64_t seed) {
  OutputMatrix m{members, outputs, std::vector<double>(members * outputs)};
  RandomStream rng(seed, 2);
  for (double& v : m.values) v = rng.normal();
  return m;
}

MiningResult max_abs_correlation(const OutputMatrix& m, MiningMode mode, unsigned workers) {
  if (m.members < 3 || m.outputs < 2) throw Error(ErrorKind::domain, "matrix needs >= 3 rows and >= 2 columns");
  const std::size_t rows = m.members;

  // Centered columns and their sums of squares. Identical columns give
  // dot == ss exactly, so their correlation is exactly 1.
  std::vector<double> centered(m.values.size());
  std::vector<double> ss(m.outputs);
  for (std::size_t j = 0; j < m.outputs; ++j) {
    const auto col = m.column(j);
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(rows);
    double* c = centered.data() + j * rows;
    for (std::size_t i = 0; i < rows; ++i) c[i] = col[i] - mean;
    ss[j] = dot(c, c, rows);
  }

  auto corr = [&](std::size_t i, std::size_t j) {
    return dot(centered.data() + i * rows, centered.data() + j * rows, rows) / std::sqrt(ss[i] * ss[j]);
  };

  const std::size_t tasks = mode == MiningMode::one_vs_rest ? 1 : m.outputs - 1;
  std::vector<Partial> partials(tasks);
  parallel_for(tasks, workers, [&](std::size_t i) {
    auto& part = partials[i];
    if (!(ss[i] > 0.0)) return;
    for (std::size_t j = i + 1; j < m.outputs; ++j) {
      if (ss[j] > 0.0) part.add(std::clamp(corr(i, j), -1.0, 1.0), i, j);
    }
  });

  MiningResult result;
  result.histogram.counts.assign(kHistogramBins, 0);
  result.max_abs_corr = 0.0;
  bool any = false;
  for (const auto& part : partials) {
    for (std::size_t b = 0; b < kHistogramBins; ++b) result.histogram.counts[b] += part.counts[b];
    result.pairs += part.pairs;
    if (part.pairs > 0 && (!any || part.best > result.max_abs_corr)) {
      result.max_abs_corr = part.best;
      result.argmax = part.argmax;
      any = true;
    }
  }
  return result;
}

MiningResult correlation_mining_demo(const MiningConfig& cfg) {
  cfg.validate();
  auto m = random_output_matrix(cfg.members, cfg.outputs, cfg.seed);
  if (cfg.duplicate_column) {
    const auto src = m.column(0);
    auto dst = m.column(cfg.outputs - 1);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return max_abs_correlation(m, cfg.mode, cfg.workers);
}

}  // namespace ecbayes
