#include "ecbayes/diagnostics.hpp"

#include <cmath>
#include <limits>

#include "ecbayes/error.hpp"

namespace ecbayes {
namespace {

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance_of(std::span<const double> x, double m) {
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

struct Decomposition {
  double within = 0.0;   // W
  double var_plus = 0.0; // pooled posterior variance estimate
};

Decomposition decompose(const std::vector<std::span<const double>>& seqs) {
  const auto m = static_cast<double>(seqs.size());
  const auto n = static_cast<double>(seqs.front().size());
  std::vector<double> means;
  double grand = 0.0, within = 0.0;
  for (const auto& s : seqs) {
    const double mu = mean_of(s);
    means.push_back(mu);
    grand += mu;
    within += variance_of(s, mu);
  }
  grand /= m;
  within /= m;
  double between = 0.0;
  for (double mu : means) between += (mu - grand) * (mu - grand);
  between *= n / (m - 1.0);
  return {within, (n - 1.0) / n * within + between / n};
}

}  // namespace

double split_rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) throw Error(ErrorKind::insufficient_data, "split_rhat: no chains");
  std::size_t len = chains.front().size();
  for (const auto& c : chains) len = std::min(len, c.size());
  if (len < 4) throw Error(ErrorKind::insufficient_data, "split_rhat: need at least 4 draws per chain");
  const std::size_t half = len / 2;

  std::vector<std::span<const double>> seqs;
  for (const auto& c : chains) {
    seqs.emplace_back(c.data(), half);
    seqs.emplace_back(c.data() + (len - half), half);
  }
  const auto d = decompose(seqs);
  if (d.within <= 0.0) return d.var_plus <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(d.var_plus / d.within);
}

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) throw Error(ErrorKind::insufficient_data, "effective_sample_size: need >= 2 chains");
  std::size_t len = chains.front().size();
  for (const auto& c : chains) len = std::min(len, c.size());
  if (len < 4) throw Error(ErrorKind::insufficient_data, "effective_sample_size: need >= 4 draws per chain");

  std::vector<std::span<const double>> seqs;
  std::vector<double> means;
  for (const auto& c : chains) {
    seqs.emplace_back(c.data(), len);
    means.push_back(mean_of(seqs.back()));
  }
  const auto d = decompose(seqs);
  const double total = static_cast<double>(len * chains.size());
  if (d.var_plus <= 0.0) return total;

  const auto n = static_cast<double>(len);
  // Mean (over chains) autocovariance at lag t, biased estimator.
  auto autocorr = [&](std::size_t t) {
    double acc = 0.0;
    for (std::size_t j = 0; j < seqs.size(); ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i + t < len; ++i) s += (seqs[j][i] - means[j]) * (seqs[j][i + t] - means[j]);
      acc += s / n;
    }
    acc /= static_cast<double>(seqs.size());
    return 1.0 - (d.within * (n - 1.0) / n - acc) / d.var_plus;
  };

  // Geyer's initial positive, monotone sequence of paired autocorrelations.
  double sum_pairs = 0.0;
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < len; ++k) {
    double pair = (k == 0 ? 1.0 : autocorr(2 * k)) + autocorr(2 * k + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, previous);
    previous = pair;
    sum_pairs += pair;
  }
  const double tau = std::max(-1.0 + 2.0 * sum_pairs, 1.0 / std::log10(total));
  return total / tau;
}

double sample_skewness(std::span<const double> x) {
  const double m = mean_of(x);
  double m2 = 0.0, m3 = 0.0;
  for (double v : x) {
    const double d = v - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= static_cast<double>(x.size());
  m3 /= static_cast<double>(x.size());
  return m3 / std::pow(m2, 1.5);
}

double sample_excess_kurtosis(std::span<const double> x) {
  const double m = mean_of(x);
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - m;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= static_cast<double>(x.size());
  m4 /= static_cast<double>(x.size());
  return m4 / (m2 * m2) - 3.0;
}

}  // namespace ecbayes
