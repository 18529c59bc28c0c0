#include "ecbayes/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

#include "ecbayes/error.hpp"

namespace ecbayes {
namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343818684758586311649;
constexpr double kLogSqrt2Pi = 0.9189385332046727417803297364056176398613974736378;

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw Error(ErrorKind::domain, std::string(what) + " must be finite");
}

double log_sum_exp(double a, double b) {
  const double hi = std::max(a, b);
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Nelder-Mead on a 2-D objective. Returns the best vertex.
template <typename F>
std::array<double, 2> nelder_mead(F&& f, std::array<double, 2> start, std::array<double, 2> step, double ftol,
                                  int max_iter) {
  using Point = std::array<double, 2>;
  std::array<Point, 3> p{start, Point{start[0] + step[0], start[1]}, Point{start[0], start[1] + step[1]}};
  std::array<double, 3> fv{f(p[0]), f(p[1]), f(p[2])};

  auto along = [](const Point& from, const Point& to, double t) {
    return Point{from[0] + t * (to[0] - from[0]), from[1] + t * (to[1] - from[1])};
  };

  for (int iter = 0; iter < max_iter; ++iter) {
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    const int best = idx[0], mid = idx[1], worst = idx[2];
    if (std::abs(fv[worst] - fv[best]) <= ftol) break;

    const Point centroid{0.5 * (p[best][0] + p[mid][0]), 0.5 * (p[best][1] + p[mid][1])};
    const Point reflected = along(centroid, p[worst], -1.0);
    const double fr = f(reflected);
    if (fr < fv[best]) {
      const Point expanded = along(centroid, p[worst], -2.0);
      const double fe = f(expanded);
      if (fe < fr) {
        p[worst] = expanded, fv[worst] = fe;
      } else {
        p[worst] = reflected, fv[worst] = fr;
      }
    } else if (fr < fv[mid]) {
      p[worst] = reflected, fv[worst] = fr;
    } else {
      const bool outside = fr < fv[worst];
      const Point contracted = outside ? along(centroid, reflected, 0.5) : along(centroid, p[worst], 0.5);
      const double fc = f(contracted);
      if (fc < std::min(fr, fv[worst])) {
        p[worst] = contracted, fv[worst] = fc;
      } else {
        for (int i : {mid, worst}) {
          p[i] = along(p[best], p[i], 0.5);
          fv[i] = f(p[i]);
        }
      }
    }
  }
  const auto best = std::min_element(fv.begin(), fv.end()) - fv.begin();
  return p[static_cast<std::size_t>(best)];
}

}  // namespace

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::domain, "normal_quantile: p must lie in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

void Gaussian1D::validate() const {
  require_finite(mean, "mean");
  if (!std::isfinite(sd) || sd < 0.0) throw Error(ErrorKind::domain, "sd must be finite and non-negative");
}

// ---------------------------------------------------------------------------

bool Cov2::is_psd() const {
  if (!std::isfinite(xx) || !std::isfinite(xy) || !std::isfinite(yy)) return false;
  const double scale = std::max({std::abs(xx), std::abs(yy), std::abs(xy)});
  if (scale == 0.0) return true;
  return xx >= -1e-12 * scale && yy >= -1e-12 * scale && determinant() >= -1e-10 * scale * scale;
}

bool Cov2::is_positive_definite() const {
  return std::isfinite(xx) && std::isfinite(xy) && std::isfinite(yy) && xx > 0.0 && yy > 0.0 &&
         determinant() > 0.0;
}

std::array<double, 3> Cov2::cholesky() const {
  const double l11 = std::sqrt(std::max(0.0, xx));
  const double l21 = l11 > 0.0 ? xy / l11 : 0.0;
  const double l22 = std::sqrt(std::max(0.0, yy - l21 * l21));
  return {l11, l21, l22};
}

std::vector<std::array<double, 2>> mvn2_sample(const Gaussian2D& d, std::size_t n, RandomStream& rng) {
  require_finite(d.mean[0], "mean");
  require_finite(d.mean[1], "mean");
  if (!d.cov.is_psd()) throw Error(ErrorKind::domain, "mvn2_sample: covariance is not positive semidefinite");
  const auto [l11, l21, l22] = d.cov.cholesky();
  std::vector<std::array<double, 2>> out(n);
  for (auto& v : out) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    v = {d.mean[0] + l11 * z1, d.mean[1] + l21 * z1 + l22 * z2};
  }
  return out;
}

// ---------------------------------------------------------------------------

void FoldedNormal::validate() const {
  require_finite(location, "Folded-Normal location");
  if (!std::isfinite(spread2) || !(spread2 > 0.0))
    throw Error(ErrorKind::domain, "Folded-Normal spread2 must be finite and > 0");
}

double FoldedNormal::mean() const {
  const double s = std::sqrt(spread2);
  return 2.0 * kInvSqrt2Pi * s * std::exp(-0.5 * location * location / spread2) +
         location * (1.0 - 2.0 * normal_cdf(-location / s));
}

double FoldedNormal::variance() const {
  const double m = mean();
  return location * location + spread2 - m * m;
}

double fn_pdf(double x, const FoldedNormal& d) {
  require_finite(x, "x");
  d.validate();
  if (x < 0.0) return 0.0;
  const double s = std::sqrt(d.spread2);
  return (normal_pdf((x - d.location) / s) + normal_pdf((x + d.location) / s)) / s;
}

double fn_log_pdf(double x, const FoldedNormal& d) {
  require_finite(x, "x");
  d.validate();
  if (x < 0.0) return -std::numeric_limits<double>::infinity();
  const double s = std::sqrt(d.spread2);
  const double a = (x - d.location) / s;
  const double b = (x + d.location) / s;
  return log_sum_exp(-0.5 * a * a, -0.5 * b * b) - kLogSqrt2Pi - std::log(s);
}

double fn_cdf(double x, const FoldedNormal& d) {
  d.validate();
  if (std::isnan(x)) throw Error(ErrorKind::domain, "x must not be NaN");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double s = std::sqrt(d.spread2);
  return normal_cdf((x - d.location) / s) - normal_cdf((-x - d.location) / s);
}

double fn_survival(double x, const FoldedNormal& d) {
  if (std::isnan(x)) throw Error(ErrorKind::domain, "x must not be NaN");
  require_finite(d.location, "Folded-Normal location");
  if (!(d.spread2 >= 0.0)) throw Error(ErrorKind::domain, "Folded-Normal spread2 must be >= 0");
  if (d.spread2 == 0.0) return std::abs(d.location) > x ? 1.0 : 0.0;
  if (x < 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  const double s = std::sqrt(d.spread2);
  return normal_sf((x - d.location) / s) + normal_cdf((-x - d.location) / s);
}

double fn_quantile(double p, const FoldedNormal& d) {
  d.validate();
  if (!(p >= 0.0 && p < 1.0)) throw Error(ErrorKind::domain, "fn_quantile: p must lie in [0, 1)");
  double lo = 0.0;
  double hi = std::abs(d.location) + 10.0 * std::sqrt(d.spread2);
  while (fn_cdf(hi, d) < p) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (fn_cdf(mid, d) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double fn_sample_one(double location, double spread2, RandomStream& rng) {
  return std::abs(location + std::sqrt(spread2) * rng.normal());
}

std::vector<double> fn_sample(const FoldedNormal& d, std::size_t n, RandomStream& rng) {
  require_finite(d.location, "Folded-Normal location");
  if (!std::isfinite(d.spread2) || d.spread2 < 0.0)
    throw Error(ErrorKind::domain, "Folded-Normal spread2 must be finite and >= 0");
  std::vector<double> out(n);
  for (auto& v : out) v = fn_sample_one(d.location, d.spread2, rng);
  return out;
}

double fn_log_likelihood(std::span<const double> samples, const FoldedNormal& d) {
  d.validate();
  const double s = std::sqrt(d.spread2);
  double total = 0.0;
  for (double x : samples) {
    const double a = (x - d.location) / s;
    const double b = (x + d.location) / s;
    total += log_sum_exp(-0.5 * a * a, -0.5 * b * b);
  }
  return total - static_cast<double>(samples.size()) * (kLogSqrt2Pi + std::log(s));
}

namespace {

void check_fit_samples(std::span<const double> samples) {
  if (samples.size() < kMinFitSamples)
    throw Error(ErrorKind::insufficient_data, "Folded-Normal fit needs at least 30 samples");
  for (double x : samples) {
    if (!std::isfinite(x)) throw Error(ErrorKind::domain, "Folded-Normal fit: non-finite sample");
    if (x < 0.0) throw Error(ErrorKind::domain, "Folded-Normal fit: negative sample");
  }
}

}  // namespace

FoldedNormal fn_moment_match(std::span<const double> samples) {
  check_fit_samples(samples);
  const double n = static_cast<double>(samples.size());
  double m1 = 0.0, m2 = 0.0;
  for (double x : samples) {
    m1 += x;
    m2 += x * x;
  }
  m1 /= n;
  m2 /= n;
  if (!(m2 - m1 * m1 > 1e-14 * m2))
    throw Error(ErrorKind::domain, "Folded-Normal fit: samples have zero variance");

  // E[X] / sqrt(E[X^2]) depends only on theta = location / sd and increases
  // from sqrt(2 / pi) at theta = 0 towards 1.
  const double ratio = m1 / std::sqrt(m2);
  auto shape = [](double theta) { return FoldedNormal{theta, 1.0}.mean() / std::sqrt(1.0 + theta * theta); };
  double theta = 0.0;
  if (ratio > shape(0.0)) {
    double lo = 0.0;
    double hi = std::max(10.0, 2.0 * ratio / std::sqrt(std::max(1e-300, 1.0 - ratio * ratio)));
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (shape(mid) < ratio ? lo : hi) = mid;
    }
    theta = 0.5 * (lo + hi);
  }
  const double spread2 = m2 / (1.0 + theta * theta);
  return {theta * std::sqrt(spread2), spread2};
}

FoldedNormal fn_fit_mle(std::span<const double> samples) {
  const FoldedNormal start = fn_moment_match(samples);
  auto nll = [&](const std::array<double, 2>& p) {
    const double spread2 = std::exp(p[1]);
    if (!std::isfinite(spread2) || spread2 <= 0.0) return std::numeric_limits<double>::infinity();
    return -fn_log_likelihood(samples, FoldedNormal{p[0], spread2});
  };

  std::array<double, 2> best{start.location, std::log(start.spread2)};
  double best_value = nll(best);
  for (int restart = 0; restart < 5; ++restart) {
    const double sd = std::exp(0.5 * best[1]);
    const auto candidate = nelder_mead(nll, best, {0.1 * sd + 1e-8, 0.1}, 1e-8, 5000);
    const double value = nll(candidate);
    const bool improved = value < best_value - 1e-8;
    if (value < best_value) best = candidate, best_value = value;
    if (!improved) break;
  }
  return {std::abs(best[0]), std::exp(best[1])};
}

}  // namespace ecbayes
