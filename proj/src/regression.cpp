#include "ecbayes/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ecbayes/diagnostics.hpp"
#include "ecbayes/error.hpp"
#include "ecbayes/parallel.hpp"

namespace ecbayes {
namespace {

struct Mat2 {
  double a, b, c, d;  // [[a, b], [c, d]]

  Mat2 inverse() const {
    const double det = a * d - b * c;
    return {d / det, -b / det, -c / det, a / det};
  }
};

void check_reference_inputs(const SufficientStats& s) {
  if (s.n < 4) {
    throw Error(ErrorKind::improper_posterior,
                "improper posterior: the reference prior needs at least 4 models, got " + std::to_string(s.n));
  }
  if (!(s.rss() > 1e-14 * std::max(s.syy, std::numeric_limits<double>::min()))) {
    throw Error(ErrorKind::improper_posterior, "improper posterior: zero residual variance (data lie on a line)");
  }
}

// Univariate slice sampler (stepping out + shrinkage) on u = log sigma.
template <typename LogDensity>
double slice_step(double u0, LogDensity&& log_density, double width, RandomStream& rng) {
  const double level = log_density(u0) - rng.exponential();
  double lo = u0 - width * rng.uniform();
  double hi = lo + width;
  constexpr int kMaxSteps = 64;
  int j = static_cast<int>(std::floor(kMaxSteps * rng.uniform()));
  int k = kMaxSteps - 1 - j;
  while (j-- > 0 && log_density(lo) > level) lo -= width;
  while (k-- > 0 && log_density(hi) > level) hi += width;
  for (;;) {
    const double u = lo + (hi - lo) * rng.uniform();
    if (log_density(u) > level) return u;
    (u < u0 ? lo : hi) = u;
  }
}

std::vector<double> column(std::span<const Draw> draws, int which) {
  std::vector<double> out(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) {
    out[i] = which == 0 ? draws[i].beta0 : which == 1 ? draws[i].beta1 : draws[i].sigma;
  }
  return out;
}

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

Moments moments(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

void ModelPrior::validate() const {
  if (kind == Kind::reference) return;
  if (!std::isfinite(mu[0]) || !std::isfinite(mu[1])) throw Error(ErrorKind::domain, "prior mean must be finite");
  if (!sigma_beta.is_positive_definite())
    throw Error(ErrorKind::domain, "subjective prior Sigma_beta must be positive definite");
  if (!std::isfinite(sigma_s) || !(sigma_s > 0.0)) throw Error(ErrorKind::domain, "sigma_s must be > 0");
}

RegressionPosterior fit_reference(const Ensemble& e, std::size_t draws, RandomStream& rng, unsigned workers) {
  const auto& s = e.stats();
  check_reference_inputs(s);
  if (draws == 0) throw Error(ErrorKind::domain, "fit_reference: draws must be >= 1");

  const double n = static_cast<double>(s.n);
  const double dof = n - 2.0;
  const double scale2 = s.rss() / dof;
  const double b1_hat = s.slope();
  const double sqrt_n = std::sqrt(n);
  const double sqrt_sxx = std::sqrt(s.sxx);

  RegressionPosterior post;
  post.prior = ModelPrior::reference();
  post.chains = 1;
  post.draws.resize(draws);

  const std::size_t blocks = (draws + kDrawBlock - 1) / kDrawBlock;
  parallel_for(blocks, workers, [&](std::size_t b) {
    RandomStream block_rng = rng.child(b);
    const std::size_t end = std::min(draws, (b + 1) * kDrawBlock);
    for (std::size_t i = b * kDrawBlock; i < end; ++i) {
      const double sigma2 = dof * scale2 / block_rng.chi_squared(dof);
      const double sigma = std::sqrt(sigma2);
      // The centered intercept (mean response) is independent of the slope.
      const double b1 = b1_hat + sigma * block_rng.normal() / sqrt_sxx;
      const double level = s.mean_y + sigma * block_rng.normal() / sqrt_n;
      post.draws[i] = {level - b1 * s.mean_x, b1, sigma};
    }
  });
  return post;
}

RegressionPosterior fit_subjective(const Ensemble& e, const ModelPrior& prior, const SamplerOptions& opts,
                                   RandomStream& rng) {
  if (prior.kind != ModelPrior::Kind::subjective) throw Error(ErrorKind::domain, "fit_subjective needs a subjective prior");
  prior.validate();
  if (opts.chains < 2) throw Error(ErrorKind::domain, "fit_subjective needs at least 2 chains");
  if (opts.draws < opts.chains) throw Error(ErrorKind::domain, "fit_subjective: draws must be >= chains");

  const auto& s = e.stats();
  const double n = static_cast<double>(s.n);
  const Mat2 xtx{n, n * s.mean_x, n * s.mean_x, s.sxx + n * s.mean_x * s.mean_x};
  const std::array<double, 2> xty{n * s.mean_y, s.sxy + n * s.mean_x * s.mean_y};
  const Mat2 prior_prec =
      Mat2{prior.sigma_beta.xx, prior.sigma_beta.xy, prior.sigma_beta.xy, prior.sigma_beta.yy}.inverse();
  const std::array<double, 2> prior_shift{prior_prec.a * prior.mu[0] + prior_prec.b * prior.mu[1],
                                          prior_prec.c * prior.mu[0] + prior_prec.d * prior.mu[1]};
  const double sigma_s2 = prior.sigma_s * prior.sigma_s;

  const double rss_ols = s.rss();
  const double start_sigma = s.n > 2 && rss_ols > 0.0 ? std::sqrt(rss_ols / (n - 2.0)) : prior.sigma_s;

  const std::size_t per_chain = (opts.draws + opts.chains - 1) / opts.chains;

  RegressionPosterior post;
  post.prior = prior;
  post.chains = opts.chains;

  for (int extension = 0;; ++extension) {
    const std::size_t thin = std::size_t{1} << extension;
    const std::size_t iterations = 2 * per_chain * thin;
    std::vector<std::vector<Draw>> chains(opts.chains);

    parallel_for(opts.chains, opts.workers, [&](std::size_t c) {
      RandomStream chain_rng = rng.child(c);
      auto& out = chains[c];
      out.reserve(per_chain);

      // Overdispersed start around the least-squares line.
      double b1 = s.slope() + 2.0 * start_sigma / std::sqrt(s.sxx) * chain_rng.normal();
      double b0 = s.mean_y - b1 * s.mean_x + 2.0 * start_sigma / std::sqrt(n) * chain_rng.normal();
      double log_sigma = std::log(start_sigma) + 0.5 * chain_rng.normal();

      for (std::size_t it = 0; it < iterations; ++it) {
        // beta | sigma: Normal prior times Normal likelihood.
        const double inv_s2 = std::exp(-2.0 * log_sigma);
        const Mat2 prec{xtx.a * inv_s2 + prior_prec.a, xtx.b * inv_s2 + prior_prec.b,
                        xtx.c * inv_s2 + prior_prec.c, xtx.d * inv_s2 + prior_prec.d};
        const Mat2 cov = prec.inverse();
        const double r0 = xty[0] * inv_s2 + prior_shift[0];
        const double r1 = xty[1] * inv_s2 + prior_shift[1];
        const double m0 = cov.a * r0 + cov.b * r1;
        const double m1 = cov.c * r0 + cov.d * r1;
        const auto [l11, l21, l22] = Cov2{cov.a, 0.5 * (cov.b + cov.c), cov.d}.cholesky();
        const double z0 = chain_rng.normal();
        const double z1 = chain_rng.normal();
        b0 = m0 + l11 * z0;
        b1 = m1 + l21 * z0 + l22 * z1;

        // sigma | beta on the log scale (Jacobian included).
        const double rss = std::max(0.0, s.rss(b0, b1));
        auto log_density = [&](double u) {
          const double sigma2 = std::exp(2.0 * u);
          return -(n - 1.0) * u - 0.5 * rss / sigma2 - 0.5 * sigma2 / sigma_s2;
        };
        log_sigma = slice_step(log_sigma, log_density, 1.0, chain_rng);

        if (it >= iterations / 2 && (it - iterations / 2) % thin == 0) out.push_back({b0, b1, std::exp(log_sigma)});
      }
    });

    ConvergenceReport report;
    report.iterations_per_chain = iterations;
    for (int p = 0; p < 3; ++p) {
      std::vector<std::vector<double>> series;
      for (const auto& ch : chains) series.push_back(column(ch, p));
      report.rhat[static_cast<std::size_t>(p)] = split_rhat(series);
      report.ess[static_cast<std::size_t>(p)] = effective_sample_size(series);
    }
    report.converged = true;
    for (std::size_t p = 0; p < 3; ++p) {
      if (!(report.rhat[p] < opts.rhat_max) || !(report.ess[p] > opts.ess_min)) report.converged = false;
    }

    if (report.converged || extension >= opts.max_extensions) {
      post.draws.clear();
      for (const auto& ch : chains) post.draws.insert(post.draws.end(), ch.begin(), ch.end());
      post.convergence = report;
      if (!report.converged) {
        std::ostringstream msg;
        msg << "MCMC diagnostics failed after " << iterations << " iterations per chain: R-hat (" << report.rhat[0]
            << ", " << report.rhat[1] << ", " << report.rhat[2] << "), ESS (" << report.ess[0] << ", "
            << report.ess[1] << ", " << report.ess[2] << ")";
        if (opts.strict) throw Error(ErrorKind::convergence, msg.str());
        post.warnings.push_back(msg.str());
      }
      return post;
    }
  }
}

RegressionPosterior fit_posterior(const Ensemble& e, const ModelPrior& prior, const SamplerOptions& opts,
                                  RandomStream& rng) {
  if (prior.kind == ModelPrior::Kind::reference) return fit_reference(e, opts.draws, rng, opts.workers);
  return fit_subjective(e, prior, opts, rng);
}

PosteriorSummary summarize(const RegressionPosterior& p) {
  if (p.draws.size() < kMinSummaryDraws) {
    throw Error(ErrorKind::insufficient_data,
                "summarize needs at least 1000 draws, got " + std::to_string(p.draws.size()));
  }
  const auto b0 = column(p.draws, 0);
  const auto b1 = column(p.draws, 1);
  const auto sg = column(p.draws, 2);
  const auto m0 = moments(b0), m1 = moments(b1), ms = moments(sg);
  if (!(m0.sd > 0.0) || !(m1.sd > 0.0) || !(ms.sd > 0.0))
    throw Error(ErrorKind::domain, "degenerate posterior: a parameter has zero posterior sd");

  double cross = 0.0;
  for (std::size_t i = 0; i < b0.size(); ++i) cross += (b0[i] - m0.mean) * (b1[i] - m1.mean);
  const double rho = std::clamp(cross / static_cast<double>(b0.size() - 1) / (m0.sd * m1.sd), -1.0, 1.0);

  PosteriorSummary out;
  out.beta0_hat = m0.mean;
  out.beta1_hat = m1.mean;
  out.sd_beta0 = m0.sd;
  out.sd_beta1 = m1.sd;
  out.rho = rho;
  out.sigma_mean = ms.mean;
  out.sigma_sd = ms.sd;
  out.sigma_fn = fn_fit_mle(sg);
  out.draws = p.draws.size();
  return out;
}

LaplaceReport laplace_check(const RegressionPosterior& p) {
  if (p.draws.size() < kMinSummaryDraws)
    throw Error(ErrorKind::insufficient_data, "laplace_check needs at least 1000 draws");
  LaplaceReport r;
  for (int k = 0; k < 3; ++k) {
    const auto v = column(p.draws, k);
    r.skewness[static_cast<std::size_t>(k)] = sample_skewness(v);
    r.excess_kurtosis[static_cast<std::size_t>(k)] = sample_excess_kurtosis(v);
  }
  r.approximately_normal = true;
  for (std::size_t k = 0; k < 2; ++k) {
    if (!(std::abs(r.skewness[k]) < 0.2) || !(std::abs(r.excess_kurtosis[k]) < 0.5)) r.approximately_normal = false;
  }
  return r;
}

}  // namespace ecbayes
