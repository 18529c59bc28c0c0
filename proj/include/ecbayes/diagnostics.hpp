#pragma once

#include <span>
#include <vector>

namespace ecbayes {

/// Split-R-hat (Gelman et al., BDA3 11.4). Each chain is halved, giving
/// 2 * chains sequences of equal length. Requires >= 4 draws per chain.
double split_rhat(const std::vector<std::vector<double>>& chains);

/// Multi-chain effective sample size using Geyer's initial positive
/// sequence on the combined autocorrelation estimate.
double effective_sample_size(const std::vector<std::vector<double>>& chains);

/// Sample moments for normality checks.
double sample_skewness(std::span<const double> x);
double sample_excess_kurtosis(std::span<const double> x);

}  // namespace ecbayes
