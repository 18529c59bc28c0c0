#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace ecbayes {

enum class MiningMode { one_vs_rest, all_pairs };

struct MiningConfig {
  std::size_t members = 43;
  std::size_t outputs = 10000;
  MiningMode mode = MiningMode::all_pairs;
  std::uint64_t seed = 1;
  /// Overwrite the last column with a copy of column 0.
  bool duplicate_column = false;
  unsigned workers = 0;

  void validate() const;
};

/// Column-major members x outputs matrix.
struct OutputMatrix {
  std::size_t members = 0;
  std::size_t outputs = 0;
  std::vector<double> values;

  std::span<double> column(std::size_t j) { return {values.data() + j * members, members}; }
  std::span<const double> column(std::size_t j) const { return {values.data() + j * members, members}; }
};

struct CorrelationHistogram {
  double lo = -1.0;
  double hi = 1.0;
  std::vector<std::uint64_t> counts;  // equal-width bins over [lo, hi]
};

struct MiningResult {
  double max_abs_corr = 0.0;
  std::pair<std::size_t, std::size_t> argmax{0, 0};
  CorrelationHistogram histogram;
  std::uint64_t pairs = 0;
};

inline constexpr std::size_t kHistogramBins = 40;

/// Independent standard-Normal pseudo-ensemble.
OutputMatrix random_output_matrix(std::size_t members, std::size_t outputs, std::uint64_t seed);

/// Largest |Pearson correlation| between column 0 and every other column
/// (one_vs_rest) or over all column pairs (all_pairs). Constant columns
/// are skipped.
MiningResult max_abs_correlation(const OutputMatrix& m, MiningMode mode, unsigned workers = 0);

MiningResult correlation_mining_demo(const MiningConfig& cfg);

}  // namespace ecbayes
