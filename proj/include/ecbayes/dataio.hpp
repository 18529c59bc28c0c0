#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ecbayes/random.hpp"

namespace ecbayes {

struct EnsembleRow {
  std::string model;
  double x = 0.0;
  double y = 0.0;

  bool operator==(const EnsembleRow&) const = default;
};

/// Centered sufficient statistics of an ensemble. Accumulated over rows in
/// sorted (x, y) order so that the result is bit-identical under any row
/// permutation.
struct SufficientStats {
  std::size_t n = 0;
  double mean_x = 0.0;
  double mean_y = 0.0;
  double sxx = 0.0;  // sum (x - mean_x)^2
  double sxy = 0.0;
  double syy = 0.0;

  double slope() const { return sxy / sxx; }
  double intercept() const { return mean_y - slope() * mean_x; }
  /// Residual sum of squares of the least-squares line.
  double rss() const;
  /// Residual sum of squares of an arbitrary line.
  double rss(double b0, double b1) const;
};

/// Labelled (predictor, response) pairs, one per ensemble member.
/// Invariants: n >= 3, finite values, unique labels, non-constant x.
class Ensemble {
 public:
  static constexpr std::size_t kMinRows = 3;

  /// Throws ErrorKind::parse on any invariant violation.
  explicit Ensemble(std::vector<EnsembleRow> rows, std::string predictor_name = "x",
                    std::string response_name = "y");

  const std::vector<EnsembleRow>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }
  const std::string& predictor_name() const noexcept { return predictor_name_; }
  const std::string& response_name() const noexcept { return response_name_; }
  const SufficientStats& stats() const noexcept { return stats_; }

  bool operator==(const Ensemble& other) const { return rows_ == other.rows_; }

 private:
  std::vector<EnsembleRow> rows_;
  std::string predictor_name_;
  std::string response_name_;
  SufficientStats stats_;
};

/// Parses a `model,x,y` CSV. Errors name the offending line.
Ensemble parse_ensemble_csv(std::string_view text);
Ensemble load_ensemble_csv(const std::string& path);
void write_ensemble_csv(std::ostream& out, const Ensemble& e);

// ---------------------------------------------------------------------------
// Observation model and predictor prior
// ---------------------------------------------------------------------------

struct ObservationSpec {
  double z = 0.0;
  double sigma_z = 1.0;

  void validate() const;
};

struct PredictorPrior {
  enum class Kind { flat, normal };
  Kind kind = Kind::flat;
  double mu_x = 0.0;
  double sigma_x = 1.0;

  static PredictorPrior flat() { return {}; }
  static PredictorPrior normal(double mu, double sigma) { return {Kind::normal, mu, sigma}; }
  void validate() const;
};

// ---------------------------------------------------------------------------
// Built-in catalog of published observations
// ---------------------------------------------------------------------------

struct CatalogEntry {
  std::string name;
  ObservationSpec observation;
  PredictorPrior predictor_prior;
  std::string notes;
};

/// The five constraints with tabulated observations. Ensemble tables are not
/// part of the catalog and must be supplied as `<name>.csv`.
const std::vector<CatalogEntry>& builtin_catalog();
/// Throws ErrorKind::not_found for an unknown name.
const CatalogEntry& find_builtin(std::string_view name);

// ---------------------------------------------------------------------------
// Synthetic ensembles for testing
// ---------------------------------------------------------------------------

struct SyntheticSpec {
  std::size_t n = 16;
  double intercept = 1.0;
  double slope = 2.0;
  double sigma = 0.5;
  double x_mean = 0.0;
  double x_sd = 1.0;
  /// When true the draws are rescaled so that the sample mean and sd of x,
  /// the least-squares coefficients and the residual sd equal the spec
  /// exactly.
  bool exact = false;
};

Ensemble synthetic_ensemble(const SyntheticSpec& spec, RandomStream& rng);

/// Synthetic ensemble whose least-squares fit reproduces the published
/// posterior summary of the Cox et al. temperature-variability constraint.
SyntheticSpec cox_like_spec();

}  // namespace ecbayes
