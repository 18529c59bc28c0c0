#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace ecbayes {

/// One published number next to the value computed from local data.
struct Comparison {
  std::string item;
  double expected = 0.0;
  double computed = 0.0;
  double tolerance = 0.0;

  bool pass() const;
};

struct ReproductionReport {
  int table = 0;
  std::vector<Comparison> rows;
  /// Ensemble files that were looked for and not found.
  std::vector<std::string> missing;
  std::vector<std::string> warnings;

  bool complete() const { return missing.empty(); }
  bool all_pass() const;
};

inline constexpr std::size_t kReproductionDraws = 200000;

/// Reruns one of the published tables (1, 2 or 4) from `<data_dir>/<name>.csv`
/// ensemble files. Missing files are listed rather than raised so that a
/// partial Table 4 can still be produced. Throws ErrorKind::usage for an
/// unknown table number.
ReproductionReport reproduce_table(int table, const std::filesystem::path& data_dir, std::uint64_t seed = 1,
                                   unsigned workers = 0);

nlohmann::json to_json(const ReproductionReport& r);

}  // namespace ecbayes
