#pragma once

#include <cstdint>
#include <random>

namespace ecbayes {

/// Seeded source of reproducible randomness. Two streams with the same
/// (seed, stream id) produce identical sequences; distinct ids give
/// independent sequences. Child streams are derived deterministically, which
/// is how parallel work stays independent of the worker count.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Deterministic child stream, e.g. one per block of draws.
  RandomStream child(std::uint64_t index) const;

  std::mt19937_64& engine() noexcept { return engine_; }

  double normal() { return normal_(engine_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double chi_squared(double dof) { return std::chi_squared_distribution<double>(dof)(engine_); }
  double exponential() { return std::exponential_distribution<double>(1.0)(engine_); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace ecbayes
