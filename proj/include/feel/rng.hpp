#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace feel {

/// Deterministic random stream. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard; all distributions are implemented here
/// so that draws are identical across standard libraries and platforms.
///
/// Independent substreams are derived from (seed, iteration, purpose) by
/// hashing with FNV-1a and SplitMix64.
class SeededRng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64/splitmix64-v1";

  explicit SeededRng(std::uint64_t seed = 0);

  std::uint64_t seed() const noexcept { return seed_; }

  /// A stream that depends only on this stream's seed, `iteration` and
  /// `purpose`; drawing from it does not advance this stream.
  SeededRng substream(std::uint64_t iteration, std::string_view purpose) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller (one value per call, spare cached).
  double normal();
  /// Uniform integer in [0, n). Requires n > 0.
  std::size_t index(std::size_t n);
  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t integer(std::int64_t lo, std::int64_t hi);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  /// k distinct values from [0, n) in random order. Requires k <= n.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view s) noexcept;

}  // namespace feel
