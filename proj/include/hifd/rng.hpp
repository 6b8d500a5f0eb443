#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace hifd {

/// Deterministic random stream. Wraps mt19937_64 but converts to doubles by
/// hand so that outputs are identical across standard libraries, not just
/// across runs. Substreams are derived by hashing so that concurrent workers
/// never share an engine.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Standard normal via Box-Muller (pairs cached).
  double gaussian();

  /// Deterministic Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& xs) {
    for (std::size_t i = xs.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(xs[i - 1], xs[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Mixes a master seed with a stream id into an independent substream seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// FNV-1a over arbitrary bytes; used for config hashes and checksums.
std::uint64_t fnv1a(const void* data, std::size_t n,
                    std::uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace hifd
