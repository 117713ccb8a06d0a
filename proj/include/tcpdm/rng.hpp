#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace tcpdm {

/// Seeded generator. Parallel callers derive independent streams from a
/// counter tuple with `Rng::stream` so results do not depend on scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) {
    std::vector<std::uint32_t> words;
    words.reserve(2 + 2 * counters.size());
    auto push = [&](std::uint64_t x) {
      words.push_back(static_cast<std::uint32_t>(x));
      words.push_back(static_cast<std::uint32_t>(x >> 32));
    };
    push(seed);
    for (auto c : counters) push(c);
    std::seed_seq seq(words.begin(), words.end());
    Rng rng;
    rng.engine_.seed(seq);
    return rng;
  }

  double normal() { return normal_(engine_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  /// Inclusive on both ends.
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

template <typename TensorT>
void fill_normal(TensorT& t, Rng& rng) {
  for (auto& x : t.array()) x = static_cast<typename TensorT::Array::Scalar>(rng.normal());
}

}  // namespace tcpdm
