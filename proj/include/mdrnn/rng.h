#ifndef MDRNN_RNG_H_
#define MDRNN_RNG_H_

#include <cstdint>
#include <utility>

namespace mdrnn {

// xoshiro256** seeded through splitmix64. The draw sequence depends only on
// the seed, so runs are reproducible across platforms and compilers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 bits of precision.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
};

// Fisher-Yates shuffle driven by Rng (std::shuffle is implementation-defined).
template <class Container>
void shuffle(Container& c, Rng& rng) {
  for (auto i = c.size(); i > 1; --i) {
    auto j = rng.uniform_int(i);
    using std::swap;
    swap(c[i - 1], c[j]);
  }
}

}  // namespace mdrnn

#endif  // MDRNN_RNG_H_
