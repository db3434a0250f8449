#ifndef STARNOMA_RNG_HPP
#define STARNOMA_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace starnoma {

// Seeded random stream with labeled substreams. All draws go through the
// hand-rolled uniform/normal below so that a (seed, label, index) triple
// produces the same sequence on every platform the standard mt19937_64
// runs on.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  // Independent stream derived from (this stream's seed, label, index).
  // Does not consume state from the parent.
  RandomStream substream(std::string_view label, std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }

  // Uniform on [0, 1).
  double uniform();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller (one value per call, cached pair).
  double normal();
  // Integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace starnoma

#endif  // STARNOMA_RNG_HPP
