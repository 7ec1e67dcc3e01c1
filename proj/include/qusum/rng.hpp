#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace qusum::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Decorrelated per-trial seed. Trials are seeded independently of how they
// are scheduled across threads, which is what makes runs reproducible for
// any --threads value.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t trial) {
  std::uint64_t s = master;
  s = splitmix64(s) ^ ((stream + 1) * 0xd1342543de82ef95ULL);
  s = splitmix64(s) ^ ((trial + 1) * 0xaf251af3b0f025b5ULL);
  return splitmix64(s);
}

// 53-bit uniform in [0, 1); bypasses std::uniform_real_distribution, whose
// output sequence is not pinned by the standard.
template <class Rng>
double uniform01(Rng& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Inverse-CDF sampler over a fixed finite distribution.
class Categorical {
 public:
  explicit Categorical(const std::vector<double>& probs) {
    if (probs.empty()) throw std::invalid_argument("Categorical: empty distribution");
    double total = 0;
    cum_.reserve(probs.size());
    for (double p : probs) {
      if (!(p >= 0)) throw std::invalid_argument("Categorical: negative probability");
      total += p;
      cum_.push_back(total);
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument("Categorical: probabilities must sum to 1");
    last_positive_ = 0;
    for (std::size_t i = 0; i < probs.size(); ++i)
      if (probs[i] > 0) last_positive_ = static_cast<std::int32_t>(i);
  }

  template <class Rng>
  std::int32_t operator()(Rng& g) const {
    const double u = uniform01(g) * cum_.back();
    std::size_t lo = 0, hi = cum_.size() - 1;
    while (lo < hi) {  // first index with cum > u
      std::size_t mid = (lo + hi) / 2;
      if (cum_[mid] > u)
        hi = mid;
      else
        lo = mid + 1;
    }
    // floating slack at the top end must not select a zero-probability tail
    if (lo > static_cast<std::size_t>(last_positive_)) return last_positive_;
    return static_cast<std::int32_t>(lo);
  }

 private:
  std::vector<double> cum_;
  std::int32_t last_positive_;
};

}  // namespace qusum::rng
