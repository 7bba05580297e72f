#include <algorithm>
#include <numeric>
#include <random>

#include "diststn/errors.hpp"
#include "diststn/harness.hpp"

namespace diststn {

namespace {

std::mt19937_64 epoch_rng(std::uint64_t seed, std::size_t epoch, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32), stream};
  return std::mt19937_64(seq);
}

std::vector<std::size_t> permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

}  // namespace

std::vector<IndexPair> pair_stream(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  if (n < 2) throw TooFewSamples("pair sampling needs at least 2 training samples, got " + std::to_string(n));
  auto rng = epoch_rng(seed, epoch, 0x9a1u);
  std::vector<std::size_t> first = permutation(n, rng);
  std::vector<std::size_t> second = permutation(n, rng);
  for (std::size_t k = 0; k < n; ++k) {
    if (first[k] != second[k]) continue;
    for (std::size_t d = 1; d < n; ++d) {
      const std::size_t other = (k + d) % n;
      if (first[other] != second[k] && first[k] != second[other]) {
        std::swap(second[k], second[other]);
        break;
      }
    }
  }
  std::vector<IndexPair> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = {first[k], second[k]};
  return out;
}

std::vector<std::size_t> sample_stream(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  auto rng = epoch_rng(seed, epoch, 0x51u);
  return permutation(n, rng);
}

}  // namespace diststn
