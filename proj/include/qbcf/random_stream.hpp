/* Copyright 2026 The qbcf Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License. */

#ifndef QBCF_RANDOM_STREAM_HPP
#define QBCF_RANDOM_STREAM_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace qbcf {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/*! \brief Seedable random variate source identified by (seed, stream_id).

    The engine is a 64-bit Mersenne twister whose state is initialised through
    std::seed_seq from the six 32-bit words
    (seed lo/hi, stream_id lo/hi, splitmix64(seed ^ splitmix64(stream_id)) lo/hi).
    Distinct stream ids therefore give unrelated engine states, and a given
    (seed, stream_id) pair always reproduces the same sequence.

    Nested streams (e.g. bootstrap replication b inside Monte Carlo
    replication r) are obtained with derive(): the child seed is
    splitmix64(seed ^ splitmix64(stream_id)) and the child stream id is the
    caller-supplied index. A stream is not thread safe; give each task its own.
*/
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Child stream number `child` of this stream.
  RandomStream derive(std::uint64_t child) const { return RandomStream(child_seed(), child); }

  std::uint64_t child_seed() const noexcept { return splitmix64(seed_ ^ splitmix64(stream_id_)); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    double u;
    do {
      u = std::generate_canonical<double, 64>(engine_);
    } while (u <= 0.0 || u >= 1.0);
    return u;
  }

  double normal() { return normal_(engine_); }

  /// Exponential with unit rate.
  double exponential() { return -std::log(uniform()); }

  double chi_squared(double dof) {
    std::gamma_distribution<double> gamma(0.5 * dof, 2.0);
    return gamma(engine_);
  }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(engine_);
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  static std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id) {
    const std::uint64_t mix = splitmix64(seed ^ splitmix64(stream_id));
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32), static_cast<std::uint32_t>(mix),
                      static_cast<std::uint32_t>(mix >> 32)};
    return std::mt19937_64(seq);
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace qbcf

#endif  // QBCF_RANDOM_STREAM_HPP
