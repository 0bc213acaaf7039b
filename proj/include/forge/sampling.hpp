#pragma once

// Seeded, platform-stable randomness and tuple sampling.
//
// std::uniform_int_distribution and std::shuffle are implementation-defined,
// so bounded draws are done by rejection on the raw mt19937_64 stream.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

namespace forge {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, bound); bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Default band for sample sizes; advisory, not enforced.
inline constexpr std::size_t kSampleBandLow = 20;
inline constexpr std::size_t kSampleBandHigh = 30;

struct SamplePlan {
  std::vector<std::string> population;  // distinct ids
  std::size_t n = 24;
  std::size_t arity = 2;  // 1, 2 or 3
  std::uint64_t rng_seed = 0;
  bool with_replacement = false;  // must stay false

  bool in_default_band() const { return n >= kSampleBandLow && n <= kSampleBandHigh; }
};

using Tuple = std::vector<std::string>;

// C(population, arity), saturating at UINT64_MAX.
std::uint64_t distinct_tuple_count(std::size_t population, std::size_t arity);

// n distinct tuples; members of a tuple are distinct and listed in population
// order. Throws kInsufficientPopulation when fewer than n tuples exist.
std::vector<Tuple> sample_tuples(const SamplePlan& plan);

// n distinct entries of `candidates` (partial Fisher-Yates on the seed).
// Throws kInsufficientPopulation when n exceeds the candidate count.
std::vector<Tuple> sample_from(std::vector<Tuple> candidates, std::size_t n, std::uint64_t rng_seed);

// Every tuple of the given arity, in lexicographic population order.
std::vector<Tuple> all_tuples(const std::vector<std::string>& population, std::size_t arity);

nlohmann::json to_json(const SamplePlan& plan);
SamplePlan sample_plan_from_json(const nlohmann::json& j);

}  // namespace forge
