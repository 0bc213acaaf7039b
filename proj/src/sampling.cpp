#include "forge/sampling.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "forge/error.hpp"

namespace forge {

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  engine_.seed(seq);
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorCode::kInvalidArgument, "Rng::below(0)");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

std::uint64_t distinct_tuple_count(std::size_t population, std::size_t arity) {
  if (arity > population) return 0;
  unsigned __int128 c = 1;
  for (std::size_t i = 0; i < arity; ++i) {
    c = c * (population - i) / (i + 1);
    if (c > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(c);
}

std::vector<Tuple> all_tuples(const std::vector<std::string>& population, std::size_t arity) {
  std::vector<Tuple> out;
  const std::size_t n = population.size();
  if (arity == 0 || arity > n) return out;
  std::vector<std::size_t> idx(arity);
  for (std::size_t i = 0; i < arity; ++i) idx[i] = i;
  while (true) {
    Tuple t;
    for (auto i : idx) t.push_back(population[i]);
    out.push_back(std::move(t));
    std::size_t k = arity;
    while (k > 0 && idx[k - 1] == n - arity + (k - 1)) --k;
    if (k == 0) break;
    ++idx[k - 1];
    for (std::size_t j = k; j < arity; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

std::vector<Tuple> sample_from(std::vector<Tuple> candidates, std::size_t n, std::uint64_t rng_seed) {
  if (n > candidates.size()) {
    throw Error(ErrorCode::kInsufficientPopulation,
                fmt::format("requested {} tuples but only {} are eligible", n, candidates.size()));
  }
  Rng rng(rng_seed);
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(candidates.size() - i));
    std::swap(candidates[i], candidates[j]);
  }
  candidates.resize(n);
  return candidates;
}

std::vector<Tuple> sample_tuples(const SamplePlan& plan) {
  if (plan.with_replacement) {
    throw Error(ErrorCode::kInvalidArgument, "sampling with replacement is not supported");
  }
  if (plan.arity < 1 || plan.arity > 3) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("arity must be 1, 2 or 3 (got {})", plan.arity));
  }
  std::set<std::string> distinct(plan.population.begin(), plan.population.end());
  if (distinct.size() != plan.population.size()) {
    throw Error(ErrorCode::kInvalidArgument, "sample population contains duplicate ids");
  }
  const auto available = distinct_tuple_count(plan.population.size(), plan.arity);
  if (plan.n > available) {
    throw Error(ErrorCode::kInsufficientPopulation,
                fmt::format("requested {} tuples of arity {} but only {} exist in a population of {}",
                            plan.n, plan.arity, available, plan.population.size()));
  }

  Rng rng(plan.rng_seed);
  std::vector<Tuple> out;
  // Dense case: shuffle the full enumeration. Sparse case: rejection.
  if (available <= 4096 || plan.n * 4 > available) {
    return sample_from(all_tuples(plan.population, plan.arity), plan.n, plan.rng_seed);
  }
  std::set<std::vector<std::size_t>> seen;
  const auto size = plan.population.size();
  while (out.size() < plan.n) {
    std::vector<std::size_t> idx;
    while (idx.size() < plan.arity) {
      const auto i = static_cast<std::size_t>(rng.below(size));
      if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
    }
    std::sort(idx.begin(), idx.end());
    if (!seen.insert(idx).second) continue;
    Tuple t;
    for (auto i : idx) t.push_back(plan.population[i]);
    out.push_back(std::move(t));
  }
  return out;
}

nlohmann::json to_json(const SamplePlan& plan) {
  return {{"population", plan.population},
          {"n", plan.n},
          {"arity", plan.arity},
          {"rng_seed", plan.rng_seed}};
}

SamplePlan sample_plan_from_json(const nlohmann::json& j) {
  SamplePlan p;
  p.population = j.at("population").get<std::vector<std::string>>();
  p.n = j.value("n", std::size_t{24});
  p.arity = j.value("arity", std::size_t{2});
  p.rng_seed = j.value("rng_seed", std::uint64_t{0});
  return p;
}

}  // namespace forge
