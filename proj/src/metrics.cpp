#include "forge/metrics.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include <fmt/format.h>

#include "forge/error.hpp"

namespace forge {
namespace {

AgreementReport finish(std::string metric, std::vector<Tuple> sample, std::vector<Rational> values) {
  AgreementReport r;
  r.metric = std::move(metric);
  for (const auto& v : values) r.numerator += v;
  r.denominator = static_cast<std::int64_t>(values.size());
  r.value = r.denominator == 0 ? Rational(0) : r.numerator / Rational(r.denominator);
  r.sample = std::move(sample);
  r.per_tuple = std::move(values);
  return r;
}

std::vector<std::string> population_of(const SamplePlan& plan, const RankAssignment& ranks) {
  if (!plan.population.empty()) return plan.population;
  std::vector<std::string> out;
  for (const auto& [id, _] : ranks.ranks) out.push_back(id);
  return out;
}

int rank_of(const RankAssignment& r, const std::string& id) {
  auto it = r.ranks.find(id);
  if (it == r.ranks.end()) {
    throw Error(ErrorCode::kNotFound, fmt::format("'{}' has no rank for '{}'", r.subject, id));
  }
  return it->second;
}

std::vector<Tuple> eligible_pairs(const RankAssignment& human, const std::vector<std::string>& population) {
  std::vector<Tuple> out;
  for (auto& t : all_tuples(population, 2)) {
    if (rank_of(human, t[0]) != rank_of(human, t[1])) out.push_back(std::move(t));
  }
  if (out.empty()) throw Error(ErrorCode::kNoEligiblePairs, "every pair is tied in the human ranking");
  return out;
}

AgreementReport order_agreement(const RankAssignment& human, const PairIndicator& indicator,
                                const std::vector<Tuple>& pairs) {
  std::vector<Rational> values;
  for (const auto& p : pairs) {
    const bool first_higher = rank_of(human, p[0]) > rank_of(human, p[1]);
    values.push_back(first_higher ? indicator(p[0], p[1]) : indicator(p[1], p[0]));
  }
  return finish("pairwise-order-agreement", pairs, std::move(values));
}

}  // namespace

CompareFn compare_from_scores(std::map<std::string, int> scores) {
  return [scores = std::move(scores)](const std::string& a, const std::string& b) {
    auto ia = scores.find(a);
    auto ib = scores.find(b);
    if (ia == scores.end() || ib == scores.end()) return Preference::kFailed;
    if (ia->second == ib->second) return Preference::kTie;
    return ia->second > ib->second ? Preference::kFirst : Preference::kSecond;
  };
}

CompareFn compare_from_ranks(const RankAssignment& ranks) { return compare_from_scores(ranks.ranks); }

nlohmann::json to_json(const AgreementReport& r) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& v : r.per_tuple) per.push_back(v);
  return {{"metric", r.metric},
          {"numerator", r.numerator},
          {"denominator", r.denominator},
          {"value", r.value},
          {"value_text", r.value.str()},
          {"sample", r.sample},
          {"per_tuple", per},
          {"excluded", r.excluded},
          {"flagged", r.flagged},
          {"note", r.note}};
}

std::string format_table(const AgreementReport& r) {
  std::string out = fmt::format("{:<28} {:>10} {:>8} {:>10}\n", "metric", "agree", "tuples", "value");
  out += fmt::format("{:<28} {:>10} {:>8} {:>10.4f}\n", r.metric, r.numerator.str(), r.denominator,
                     r.value.to_double());
  if (!r.excluded.empty()) out += fmt::format("excluded: {}\n", r.excluded.size());
  if (!r.flagged.empty()) out += fmt::format("flagged: {}\n", r.flagged.size());
  if (!r.note.empty()) out += r.note + "\n";
  return out;
}

AgreementReport pairwise_order_agreement(const RankAssignment& human, const PairIndicator& indicator,
                                         const SamplePlan& plan) {
  auto eligible = eligible_pairs(human, population_of(plan, human));
  return order_agreement(human, indicator, sample_from(std::move(eligible), plan.n, plan.rng_seed));
}

AgreementReport pairwise_order_agreement(const RankAssignment& human, const CompareFn& judge,
                                         const SamplePlan& plan) {
  std::vector<Tuple> failed;
  PairIndicator ind = [&](const std::string& higher, const std::string& lower) {
    const auto p = judge(higher, lower);
    if (p == Preference::kFailed) failed.push_back({higher, lower});
    return Rational(p == Preference::kFirst ? 1 : 0);
  };
  auto r = pairwise_order_agreement(human, ind, plan);
  r.flagged = std::move(failed);
  return r;
}

AgreementReport pairwise_order_agreement(const RankAssignment& human, const CompareFn& judge) {
  std::vector<std::string> population;
  for (const auto& [id, _] : human.ranks) population.push_back(id);
  std::vector<Tuple> failed;
  PairIndicator ind = [&](const std::string& higher, const std::string& lower) {
    const auto p = judge(higher, lower);
    if (p == Preference::kFailed) failed.push_back({higher, lower});
    return Rational(p == Preference::kFirst ? 1 : 0);
  };
  auto r = order_agreement(human, ind, eligible_pairs(human, population));
  r.flagged = std::move(failed);
  return r;
}

std::int64_t absolute_rank_distance(const RankAssignment& human, const RankAssignment& judge) {
  std::set<std::string> hk, jk;
  for (const auto& [k, _] : human.ranks) hk.insert(k);
  for (const auto& [k, _] : judge.ranks) jk.insert(k);
  if (hk != jk) {
    throw Error(ErrorCode::kMismatch, fmt::format("'{}' and '{}' rank different artifacts", human.subject, judge.subject));
  }
  std::int64_t total = 0;
  for (const auto& [k, v] : human.ranks) total += std::llabs(static_cast<long long>(v) - judge.ranks.at(k));
  return total;
}

Rational perturbation_agreement(const std::vector<std::string>& px, const std::vector<std::string>& py,
                                bool x_preferred, const CompareFn& judge) {
  if (px.empty() || py.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "perturbation sets must be non-empty");
  }
  std::int64_t agree = 0;
  for (const auto& a : px) {
    for (const auto& b : py) {
      const auto p = judge(a, b);
      if ((x_preferred && p == Preference::kFirst) || (!x_preferred && p == Preference::kSecond)) ++agree;
    }
  }
  return Rational(agree, static_cast<std::int64_t>(px.size() * py.size()));
}

AgreementReport perturbation_rank_stability(const ScoreFn& judge, const std::string& source,
                                            const std::vector<std::string>& members) {
  if (members.empty()) throw Error(ErrorCode::kInvalidArgument, "perturbation set is empty");
  const auto base = judge(source);
  if (!base) throw Error(ErrorCode::kPrecondition, "judge failed on the source artifact " + source);
  std::vector<Tuple> sample;
  std::vector<Rational> values;
  std::vector<Tuple> flagged;
  for (const auto& m : members) {
    const auto s = judge(m);
    if (!s) flagged.push_back({source, m});
    sample.push_back({source, m});
    values.emplace_back(s && *s == *base ? 1 : 0);
  }
  auto r = finish("perturbation-rank-stability", std::move(sample), std::move(values));
  r.flagged = std::move(flagged);
  return r;
}

AgreementReport transitivity_score(const CompareFn& judge, const std::vector<Tuple>& triples) {
  std::vector<Tuple> scored;
  std::vector<Rational> values;
  std::vector<Tuple> excluded;
  for (const auto& t : triples) {
    if (t.size() != 3) throw Error(ErrorCode::kInvalidArgument, "transitivity needs triples");
    // weak[i][j]: t[i] is at least as good as t[j]; strict[i][j]: strictly better.
    bool weak[3][3] = {};
    bool strict[3][3] = {};
    bool failed = false;
    for (int i = 0; i < 3 && !failed; ++i) {
      for (int j = i + 1; j < 3; ++j) {
        const auto p = judge(t[static_cast<std::size_t>(i)], t[static_cast<std::size_t>(j)]);
        if (p == Preference::kFailed) {
          failed = true;
          break;
        }
        weak[i][j] = p != Preference::kSecond;
        weak[j][i] = p != Preference::kFirst;
        strict[i][j] = p == Preference::kFirst;
        strict[j][i] = p == Preference::kSecond;
      }
    }
    if (failed) {
      excluded.push_back(t);
      continue;
    }
    bool cycle = false;
    const int orders[2][3] = {{0, 1, 2}, {0, 2, 1}};
    for (const auto& o : orders) {
      const int a = o[0], b = o[1], c = o[2];
      if (weak[a][b] && weak[b][c] && weak[c][a] && (strict[a][b] || strict[b][c] || strict[c][a])) cycle = true;
    }
    scored.push_back(t);
    values.emplace_back(cycle ? 0 : 1);
  }
  auto r = finish("transitivity", std::move(scored), std::move(values));
  r.excluded = std::move(excluded);
  return r;
}

AgreementReport transitivity_score(const CompareFn& judge, const SamplePlan& plan) {
  if (plan.arity != 3) throw Error(ErrorCode::kInvalidArgument, "transitivity sampling needs arity 3");
  return transitivity_score(judge, sample_tuples(plan));
}

AgreementReport symmetry_score(const VerdictFn& judge, const std::vector<OrderedPair>& pairs) {
  std::vector<Tuple> sample;
  std::vector<Rational> values;
  std::vector<Tuple> flagged;
  for (const auto& [a, b] : pairs) {
    const auto ab = judge(a, b);
    const auto ba = judge(b, a);
    if (!ab || !ba) flagged.push_back({a, b});
    sample.push_back({a, b});
    values.emplace_back(ab && ba && *ab == *ba ? 1 : 0);
  }
  auto r = finish("symmetry", std::move(sample), std::move(values));
  r.flagged = std::move(flagged);
  return r;
}

AgreementReport two_judge_agreement(const VerdictFn& first, const VerdictFn& second,
                                    const std::vector<OrderedPair>& pairs) {
  std::vector<Tuple> sample;
  std::vector<Rational> values;
  std::vector<Tuple> flagged;
  for (const auto& [a, b] : pairs) {
    const auto x = first(a, b);
    const auto y = second(a, b);
    if (!x || !y) flagged.push_back({a, b});
    sample.push_back({a, b});
    values.emplace_back(x && y && *x == *y ? 1 : 0);
  }
  auto r = finish("two-judge-agreement", std::move(sample), std::move(values));
  r.flagged = std::move(flagged);
  return r;
}

AgreementReport equality_transitivity(const VerdictFn& judge, const std::vector<Tuple>& triples) {
  std::vector<Tuple> scored;
  std::vector<Rational> values;
  std::vector<Tuple> excluded;
  for (const auto& t : triples) {
    if (t.size() != 3) throw Error(ErrorCode::kInvalidArgument, "equality transitivity needs triples");
    const auto ab = judge(t[0], t[1]);
    const auto bc = judge(t[1], t[2]);
    const auto ac = judge(t[0], t[2]);
    if (!ab || !bc || !ac) {
      excluded.push_back(t);
      continue;
    }
    const int equal = int{*ab} + int{*bc} + int{*ac};
    scored.push_back(t);
    values.emplace_back(equal == 2 ? 0 : 1);  // two equalities force the third
  }
  auto r = finish("equality-transitivity", std::move(scored), std::move(values));
  r.excluded = std::move(excluded);
  return r;
}

AgreementReport rank_vs_pairwise_consistency(const ScoreFn& rank, const CompareFn& compare,
                                             const SamplePlan& plan) {
  std::map<std::string, int> scores;
  std::vector<Tuple> unscored;
  for (const auto& id : plan.population) {
    if (auto s = rank(id)) {
      scores.emplace(id, *s);
    } else {
      unscored.push_back({id});
    }
  }
  std::vector<Tuple> eligible;
  for (auto& t : all_tuples(plan.population, 2)) {
    auto a = scores.find(t[0]);
    auto b = scores.find(t[1]);
    if (a != scores.end() && b != scores.end() && a->second != b->second) eligible.push_back(std::move(t));
  }
  if (eligible.empty()) {
    throw Error(ErrorCode::kNoEligiblePairs, "no pair has distinct judged ranks");
  }
  const auto n = std::min(plan.n, eligible.size());
  auto sample = sample_from(std::move(eligible), n, plan.rng_seed);
  std::vector<Rational> values;
  std::vector<Tuple> flagged;
  for (const auto& p : sample) {
    const auto pref = compare(p[0], p[1]);
    if (pref == Preference::kFailed) flagged.push_back(p);
    const bool first_higher = scores.at(p[0]) > scores.at(p[1]);
    values.emplace_back((first_higher && pref == Preference::kFirst) ||
                                (!first_higher && pref == Preference::kSecond)
                            ? 1
                            : 0);
  }
  auto r = finish("rank-vs-pairwise", std::move(sample), std::move(values));
  r.flagged = std::move(flagged);
  r.excluded = std::move(unscored);
  return r;
}

SelectionScore judge_selection_score(const VerdictFn& judge, const std::vector<LabeledPair>& pairs) {
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "claim dataset has no pairs");
  SelectionScore s;
  s.pairs = pairs.size();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto v = judge(pairs[i].a, pairs[i].b);
    if (!v) ++s.failed;
    if (v && *v == pairs[i].label) {
      ++s.raw_sum;
    } else {
      s.wrong.push_back(i);
    }
  }
  s.normalized = Rational(s.raw_sum, static_cast<std::int64_t>(s.pairs));
  return s;
}

SelectionResult select_best_judge(const std::map<std::string, VerdictFn>& judges,
                                  const std::vector<LabeledPair>& pairs) {
  if (judges.empty()) throw Error(ErrorCode::kInvalidArgument, "no candidate judges");
  SelectionResult out;
  std::optional<Rational> best;
  // std::map iterates names ascending, so strict > keeps the first on ties.
  for (const auto& [name, fn] : judges) {
    auto score = judge_selection_score(fn, pairs);
    if (!best || score.normalized > *best) {
      best = score.normalized;
      out.best = name;
    }
    out.scores.emplace(name, std::move(score));
  }
  return out;
}

Rational weighted_error(const ErrorProfile& profile) {
  std::set<std::string> ck, wk;
  for (const auto& [k, v] : profile.counts) {
    if (v < 0) throw Error(ErrorCode::kInvalidArgument, fmt::format("negative count for error type '{}'", k));
    ck.insert(k);
  }
  for (const auto& [k, w] : profile.weights) {
    if (w <= Rational(0)) throw Error(ErrorCode::kInvalidArgument, fmt::format("weight for '{}' must be positive", k));
    wk.insert(k);
  }
  if (ck != wk) throw Error(ErrorCode::kMismatch, "counts and weights cover different error types");
  Rational total;
  for (const auto& [k, v] : profile.counts) total += profile.weights.at(k) * Rational(v);
  return total;
}

Rational weighted_jaccard(const std::vector<std::int64_t>& counts, const std::vector<std::int64_t>& ref_counts) {
  if (counts.size() != ref_counts.size()) {
    throw Error(ErrorCode::kMismatch, "count vectors have different lengths");
  }
  std::int64_t lo = 0, hi = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0 || ref_counts[i] < 0) throw Error(ErrorCode::kInvalidArgument, "counts must be non-negative");
    lo += std::min(counts[i], ref_counts[i]);
    hi += std::max(counts[i], ref_counts[i]);
  }
  if (hi == 0) throw Error(ErrorCode::kInvalidArgument, "weighted Jaccard is undefined for two all-zero profiles");
  return Rational(lo, hi);
}

Rational weighted_jaccard(const std::map<std::string, std::int64_t>& counts,
                          const std::map<std::string, std::int64_t>& ref_counts) {
  std::vector<std::int64_t> a, b;
  for (const auto& [k, v] : counts) {
    auto it = ref_counts.find(k);
    if (it == ref_counts.end()) throw Error(ErrorCode::kMismatch, "error type '" + k + "' missing from reference");
    a.push_back(v);
    b.push_back(it->second);
  }
  if (counts.size() != ref_counts.size()) throw Error(ErrorCode::kMismatch, "profiles cover different error types");
  return weighted_jaccard(a, b);
}

Rational weighted_jaccard_distance(const std::vector<std::int64_t>& counts,
                                   const std::vector<std::int64_t>& ref_counts) {
  return Rational(1) - weighted_jaccard(counts, ref_counts);
}

CompareFn compare_with(Judge& judge, const ArtifactRepository& repo, const Artifact* reference) {
  if (judge.config().task != JudgeTask::kComparePair) {
    throw Error(ErrorCode::kInvalidArgument, "judge '" + judge.config().name + "' is not a compare-pair judge");
  }
  return [&judge, &repo, reference](const std::string& a, const std::string& b) {
    const auto v = judge.judge_pair(repo.get(a), repo.get(b), reference);
    if (v.failed()) return Preference::kFailed;
    const auto slot = preferred_slot(judge.config(), v);
    if (!slot) return Preference::kTie;
    return *slot == 0 ? Preference::kFirst : Preference::kSecond;
  };
}

ScoreFn score_with(Judge& judge, const ArtifactRepository& repo) {
  return [&judge, &repo](const std::string& id) -> std::optional<int> {
    const auto v = judge.judge_rank(repo.get(id));
    return v.score;
  };
}

VerdictFn verdict_with(Judge& judge, const ArtifactRepository& repo) {
  return [&judge, &repo](const std::string& a, const std::string& b) -> std::optional<bool> {
    return judge.judge_pair(repo.get(a), repo.get(b)).boolean_verdict;
  };
}

}  // namespace forge
