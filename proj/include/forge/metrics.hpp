#pragma once

// Consistency metrics over judges: ordinal agreement with human ranks,
// perturbation stability, transitivity, symmetry, rank-vs-pairwise
// agreement, claim-based judge selection, weighted error and weighted
// Jaccard. All values are exact rationals.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/artifact.hpp"
#include "forge/judge.hpp"
#include "forge/rational.hpp"
#include "forge/sampling.hpp"

namespace forge {

enum class Preference { kFirst, kSecond, kTie, kFailed };

// Judges seen by the metrics, over artifact ids.
using CompareFn = std::function<Preference(const std::string& a, const std::string& b)>;
using ScoreFn = std::function<std::optional<int>(const std::string& id)>;  // nullopt = failure
using VerdictFn = std::function<std::optional<bool>(const std::string& a, const std::string& b)>;

struct RankAssignment {
  std::string subject;  // "human", a judge name or a model name
  std::map<std::string, int> ranks;
};

// Comparator induced by numeric scores: higher score preferred, equal = tie.
CompareFn compare_from_scores(std::map<std::string, int> scores);
CompareFn compare_from_ranks(const RankAssignment& ranks);

struct AgreementReport {
  std::string metric;
  Rational numerator;             // sum of per-tuple indicator values
  std::int64_t denominator = 0;   // number of tuples scored
  Rational value;                 // numerator / denominator
  std::vector<Tuple> sample;
  std::vector<Rational> per_tuple;
  std::vector<Tuple> excluded;    // dropped (e.g. judge failure inside a triple)
  std::vector<Tuple> flagged;     // scored 0 because of a judge failure
  std::string note;
};

nlohmann::json to_json(const AgreementReport& r);
std::string format_table(const AgreementReport& r);

// I(x,y) = 1 when the judge prefers the element humans ranked strictly
// higher. Human ties are never sampled. The exhaustive overload scores every
// non-tied pair. Throws kNoEligiblePairs / kInsufficientPopulation.
AgreementReport pairwise_order_agreement(const RankAssignment& human, const CompareFn& judge,
                                         const SamplePlan& plan);
AgreementReport pairwise_order_agreement(const RankAssignment& human, const CompareFn& judge);

// Generalized form: indicator(higher, lower) in [0,1] per non-tied pair,
// e.g. a perturbation_agreement fraction.
using PairIndicator = std::function<Rational(const std::string& higher, const std::string& lower)>;
AgreementReport pairwise_order_agreement(const RankAssignment& human, const PairIndicator& indicator,
                                         const SamplePlan& plan);

// Sum of |human - judge|; reported for contrast, never used for selection.
std::int64_t absolute_rank_distance(const RankAssignment& human, const RankAssignment& judge);

// Fraction of (a, b) in Px x Py where the judge's preference matches the
// human order (x_preferred: humans rank x above y).
Rational perturbation_agreement(const std::vector<std::string>& px, const std::vector<std::string>& py,
                                bool x_preferred, const CompareFn& judge);

// Fraction of members scored equal to the source. Member failures count as
// disagreement and are flagged; a failure on the source throws.
AgreementReport perturbation_rank_stability(const ScoreFn& judge, const std::string& source,
                                            const std::vector<std::string>& members);

// I_t = 1 iff the three pairwise results contain no preference cycle (ties
// are indifference; a cycle needs at least one strict preference). Triples
// with a judge failure are excluded.
AgreementReport transitivity_score(const CompareFn& judge, const SamplePlan& plan);
AgreementReport transitivity_score(const CompareFn& judge, const std::vector<Tuple>& triples);

using OrderedPair = std::pair<std::string, std::string>;

// Fraction of pairs with verdict(a,b) == verdict(b,a); failures flagged.
AgreementReport symmetry_score(const VerdictFn& judge, const std::vector<OrderedPair>& pairs);

// Fraction of pairs on which two judges return the same boolean verdict.
AgreementReport two_judge_agreement(const VerdictFn& first, const VerdictFn& second,
                                    const std::vector<OrderedPair>& pairs);

// Equality triples: a=b and b=c must imply a=c (for every rotation).
AgreementReport equality_transitivity(const VerdictFn& judge, const std::vector<Tuple>& triples);

// Over sampled pairs whose judged ranks differ, the fraction on which the
// comparison judge prefers the higher-ranked one. Samples min(n, eligible).
AgreementReport rank_vs_pairwise_consistency(const ScoreFn& rank, const CompareFn& compare,
                                             const SamplePlan& plan);

struct LabeledPair {
  std::string a;
  std::string b;
  bool label = false;
  bool within_cluster = false;

  friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

struct SelectionScore {
  Rational normalized;  // raw_sum / pairs
  std::int64_t raw_sum = 0;
  std::size_t pairs = 0;
  std::size_t failed = 0;               // parse failures, counted as 0
  std::vector<std::size_t> wrong;       // indices with indicator 0
};

SelectionScore judge_selection_score(const VerdictFn& judge, const std::vector<LabeledPair>& pairs);

struct SelectionResult {
  std::string best;
  std::map<std::string, SelectionScore> scores;
};

// Argmax of the normalized score; ties go to the smallest name.
SelectionResult select_best_judge(const std::map<std::string, VerdictFn>& judges,
                                  const std::vector<LabeledPair>& pairs);

struct ErrorProfile {
  std::string model;
  std::map<std::string, std::int64_t> counts;
  std::map<std::string, Rational> weights;
};

Rational weighted_error(const ErrorProfile& profile);

Rational weighted_jaccard(const std::map<std::string, std::int64_t>& counts,
                          const std::map<std::string, std::int64_t>& ref_counts);
Rational weighted_jaccard(const std::vector<std::int64_t>& counts, const std::vector<std::int64_t>& ref_counts);
Rational weighted_jaccard_distance(const std::vector<std::int64_t>& counts,
                                   const std::vector<std::int64_t>& ref_counts);

// Adapters from judge-core to the function types above.
CompareFn compare_with(Judge& judge, const ArtifactRepository& repo, const Artifact* reference = nullptr);
ScoreFn score_with(Judge& judge, const ArtifactRepository& repo);
VerdictFn verdict_with(Judge& judge, const ArtifactRepository& repo);

}  // namespace forge
