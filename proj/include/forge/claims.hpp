#pragma once

// Correctness claims derived from the generation graph, the labeled claim
// datasets built from a corpus, and regression runs over both.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/judge.hpp"
#include "forge/metrics.hpp"
#include "forge/pipeline.hpp"
#include "forge/rational.hpp"

namespace forge {

// ---------------------------------------------------------------------------
// Claim datasets

struct ClaimTuple {
  std::size_t index = 0;         // description index within the dataset
  std::string description_id;
  std::string idea_id;
  std::string seed_id;
  bool cluster = false;
  std::string language;          // kind before the summary on the path
  std::string path_key;
  std::string summary_id;
};

enum class MissingPolicy {
  kSkipDescription,  // drop every pair of a description with any missing summary
  kSkipPairs,        // drop only the pairs that touch a missing summary
};

struct FalsePairStrategy {
  // False pairs per true pair (1 = balanced).
  std::size_t ratio = 1;
  // When set, this share of the false pairs is drawn within cluster seeds
  // and the rest across seeds; otherwise false pairs are drawn uniformly.
  std::optional<double> within_cluster_share;
  std::uint64_t rng_seed = 0;
};

struct DatasetOptions {
  bool include_symmetry = true;
  MissingPolicy missing = MissingPolicy::kSkipDescription;
  FalsePairStrategy false_pairs;
  bool cluster_entries_only = false;
};

struct MissingSummary {
  std::string idea_id;
  std::string path_key;
  std::string reason;
};

struct ClaimDataset {
  std::vector<ClaimTuple> tuples;
  std::vector<LabeledPair> pairs;
  bool symmetric = false;
  std::vector<MissingSummary> missing;
  std::vector<std::string> skipped_descriptions;

  std::size_t true_count() const;
  std::size_t false_count() const;
  std::size_t within_cluster_count() const;
  const ClaimTuple* tuple_for(const std::string& summary_id) const;
  std::string fingerprint() const;
};

nlohmann::json to_json(const ClaimDataset& d);
ClaimDataset claim_dataset_from_json(const nlohmann::json& j);

// True pairs: same-description summaries across languages (both orders with
// symmetry). False pairs: sampled across descriptions, 1:1 by default.
// Throws kInsufficientPopulation when not enough false pairs exist.
ClaimDataset build_claim_dataset(const Corpus& corpus, const std::vector<std::string>& path_keys,
                                 const DatasetOptions& options = {});

// ---------------------------------------------------------------------------
// Claims

enum class ClaimTemplate {
  kLoopEquality,
  kSameSeedSummaryEquality,
  kCrossSeedSummaryInequality,
  kClusterDistinction,
  kSummaryMatchesDescription,
  kEqualitySymmetry,
  kEqualityTransitivity,
  kCompositionPartwise,
  kBetterReflection,
};

std::string_view to_string(ClaimTemplate t);
ClaimTemplate parse_claim_template(std::string_view text);

struct ClaimSpec {
  std::string id;
  ClaimTemplate tmpl = ClaimTemplate::kSameSeedSummaryEquality;
  // Kind-name sequences; summary templates take path keys such as
  // "description>cobol>summary", LoopEquality takes one loop.
  std::vector<std::vector<std::string>> anchors;
  std::vector<std::string> loop_labels;  // per-hop labels for LoopEquality
  std::string judge;
  nlohmann::json params = nlohmann::json::object();

  // Anchored on a plan that must exercise a Tested edge.
  bool is_test_claim() const { return tmpl == ClaimTemplate::kLoopEquality; }
};

nlohmann::json to_json(const ClaimSpec& c);
ClaimSpec claim_spec_from_json(const nlohmann::json& j);

struct ClaimCase {
  std::vector<std::string> inputs;
  bool expected = true;
  std::optional<bool> verdict;
  bool passed = false;
  bool inconclusive = false;  // excluded from the accuracy denominator
  bool judge_failed = false;
  std::string reasoning;
};

struct ClaimResult {
  std::string claim_id;
  std::vector<ClaimCase> cases;
  Rational accuracy;
  std::size_t passes = 0;
  std::size_t decided = 0;  // cases minus inconclusive

  std::vector<const ClaimCase*> failures() const;
};

nlohmann::json to_json(const ClaimResult& r);
ClaimResult claim_result_from_json(const nlohmann::json& j);

struct ClaimContext {
  const Corpus* corpus = nullptr;
  BenchmarkPipeline* pipeline = nullptr;  // loops and compositions generate
  std::map<std::string, Judge*> judges;
  DatasetOptions dataset;
};

ClaimResult evaluate_claim(const ClaimSpec& claim, ClaimContext& context);

// The generation path a LoopEquality claim walks.
GenPath claim_loop_path(const ClaimSpec& claim, const GenerationGraph& graph);

// ---------------------------------------------------------------------------
// Regression

inline const Rational kDefaultDegradationTolerance{2, 100};

struct ClaimDelta {
  std::string claim_id;
  Rational baseline;
  Rational current;
  Rational delta;
  bool degraded = false;
};

struct RegressionRecord {
  std::string run_id;
  std::string corpus_fingerprint;
  std::vector<ClaimResult> results;
  std::map<std::string, std::string> judge_fingerprints;
  std::optional<std::string> baseline_run_id;
  std::vector<ClaimDelta> deltas;
  Rational tolerance = kDefaultDegradationTolerance;
  std::string created_at;  // from the store, not part of run_id

  bool degraded() const;
};

nlohmann::json to_json(const RegressionRecord& r);  // without created_at
RegressionRecord regression_from_json(const nlohmann::json& j);

// Throws kMismatch when the baseline covers a different claim set and
// kPrecondition when a test claim's plan has no Tested edge. Persists the
// record as a report when the context has a pipeline.
RegressionRecord run_regression(const std::vector<ClaimSpec>& claims, ClaimContext& context,
                                const std::optional<RegressionRecord>& baseline = std::nullopt,
                                Rational tolerance = kDefaultDegradationTolerance);

std::string format_table(const RegressionRecord& r);

// ---------------------------------------------------------------------------
// Fresh regeneration

struct FreshRegeneration {
  Corpus corpus;
  ClaimDataset dataset;
  SelectionResult selection;
};

// Regenerates the corpus under a new seed and re-scores every judge on the
// new claim dataset before it is used again.
FreshRegeneration regenerate_fresh(BenchmarkPipeline& pipeline, CorpusPlan plan, std::uint64_t rng_seed,
                                   const std::map<std::string, Judge*>& judges,
                                   const std::vector<std::string>& path_keys,
                                   const DatasetOptions& options = {});

// ---------------------------------------------------------------------------
// Score histograms (one row per judge, one column per scale level)

struct ScoreHistogram {
  std::string judge;
  int max_score = 7;
  std::map<int, std::size_t> counts;
  std::size_t failed = 0;
};

ScoreHistogram score_histogram(Judge& judge, const ArtifactRepository& repo, const ClaimDataset& dataset,
                               bool label = true);
std::string format_histograms(const std::vector<ScoreHistogram>& rows);

}  // namespace forge
