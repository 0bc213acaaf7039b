#pragma once

// Bootstrap labeling for a new model's outputs. Step one ranks every new
// artifact with a judge calibrated by the aligned previous artifact and its
// human rank. Step two samples pairs for human review; once labels arrive the
// judge ranking is accepted iff human agreement reaches the threshold.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/artifact.hpp"
#include "forge/judge.hpp"
#include "forge/metrics.hpp"
#include "forge/rational.hpp"
#include "forge/sampling.hpp"

namespace forge {

using ContextRankFn = std::function<std::optional<int>(const Artifact& artifact, const RankContext& context)>;

ContextRankFn context_rank_with(Judge& judge);

inline const Rational kDefaultAcceptanceThreshold{9, 10};

struct BootstrapBatch {
  std::vector<std::string> new_ids;
  std::vector<std::string> prev_ids;
  std::map<std::string, int> judge_ranks;  // new artifact id -> judged rank
  std::vector<std::string> failed;         // new ids the judge could not rank
  std::vector<Tuple> sampled_pairs;        // pairs of new ids for human review
  Rational threshold = kDefaultAcceptanceThreshold;
  SamplePlan plan;
};

nlohmann::json to_json(const BootstrapBatch& b);
BootstrapBatch bootstrap_batch_from_json(const nlohmann::json& j);

// Step 1 and the sampling of step 2. new_artifacts[i] is aligned with
// prev_artifacts[i]. The plan's population is replaced by the ranked new ids.
BootstrapBatch bootstrap_ranking(const std::vector<Artifact>& new_artifacts,
                                 const std::vector<Artifact>& prev_artifacts,
                                 const RankAssignment& prev_human, const ContextRankFn& judge_rank,
                                 SamplePlan plan, Rational threshold = kDefaultAcceptanceThreshold);

struct BootstrapReport {
  AgreementReport agreement;
  Rational threshold;
  bool accepted = false;
  std::size_t labeled = 0;
};

nlohmann::json to_json(const BootstrapReport& r);

// Human preference per sampled pair (kFirst / kSecond; kTie is excluded,
// kFailed means "not labeled yet" and is skipped).
BootstrapReport evaluate_bootstrap(const BootstrapBatch& batch, const std::vector<Preference>& human);

// Human ranks for the new artifacts; pairs the humans tie are excluded.
BootstrapReport evaluate_bootstrap(const BootstrapBatch& batch, const RankAssignment& human);

}  // namespace forge
