#include "forge/bootstrap.hpp"

#include <fmt/format.h>

#include "forge/error.hpp"

namespace forge {
namespace {

BootstrapReport decide(AgreementReport agreement, const BootstrapBatch& batch) {
  BootstrapReport r;
  r.labeled = static_cast<std::size_t>(agreement.denominator);
  r.threshold = batch.threshold;
  r.accepted = agreement.denominator > 0 && agreement.value >= batch.threshold;
  r.agreement = std::move(agreement);
  return r;
}

}  // namespace

ContextRankFn context_rank_with(Judge& judge) {
  return [&judge](const Artifact& artifact, const RankContext& context) -> std::optional<int> {
    return judge.judge_rank(artifact, context).score;
  };
}

nlohmann::json to_json(const BootstrapBatch& b) {
  return {{"kind", "bootstrap-batch"},
          {"new_ids", b.new_ids},
          {"prev_ids", b.prev_ids},
          {"judge_ranks", b.judge_ranks},
          {"failed", b.failed},
          {"sampled_pairs", b.sampled_pairs},
          {"threshold", b.threshold},
          {"plan", to_json(b.plan)}};
}

BootstrapBatch bootstrap_batch_from_json(const nlohmann::json& j) {
  BootstrapBatch b;
  b.new_ids = j.at("new_ids").get<std::vector<std::string>>();
  b.prev_ids = j.at("prev_ids").get<std::vector<std::string>>();
  b.judge_ranks = j.at("judge_ranks").get<std::map<std::string, int>>();
  b.failed = j.value("failed", std::vector<std::string>{});
  b.sampled_pairs = j.at("sampled_pairs").get<std::vector<Tuple>>();
  b.threshold = j.at("threshold").get<Rational>();
  b.plan = sample_plan_from_json(j.at("plan"));
  return b;
}

BootstrapBatch bootstrap_ranking(const std::vector<Artifact>& new_artifacts,
                                 const std::vector<Artifact>& prev_artifacts,
                                 const RankAssignment& prev_human, const ContextRankFn& judge_rank,
                                 SamplePlan plan, Rational threshold) {
  if (new_artifacts.size() != prev_artifacts.size()) {
    throw Error(ErrorCode::kMismatch, fmt::format("{} new artifacts but {} previous ones",
                                                  new_artifacts.size(), prev_artifacts.size()));
  }
  if (threshold < Rational(0) || threshold > Rational(1)) {
    throw Error(ErrorCode::kInvalidArgument, "acceptance threshold must lie in [0, 1]");
  }
  BootstrapBatch batch;
  batch.threshold = threshold;
  for (std::size_t i = 0; i < new_artifacts.size(); ++i) {
    const auto& prev = prev_artifacts[i];
    auto it = prev_human.ranks.find(prev.id);
    if (it == prev_human.ranks.end()) {
      throw Error(ErrorCode::kNotFound, "no human rank for previous artifact " + prev.id);
    }
    batch.new_ids.push_back(new_artifacts[i].id);
    batch.prev_ids.push_back(prev.id);
    const auto rank = judge_rank(new_artifacts[i], RankContext{prev, it->second});
    if (rank) {
      batch.judge_ranks[new_artifacts[i].id] = *rank;
    } else {
      batch.failed.push_back(new_artifacts[i].id);
    }
  }
  plan.population.clear();
  for (const auto& id : batch.new_ids) {
    if (batch.judge_ranks.count(id)) plan.population.push_back(id);
  }
  plan.arity = 2;
  batch.sampled_pairs = sample_tuples(plan);
  batch.plan = std::move(plan);
  return batch;
}

BootstrapReport evaluate_bootstrap(const BootstrapBatch& batch, const std::vector<Preference>& human) {
  if (human.size() != batch.sampled_pairs.size()) {
    throw Error(ErrorCode::kMismatch, fmt::format("{} labels for {} sampled pairs", human.size(),
                                                  batch.sampled_pairs.size()));
  }
  AgreementReport r;
  r.metric = "bootstrap-agreement";
  for (std::size_t i = 0; i < human.size(); ++i) {
    const auto& p = batch.sampled_pairs[i];
    if (human[i] == Preference::kFailed || human[i] == Preference::kTie) {
      r.excluded.push_back(p);
      continue;
    }
    const int a = batch.judge_ranks.at(p[0]);
    const int b = batch.judge_ranks.at(p[1]);
    const bool agree = (human[i] == Preference::kFirst && a > b) || (human[i] == Preference::kSecond && b > a);
    r.sample.push_back(p);
    r.per_tuple.emplace_back(agree ? 1 : 0);
    r.numerator += Rational(agree ? 1 : 0);
  }
  r.denominator = static_cast<std::int64_t>(r.sample.size());
  r.value = r.denominator == 0 ? Rational(0) : r.numerator / Rational(r.denominator);
  return decide(std::move(r), batch);
}

BootstrapReport evaluate_bootstrap(const BootstrapBatch& batch, const RankAssignment& human) {
  std::vector<Preference> prefs;
  for (const auto& p : batch.sampled_pairs) {
    auto a = human.ranks.find(p[0]);
    auto b = human.ranks.find(p[1]);
    if (a == human.ranks.end() || b == human.ranks.end()) {
      prefs.push_back(Preference::kFailed);
    } else if (a->second == b->second) {
      prefs.push_back(Preference::kTie);
    } else {
      prefs.push_back(a->second > b->second ? Preference::kFirst : Preference::kSecond);
    }
  }
  return evaluate_bootstrap(batch, prefs);
}

nlohmann::json to_json(const BootstrapReport& r) {
  return {{"kind", "bootstrap-report"},
          {"agreement", to_json(r.agreement)},
          {"threshold", r.threshold},
          {"accepted", r.accepted},
          {"labeled", r.labeled}};
}

}  // namespace forge
