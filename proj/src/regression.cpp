#include <algorithm>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "forge/claims.hpp"
#include "forge/error.hpp"
#include "forge/hash.hpp"
#include "forge/store.hpp"

namespace forge {

bool RegressionRecord::degraded() const {
  return std::any_of(deltas.begin(), deltas.end(), [](const ClaimDelta& d) { return d.degraded; });
}

nlohmann::json to_json(const RegressionRecord& r) {
  nlohmann::json results = nlohmann::json::array();
  for (const auto& res : r.results) results.push_back(to_json(res));
  nlohmann::json deltas = nlohmann::json::array();
  for (const auto& d : r.deltas) {
    deltas.push_back({{"claim_id", d.claim_id},
                      {"baseline", d.baseline},
                      {"current", d.current},
                      {"delta", d.delta},
                      {"degraded", d.degraded}});
  }
  nlohmann::json j{{"kind", "regression"},
                   {"run_id", r.run_id},
                   {"corpus_fingerprint", r.corpus_fingerprint},
                   {"results", results},
                   {"judge_fingerprints", r.judge_fingerprints},
                   {"deltas", deltas},
                   {"tolerance", r.tolerance}};
  j["baseline_run_id"] = r.baseline_run_id ? nlohmann::json(*r.baseline_run_id) : nlohmann::json(nullptr);
  return j;
}

RegressionRecord regression_from_json(const nlohmann::json& j) {
  RegressionRecord r;
  r.run_id = j.value("run_id", std::string());
  r.corpus_fingerprint = j.at("corpus_fingerprint").get<std::string>();
  for (const auto& res : j.at("results")) r.results.push_back(claim_result_from_json(res));
  r.judge_fingerprints = j.value("judge_fingerprints", std::map<std::string, std::string>{});
  if (j.contains("baseline_run_id") && !j.at("baseline_run_id").is_null()) {
    r.baseline_run_id = j.at("baseline_run_id").get<std::string>();
  }
  for (const auto& d : j.value("deltas", nlohmann::json::array())) {
    r.deltas.push_back(ClaimDelta{d.at("claim_id").get<std::string>(), d.at("baseline").get<Rational>(),
                                  d.at("current").get<Rational>(), d.at("delta").get<Rational>(),
                                  d.at("degraded").get<bool>()});
  }
  r.tolerance = j.value("tolerance", kDefaultDegradationTolerance);
  return r;
}

RegressionRecord run_regression(const std::vector<ClaimSpec>& claims, ClaimContext& context,
                                const std::optional<RegressionRecord>& baseline, Rational tolerance) {
  if (claims.empty()) throw Error(ErrorCode::kInvalidArgument, "regression needs at least one claim");
  if (tolerance < Rational(0)) throw Error(ErrorCode::kInvalidArgument, "tolerance must be non-negative");

  for (const auto& claim : claims) {
    if (!claim.is_test_claim()) continue;
    if (!context.pipeline) throw Error(ErrorCode::kPrecondition, "test claim " + claim.id + " needs a pipeline");
    const auto& graph = context.pipeline->graph();
    const auto report = graph.validate_plan(claim_loop_path(claim, graph), PlanPurpose::kTest);
    if (!report.valid) {
      throw Error(ErrorCode::kPrecondition, fmt::format("test claim {}: {}", claim.id, report.diagnostic));
    }
  }

  std::map<std::string, const ClaimResult*> previous;
  if (baseline) {
    std::set<std::string> mine, theirs;
    for (const auto& c : claims) mine.insert(c.id);
    for (const auto& r : baseline->results) {
      theirs.insert(r.claim_id);
      previous[r.claim_id] = &r;
    }
    if (mine != theirs) {
      throw Error(ErrorCode::kMismatch, "baseline " + baseline->run_id + " covers a different claim set");
    }
  }

  RegressionRecord record;
  record.tolerance = tolerance;
  record.corpus_fingerprint = context.corpus ? context.corpus->fingerprint() : std::string();
  for (const auto& claim : claims) {
    record.results.push_back(evaluate_claim(claim, context));
    const auto& judge = context.judges.at(claim.judge);
    record.judge_fingerprints[claim.judge] = judge->fingerprint();
  }
  if (baseline) {
    record.baseline_run_id = baseline->run_id;
    for (const auto& res : record.results) {
      ClaimDelta d;
      d.claim_id = res.claim_id;
      d.baseline = previous.at(res.claim_id)->accuracy;
      d.current = res.accuracy;
      d.delta = d.current - d.baseline;
      d.degraded = d.delta < -tolerance;
      record.deltas.push_back(std::move(d));
    }
  }

  auto payload = to_json(record);
  payload.erase("run_id");
  record.run_id = sha256_hex(canonical_json(payload));
  if (context.pipeline) {
    auto& store = context.pipeline->repository().store();
    const auto id = store.put(RecordType::kReport, to_json(record));
    record.created_at = store.get(id).created_at;
  }
  spdlog::info("regression {}: {} claims{}", record.run_id.substr(0, 12), record.results.size(),
               record.degraded() ? ", degraded" : "");
  return record;
}

std::string format_table(const RegressionRecord& r) {
  std::map<std::string, const ClaimDelta*> deltas;
  for (const auto& d : r.deltas) deltas[d.claim_id] = &d;
  std::ostringstream out;
  out << fmt::format("run {}  corpus {}\n", r.run_id.substr(0, 12), r.corpus_fingerprint.substr(0, 12));
  out << fmt::format("{:<36} {:>9} {:>8} {:>10} {:>10}\n", "claim", "accuracy", "passes", "delta", "status");
  for (const auto& res : r.results) {
    std::string delta = "-";
    std::string status = "ok";
    if (auto it = deltas.find(res.claim_id); it != deltas.end()) {
      delta = fmt::format("{:+.4f}", it->second->delta.to_double());
      if (it->second->degraded) status = "DEGRADED";
    }
    out << fmt::format("{:<36} {:>9.4f} {:>8} {:>10} {:>10}\n", res.claim_id, res.accuracy.to_double(),
                       fmt::format("{}/{}", res.passes, res.decided), delta, status);
  }
  return out.str();
}

FreshRegeneration regenerate_fresh(BenchmarkPipeline& pipeline, CorpusPlan plan, std::uint64_t rng_seed,
                                   const std::map<std::string, Judge*>& judges,
                                   const std::vector<std::string>& path_keys, const DatasetOptions& options) {
  if (judges.empty()) throw Error(ErrorCode::kInvalidArgument, "fresh regeneration needs at least one judge");
  plan.rng_seed = rng_seed;
  FreshRegeneration fresh;
  fresh.corpus = pipeline.generate_corpus(plan);
  auto& store = pipeline.repository().store();
  store.put(RecordType::kPlan, to_json(fresh.corpus));
  DatasetOptions opts = options;
  opts.false_pairs.rng_seed = rng_seed;
  fresh.dataset = build_claim_dataset(fresh.corpus, path_keys, opts);
  store.put(RecordType::kDataset, to_json(fresh.dataset));
  std::map<std::string, VerdictFn> fns;
  for (const auto& [name, judge] : judges) fns.emplace(name, verdict_with(*judge, pipeline.repository()));
  fresh.selection = select_best_judge(fns, fresh.dataset.pairs);
  return fresh;
}

ScoreHistogram score_histogram(Judge& judge, const ArtifactRepository& repo, const ClaimDataset& dataset,
                               bool label) {
  ScoreHistogram h;
  h.judge = judge.config().name;
  h.max_score = judge.config().scale.max_score();
  for (int s = 1; s <= h.max_score; ++s) h.counts[s] = 0;
  for (const auto& p : dataset.pairs) {
    if (p.label != label) continue;
    const auto v = judge.judge_pair(repo.get(p.a), repo.get(p.b));
    if (v.score) {
      ++h.counts[*v.score];
    } else {
      ++h.failed;
    }
  }
  return h;
}

std::string format_histograms(const std::vector<ScoreHistogram>& rows) {
  int width = 0;
  for (const auto& r : rows) width = std::max(width, r.max_score);
  std::ostringstream out;
  out << fmt::format("{:<20}", "judge");
  for (int s = 1; s <= width; ++s) out << fmt::format(" {:>5}", s);
  out << fmt::format(" {:>7}\n", "failed");
  for (const auto& r : rows) {
    out << fmt::format("{:<20}", r.judge);
    for (int s = 1; s <= width; ++s) {
      auto it = r.counts.find(s);
      out << fmt::format(" {:>5}", it == r.counts.end() ? std::string("-") : std::to_string(it->second));
    }
    out << fmt::format(" {:>7}\n", r.failed);
  }
  return out.str();
}

}  // namespace forge
