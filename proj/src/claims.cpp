#include "forge/claims.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "forge/compose.hpp"
#include "forge/error.hpp"

namespace forge {
namespace {

constexpr std::array<std::pair<ClaimTemplate, std::string_view>, 9> kTemplateNames{{
    {ClaimTemplate::kLoopEquality, "loop-equality"},
    {ClaimTemplate::kSameSeedSummaryEquality, "same-seed-summary-equality"},
    {ClaimTemplate::kCrossSeedSummaryInequality, "cross-seed-summary-inequality"},
    {ClaimTemplate::kClusterDistinction, "cluster-distinction"},
    {ClaimTemplate::kSummaryMatchesDescription, "summary-matches-description"},
    {ClaimTemplate::kEqualitySymmetry, "equality-symmetry"},
    {ClaimTemplate::kEqualityTransitivity, "equality-transitivity"},
    {ClaimTemplate::kCompositionPartwise, "composition-partwise"},
    {ClaimTemplate::kBetterReflection, "better-reflection"},
}};

std::string join_kinds(const std::vector<std::string>& kinds) {
  std::string out;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    if (i) out += '>';
    out += kinds[i];
  }
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

// Artifacts reachable from the corpus, plus whatever the pipeline stored.
class Lookup {
 public:
  explicit Lookup(const ClaimContext& ctx) : ctx_(ctx) {
    if (!ctx.corpus) return;
    for (const auto& e : ctx.corpus->entries) {
      by_id_.emplace(e.description.id, &e.description);
      for (const auto& [key, run] : e.runs) {
        for (const auto& a : run.artifacts) by_id_.emplace(a.id, &a);
      }
    }
  }

  Artifact get(const std::string& id) const {
    if (auto it = by_id_.find(id); it != by_id_.end()) return *it->second;
    if (ctx_.pipeline) return ctx_.pipeline->repository().get(id);
    throw Error(ErrorCode::kNotFound, "artifact not in corpus: " + id);
  }

 private:
  const ClaimContext& ctx_;
  std::unordered_map<std::string, const Artifact*> by_id_;
};

Judge& judge_for(const ClaimSpec& claim, const ClaimContext& ctx) {
  auto it = ctx.judges.find(claim.judge);
  if (it == ctx.judges.end() || !it->second) {
    throw Error(ErrorCode::kNotFound, fmt::format("claim {} names unknown judge '{}'", claim.id, claim.judge));
  }
  return *it->second;
}

const Corpus& corpus_of(const ClaimSpec& claim, const ClaimContext& ctx) {
  if (!ctx.corpus) throw Error(ErrorCode::kPrecondition, "claim " + claim.id + " needs a corpus");
  return *ctx.corpus;
}

BenchmarkPipeline& pipeline_of(const ClaimSpec& claim, const ClaimContext& ctx) {
  if (!ctx.pipeline) throw Error(ErrorCode::kPrecondition, "claim " + claim.id + " needs a pipeline");
  return *ctx.pipeline;
}

std::vector<std::string> path_keys_of(const ClaimSpec& claim) {
  std::vector<std::string> keys;
  for (const auto& a : claim.anchors) keys.push_back(join_kinds(a));
  if (keys.empty()) throw Error(ErrorCode::kInvalidArgument, "claim " + claim.id + " has no anchor paths");
  return keys;
}

ClaimCase equality_case(Judge& judge, const Artifact& a, const Artifact& b, bool expected) {
  ClaimCase c;
  c.inputs = {a.id, b.id};
  c.expected = expected;
  const Verdict v = judge.judge_pair(a, b);
  c.verdict = v.boolean_verdict;
  c.judge_failed = v.failed();
  c.passed = c.verdict.has_value() && *c.verdict == expected;
  c.reasoning = v.reasoning.value_or(v.raw);
  return c;
}

ClaimCase failed_case(std::vector<std::string> inputs, std::string reason) {
  ClaimCase c;
  c.inputs = std::move(inputs);
  c.reasoning = std::move(reason);
  return c;
}

void dataset_cases(const ClaimSpec& claim, ClaimContext& ctx, Judge& judge, const DatasetOptions& options,
                   const std::function<bool(const LabeledPair&)>& keep, std::vector<ClaimCase>& out) {
  const auto dataset = build_claim_dataset(corpus_of(claim, ctx), path_keys_of(claim), options);
  Lookup lookup(ctx);
  for (const auto& p : dataset.pairs) {
    if (!keep(p)) continue;
    out.push_back(equality_case(judge, lookup.get(p.a), lookup.get(p.b), p.label));
  }
}

std::optional<Artifact> start_artifact(const CorpusEntry& e, const std::string& kind) {
  if (e.description.kind == kind) return e.description;
  for (const auto& [key, run] : e.runs) {
    if (!run.complete()) continue;
    for (const auto& a : run.artifacts) {
      if (a.kind == kind) return a;
    }
  }
  return std::nullopt;
}

}  // namespace

GenPath claim_loop_path(const ClaimSpec& claim, const GenerationGraph& graph) {
  if (claim.anchors.size() != 1 || claim.anchors.front().size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "claim " + claim.id + " needs exactly one loop anchor");
  }
  const auto& names = claim.anchors.front();
  if (names.front() != names.back()) {
    throw Error(ErrorCode::kInvalidArgument, "loop of claim " + claim.id + " does not return to its start");
  }
  if (claim.loop_labels.empty()) return graph.path_by_names(names, EdgeLabel::kStrong);
  std::vector<EdgeLabel> labels;
  for (const auto& l : claim.loop_labels) labels.push_back(parse_label(l));
  return graph.path_by_names(names, labels);
}

namespace {

void loop_cases(const ClaimSpec& claim, ClaimContext& ctx, Judge& judge, std::vector<ClaimCase>& out) {
  auto& pipeline = pipeline_of(claim, ctx);
  const auto path = claim_loop_path(claim, pipeline.graph());
  const auto& kind = claim.anchors.front().front();
  const std::size_t limit = claim.params.value("max_entries", std::size_t{0});
  for (const auto& e : corpus_of(claim, ctx).entries) {
    if (limit && out.size() >= limit) break;
    const auto start = start_artifact(e, kind);
    if (!start) continue;
    const auto run = pipeline.run_path(*start, path);
    if (!run.complete()) {
      out.push_back(failed_case({start->id},
                                fmt::format("generation failed at hop {}: {}", run.failure->hop, run.failure->message)));
      continue;
    }
    out.push_back(equality_case(judge, *start, run.last(), true));
  }
}

void symmetry_cases(const ClaimSpec& claim, ClaimContext& ctx, Judge& judge, std::vector<ClaimCase>& out) {
  DatasetOptions options = ctx.dataset;
  options.include_symmetry = false;
  const auto dataset = build_claim_dataset(corpus_of(claim, ctx), path_keys_of(claim), options);
  Lookup lookup(ctx);
  for (const auto& p : dataset.pairs) {
    const auto a = lookup.get(p.a);
    const auto b = lookup.get(p.b);
    const Verdict ab = judge.judge_pair(a, b);
    const Verdict ba = judge.judge_pair(b, a);
    ClaimCase c;
    c.inputs = {a.id, b.id};
    c.expected = true;
    c.judge_failed = ab.failed() || ba.failed();
    if (ab.boolean_verdict && ba.boolean_verdict) c.verdict = *ab.boolean_verdict == *ba.boolean_verdict;
    c.passed = c.verdict.value_or(false);
    c.reasoning = fmt::format("forward={} reverse={}", ab.score ? std::to_string(*ab.score) : "failed",
                              ba.score ? std::to_string(*ba.score) : "failed");
    out.push_back(std::move(c));
  }
}

void transitivity_cases(const ClaimSpec& claim, ClaimContext& ctx, Judge& judge, std::vector<ClaimCase>& out) {
  DatasetOptions options = ctx.dataset;
  options.include_symmetry = false;
  const auto dataset = build_claim_dataset(corpus_of(claim, ctx), path_keys_of(claim), options);
  Lookup lookup(ctx);
  std::map<std::size_t, std::vector<std::string>> by_description;
  for (const auto& t : dataset.tuples) by_description[t.index].push_back(t.summary_id);
  for (const auto& [index, ids] : by_description) {
    if (ids.size() < 3) continue;
    const auto a = lookup.get(ids[0]);
    const auto b = lookup.get(ids[1]);
    const auto c3 = lookup.get(ids[2]);
    const Verdict ab = judge.judge_pair(a, b);
    const Verdict bc = judge.judge_pair(b, c3);
    const Verdict ac = judge.judge_pair(a, c3);
    ClaimCase c;
    c.inputs = {a.id, b.id, c3.id};
    c.expected = true;
    c.judge_failed = ab.failed() || bc.failed() || ac.failed();
    if (ab.boolean_verdict && bc.boolean_verdict && ac.boolean_verdict) {
      const int equal = *ab.boolean_verdict + *bc.boolean_verdict + *ac.boolean_verdict;
      c.verdict = equal != 2;
    }
    c.passed = c.verdict.value_or(false);
    out.push_back(std::move(c));
  }
}

void summary_description_cases(const ClaimSpec& claim, ClaimContext& ctx, Judge& judge,
                               std::vector<ClaimCase>& out) {
  const auto keys = path_keys_of(claim);
  for (const auto& e : corpus_of(claim, ctx).entries) {
    for (const auto& key : keys) {
      auto it = e.runs.find(key);
      if (it == e.runs.end() || !it->second.complete()) continue;
      out.push_back(equality_case(judge, it->second.last(), e.description, true));
    }
  }
}

// Splits a summary into per-unit sections keyed by the first line that
// mentions each unit name.
std::vector<std::optional<std::string>> split_sections(const std::string& text,
                                                       const std::vector<std::string>& names) {
  const std::string low = lower(text);
  std::vector<std::pair<std::size_t, std::size_t>> starts;  // (offset, unit)
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto at = low.find(lower(names[i]));
    if (at == std::string::npos) continue;
    const auto line = low.rfind('\n', at);
    starts.emplace_back(line == std::string::npos ? 0 : line + 1, i);
  }
  std::sort(starts.begin(), starts.end());
  std::vector<std::optional<std::string>> out(names.size());
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const auto begin = starts[k].first;
    const auto end = k + 1 < starts.size() ? starts[k + 1].first : text.size();
    out[starts[k].second] = text.substr(begin, end - begin);
  }
  return out;
}

void composition_cases(const ClaimSpec& claim, ClaimContext& ctx, Judge& judge, std::vector<ClaimCase>& out) {
  auto& pipeline = pipeline_of(claim, ctx);
  const auto keys = path_keys_of(claim);
  if (keys.size() != 2) {
    throw Error(ErrorCode::kInvalidArgument, "composition claim " + claim.id + " needs two anchor paths");
  }
  const std::size_t k = claim.params.value("units", std::size_t{3});
  const std::string summary_kind = claim.params.value("summary_kind", std::string("summary"));
  std::vector<const CorpusEntry*> entries;
  for (const auto& e : corpus_of(claim, ctx).entries) {
    if (entries.size() == k) break;
    bool ok = true;
    for (const auto& key : keys) {
      auto it = e.runs.find(key);
      ok = ok && it != e.runs.end() && it->second.complete() && it->second.artifacts.size() >= 3;
    }
    if (ok) entries.push_back(&e);
  }
  if (entries.size() < std::max<std::size_t>(k, 2)) {
    throw Error(ErrorCode::kInsufficientPopulation,
                fmt::format("composition claim {} needs {} entries with both paths, found {}", claim.id, k,
                            entries.size()));
  }

  auto& repo = pipeline.repository();
  std::vector<std::vector<std::optional<std::string>>> sections;
  std::vector<std::string> names;
  for (const auto& key : keys) {
    std::vector<Artifact> units;
    for (const auto* e : entries) {
      const auto& arts = e->runs.at(key).artifacts;
      units.push_back(arts[arts.size() - 2]);
    }
    auto [composed, record] = compose_large(units);
    composed = repo.put(composed);
    repo.store().put(RecordType::kPlan, nlohmann::json{{"kind", "composition"}, {"record", to_json(record)}});
    names.clear();
    for (const auto& r : record.ranges) names.push_back(r.unit_name);
    const auto path = pipeline.graph().path_by_names({composed.kind, summary_kind});
    const auto run = pipeline.run_path(composed, path);
    if (!run.complete()) {
      for (const auto& u : units) {
        out.push_back(failed_case({u.id}, "summarizing the composition failed: " + run.failure->message));
      }
      return;
    }
    sections.push_back(split_sections(run.last().body, names));
  }

  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& left = sections[0][i];
    const auto& right = sections[1][i];
    if (!left || !right) {
      out.push_back(failed_case({names[i]}, "summary has no section for unit " + names[i]));
      continue;
    }
    Lineage lineage;
    lineage.idea_id = entries[i]->idea.id;
    lineage.derivation = "composition-section";
    const auto a = repo.put(make_artifact(summary_kind, *left, lineage));
    const auto b = repo.put(make_artifact(summary_kind, *right, lineage));
    out.push_back(equality_case(judge, a, b, true));
  }
}

void reflection_cases(const ClaimSpec& claim, ClaimContext& ctx, Judge& judge, std::vector<ClaimCase>& out) {
  if (judge.config().task != JudgeTask::kComparePair) {
    throw Error(ErrorCode::kInvalidArgument, "better-reflection claims need a compare-pair judge");
  }
  const auto key = path_keys_of(claim).front();
  std::vector<const CorpusEntry*> entries;
  for (const auto& e : corpus_of(claim, ctx).entries) {
    auto it = e.runs.find(key);
    if (it != e.runs.end() && it->second.complete()) entries.push_back(&e);
  }
  if (entries.size() < 2) {
    throw Error(ErrorCode::kInsufficientPopulation, "better-reflection needs two descriptions with summaries");
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& mine = entries[i]->runs.at(key).last();
    const auto& other = entries[(i + 1) % entries.size()]->runs.at(key).last();
    const Verdict v = judge.judge_pair(mine, other, &entries[i]->description);
    ClaimCase c;
    c.inputs = {mine.id, other.id, entries[i]->description.id};
    c.expected = true;
    c.judge_failed = v.failed();
    const auto slot = preferred_slot(judge.config(), v);
    if (slot) {
      c.verdict = *slot == 0;
      c.passed = *c.verdict;
    } else if (!v.failed()) {
      c.inconclusive = true;
    }
    c.reasoning = v.reasoning.value_or(v.raw);
    out.push_back(std::move(c));
  }
}

}  // namespace

std::string_view to_string(ClaimTemplate t) {
  for (const auto& [value, name] : kTemplateNames) {
    if (value == t) return name;
  }
  return "unknown";
}

ClaimTemplate parse_claim_template(std::string_view text) {
  for (const auto& [value, name] : kTemplateNames) {
    if (name == text) return value;
  }
  throw Error(ErrorCode::kParse, fmt::format("unknown claim template '{}'", text));
}

nlohmann::json to_json(const ClaimSpec& c) {
  return {{"id", c.id},         {"template", to_string(c.tmpl)}, {"anchors", c.anchors},
          {"loop_labels", c.loop_labels}, {"judge", c.judge},  {"params", c.params}};
}

ClaimSpec claim_spec_from_json(const nlohmann::json& j) {
  ClaimSpec c;
  c.id = j.at("id").get<std::string>();
  c.tmpl = parse_claim_template(j.at("template").get<std::string>());
  c.anchors = j.value("anchors", std::vector<std::vector<std::string>>{});
  c.loop_labels = j.value("loop_labels", std::vector<std::string>{});
  c.judge = j.at("judge").get<std::string>();
  c.params = j.value("params", nlohmann::json::object());
  return c;
}

std::vector<const ClaimCase*> ClaimResult::failures() const {
  std::vector<const ClaimCase*> out;
  for (const auto& c : cases) {
    if (!c.passed && !c.inconclusive) out.push_back(&c);
  }
  return out;
}

nlohmann::json to_json(const ClaimResult& r) {
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& c : r.cases) {
    nlohmann::json j{{"inputs", c.inputs},
                     {"expected", c.expected},
                     {"passed", c.passed},
                     {"inconclusive", c.inconclusive},
                     {"judge_failed", c.judge_failed},
                     {"reasoning", c.reasoning}};
    j["verdict"] = c.verdict ? nlohmann::json(*c.verdict) : nlohmann::json(nullptr);
    cases.push_back(std::move(j));
  }
  return {{"claim_id", r.claim_id},
          {"cases", cases},
          {"accuracy", r.accuracy},
          {"passes", r.passes},
          {"decided", r.decided}};
}

ClaimResult claim_result_from_json(const nlohmann::json& j) {
  ClaimResult r;
  r.claim_id = j.at("claim_id").get<std::string>();
  for (const auto& cj : j.at("cases")) {
    ClaimCase c;
    c.inputs = cj.at("inputs").get<std::vector<std::string>>();
    c.expected = cj.value("expected", true);
    if (!cj.at("verdict").is_null()) c.verdict = cj.at("verdict").get<bool>();
    c.passed = cj.value("passed", false);
    c.inconclusive = cj.value("inconclusive", false);
    c.judge_failed = cj.value("judge_failed", false);
    c.reasoning = cj.value("reasoning", std::string());
    r.cases.push_back(std::move(c));
  }
  r.accuracy = j.at("accuracy").get<Rational>();
  r.passes = j.at("passes").get<std::size_t>();
  r.decided = j.at("decided").get<std::size_t>();
  return r;
}

ClaimResult evaluate_claim(const ClaimSpec& claim, ClaimContext& context) {
  Judge& judge = judge_for(claim, context);
  ClaimResult result;
  result.claim_id = claim.id;
  auto& cases = result.cases;

  switch (claim.tmpl) {
    case ClaimTemplate::kLoopEquality:
      loop_cases(claim, context, judge, cases);
      break;
    case ClaimTemplate::kSameSeedSummaryEquality:
      dataset_cases(claim, context, judge, context.dataset, [](const LabeledPair& p) { return p.label; }, cases);
      break;
    case ClaimTemplate::kCrossSeedSummaryInequality:
      dataset_cases(claim, context, judge, context.dataset, [](const LabeledPair& p) { return !p.label; }, cases);
      break;
    case ClaimTemplate::kClusterDistinction: {
      DatasetOptions options = context.dataset;
      options.cluster_entries_only = true;
      options.false_pairs.within_cluster_share = 1.0;
      dataset_cases(claim, context, judge, options, [](const LabeledPair&) { return true; }, cases);
      break;
    }
    case ClaimTemplate::kSummaryMatchesDescription:
      summary_description_cases(claim, context, judge, cases);
      break;
    case ClaimTemplate::kEqualitySymmetry:
      symmetry_cases(claim, context, judge, cases);
      break;
    case ClaimTemplate::kEqualityTransitivity:
      transitivity_cases(claim, context, judge, cases);
      break;
    case ClaimTemplate::kCompositionPartwise:
      composition_cases(claim, context, judge, cases);
      break;
    case ClaimTemplate::kBetterReflection:
      reflection_cases(claim, context, judge, cases);
      break;
  }

  for (const auto& c : cases) {
    if (c.inconclusive) continue;
    ++result.decided;
    if (c.passed) ++result.passes;
  }
  result.accuracy = result.decided == 0
                        ? Rational(0)
                        : Rational(static_cast<std::int64_t>(result.passes), static_cast<std::int64_t>(result.decided));
  spdlog::debug("claim {}: {}/{} passed", claim.id, result.passes, result.decided);
  return result;
}

}  // namespace forge
