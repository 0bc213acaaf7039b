#pragma once

// Scale-based LLM judges: prompt rendering, verdict parsing, and a verdict
// cache keyed by (judge fingerprint, input ids, slot order).

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/artifact.hpp"
#include "forge/provider.hpp"
#include "forge/scale.hpp"
#include "forge/store.hpp"

namespace forge {

enum class JudgeTask { kScoreSingle, kComparePair, kSimilarityPair };
std::string_view to_string(JudgeTask t);
JudgeTask parse_judge_task(std::string_view text);

struct FewShotExample {
  std::string input_digest;
  std::string ideal_output;

  friend bool operator==(const FewShotExample&, const FewShotExample&) = default;
};

struct JudgeConfig {
  std::string name;
  JudgeTask task = JudgeTask::kSimilarityPair;
  Scale scale;
  std::string provider;                 // ProviderRegistry key
  std::string prompt_template_id;       // built-in id; empty = default for the task
  std::string template_text;            // overrides the built-in template when set
  bool require_reasoning = false;
  std::vector<FewShotExample> few_shot_examples;

  std::size_t arity() const { return task == JudgeTask::kScoreSingle ? 1 : 2; }
  const std::string& effective_template() const;

  // Digest of everything that influences a verdict.
  std::string fingerprint() const;

  friend bool operator==(const JudgeConfig&, const JudgeConfig&) = default;
};

nlohmann::json to_json(const JudgeConfig& j);
JudgeConfig judge_config_from_json(const nlohmann::json& j);

// Built-in templates by id: "score-single", "compare-pair", "similarity-pair".
const std::string& builtin_template(const std::string& id);
std::string default_template_id(JudgeTask task);

enum class ParseStatus { kOk, kRepaired, kFailed };
std::string_view to_string(ParseStatus s);
ParseStatus parse_parse_status(std::string_view text);

struct Verdict {
  std::string judge;
  std::vector<std::string> inputs;  // artifact ids in slot order
  std::optional<int> score;
  std::optional<bool> boolean_verdict;
  std::optional<std::string> reasoning;
  std::string raw;
  ParseStatus parse_status = ParseStatus::kFailed;

  bool failed() const { return parse_status == ParseStatus::kFailed; }
};

nlohmann::json to_json(const Verdict& v);
Verdict verdict_from_json(const nlohmann::json& j);

// Context for judge_rank: a reference artifact with its human rank.
struct RankContext {
  Artifact reference;
  int reference_rank = 0;
};

struct PromptInputs {
  std::vector<const Artifact*> inputs;
  const Artifact* reference = nullptr;  // compare-pair reference description
  std::optional<RankContext> context;   // score-single calibration
};

// Deterministic in (judge, inputs). Throws kInvalidArgument on arity mismatch
// and kOutOfRange for a context rank outside the scale.
CompletionRequest render_prompt(const JudgeConfig& judge, const PromptInputs& in);
std::string format_instruction(const JudgeConfig& judge);

// Single-pass substitution of {slot} names; unknown slots are kept verbatim.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& slots);

// Never throws. Last "Score: <n>" in range -> ok; else a standalone in-range
// integer on the final non-empty line -> repaired; else failed.
Verdict parse_verdict(const JudgeConfig& judge, const std::string& raw);

// For compare-pair verdicts: 0 = first slot preferred, 1 = second, nullopt
// for a tie (the middle level) or a failed parse.
std::optional<int> preferred_slot(const JudgeConfig& judge, const Verdict& v);

// Verdict memo, optionally persisted as verdict records.
class VerdictCache {
 public:
  VerdictCache() = default;
  explicit VerdictCache(Store* store);

  std::optional<Verdict> find(const std::string& key) const;
  void put(const std::string& key, const std::string& judge_fingerprint, const Verdict& v);
  std::size_t size() const;
  std::size_t hits() const { return hits_; }

 private:
  Store* store_ = nullptr;
  mutable std::mutex mu_;
  std::map<std::string, Verdict> entries_;
  mutable std::size_t hits_ = 0;
};

struct CriteriaNote {
  std::string judge;
  std::string exemplar_id;
  int expected_score = 0;
  bool positive = true;  // expected_score >= threshold
  std::string criteria;
};

nlohmann::json to_json(const CriteriaNote& n);

class Judge {
 public:
  Judge(JudgeConfig config, Provider& provider, VerdictCache* cache = nullptr);

  const JudgeConfig& config() const { return config_; }
  const std::string& fingerprint() const { return fingerprint_; }

  // similarity-pair or compare-pair (reference optional for compare).
  Verdict judge_pair(const Artifact& a, const Artifact& b, const Artifact* reference = nullptr);
  // score-single.
  Verdict judge_rank(const Artifact& artifact, const std::optional<RankContext>& context = std::nullopt);

  // Asks the model why the exemplar merits expected_score; persists the note
  // as a judge record when a store is given.
  CriteriaNote elicit_criteria(const Artifact& exemplar, int expected_score, Store* store = nullptr);

  std::size_t provider_calls() const { return provider_calls_; }

 private:
  Verdict run(const PromptInputs& in, const std::string& cache_key);

  JudgeConfig config_;
  Provider& provider_;
  VerdictCache* cache_;
  std::string fingerprint_;
  std::size_t provider_calls_ = 0;
  std::mutex mu_;
};

}  // namespace forge
