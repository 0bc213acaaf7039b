#include "forge/judge.hpp"

#include <cctype>
#include <regex>

#include <fmt/format.h>

#include "forge/error.hpp"
#include "forge/hash.hpp"

namespace forge {
namespace {

constexpr std::string_view kTaskNames[] = {"score-single", "compare-pair", "similarity-pair"};
constexpr std::string_view kStatusNames[] = {"ok", "repaired", "failed"};

const std::map<std::string, std::string>& templates() {
  static const std::map<std::string, std::string> t = {
      {"score-single",
       "Rate the artifact below using this scale:\n"
       "{scale}\n"
       "{reference}"
       "Artifact:\n<<<\n{input_a}\n>>>\n\n"
       "{format_instruction}"},
      {"compare-pair",
       "Decide which of the two artifacts below is better. Use this scale:\n"
       "{scale}\n"
       "{reference}"
       "First:\n<<<\n{input_a}\n>>>\n\n"
       "Second:\n<<<\n{input_b}\n>>>\n\n"
       "{format_instruction}"},
      {"similarity-pair",
       "Rate how similar the two texts below are, using this scale:\n"
       "{scale}\n"
       "Treat the two as equal up to implementation details (identifiers, syntax, API names): "
       "ignore such differences when you determine equality.\n\n"
       "{reference}"
       "First:\n<<<\n{input_a}\n>>>\n\n"
       "Second:\n<<<\n{input_b}\n>>>\n\n"
       "{format_instruction}"},
  };
  return t;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<int> to_int(const std::string& digits) {
  if (digits.empty() || digits.size() > 6) return std::nullopt;
  return std::stoi(digits);
}

}  // namespace

std::string_view to_string(JudgeTask t) { return kTaskNames[static_cast<std::size_t>(t)]; }

JudgeTask parse_judge_task(std::string_view text) {
  for (std::size_t i = 0; i < std::size(kTaskNames); ++i) {
    if (kTaskNames[i] == text) return static_cast<JudgeTask>(i);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown judge task '" + std::string(text) + "'");
}

std::string_view to_string(ParseStatus s) { return kStatusNames[static_cast<std::size_t>(s)]; }

ParseStatus parse_parse_status(std::string_view text) {
  for (std::size_t i = 0; i < std::size(kStatusNames); ++i) {
    if (kStatusNames[i] == text) return static_cast<ParseStatus>(i);
  }
  throw Error(ErrorCode::kParse, "unknown parse status '" + std::string(text) + "'");
}

std::string default_template_id(JudgeTask task) { return std::string(to_string(task)); }

const std::string& builtin_template(const std::string& id) {
  auto it = templates().find(id);
  if (it == templates().end()) throw Error(ErrorCode::kNotFound, "no built-in template '" + id + "'");
  return it->second;
}

const std::string& JudgeConfig::effective_template() const {
  if (!template_text.empty()) return template_text;
  return builtin_template(prompt_template_id.empty() ? default_template_id(task) : prompt_template_id);
}

std::string JudgeConfig::fingerprint() const {
  nlohmann::json j = to_json(*this);
  j["template_text"] = effective_template();
  return sha256_hex(canonical_json(j));
}

nlohmann::json to_json(const JudgeConfig& c) {
  nlohmann::json shots = nlohmann::json::array();
  for (const auto& s : c.few_shot_examples) {
    shots.push_back({{"input_digest", s.input_digest}, {"ideal_output", s.ideal_output}});
  }
  return {{"name", c.name},
          {"task", to_string(c.task)},
          {"scale", to_json(c.scale)},
          {"provider", c.provider},
          {"prompt_template_id", c.prompt_template_id},
          {"template_text", c.template_text},
          {"require_reasoning", c.require_reasoning},
          {"few_shot_examples", shots}};
}

JudgeConfig judge_config_from_json(const nlohmann::json& j) {
  try {
    JudgeConfig c;
    c.name = j.at("name").get<std::string>();
    c.task = parse_judge_task(j.at("task").get<std::string>());
    const auto& s = j.at("scale");
    c.scale = s.is_string() ? builtin_scale(s.get<std::string>()) : scale_from_json(s);
    c.provider = j.value("provider", std::string{});
    c.prompt_template_id = j.value("prompt_template_id", std::string{});
    c.template_text = j.value("template_text", std::string{});
    c.require_reasoning = j.value("require_reasoning", false);
    for (const auto& x : j.value("few_shot_examples", nlohmann::json::array())) {
      c.few_shot_examples.push_back({x.at("input_digest").get<std::string>(), x.at("ideal_output").get<std::string>()});
    }
    if (c.name.empty()) throw Error(ErrorCode::kInvalidArgument, "judge name must be non-empty");
    (void)c.effective_template();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("judge document: ") + e.what());
  }
}

nlohmann::json to_json(const Verdict& v) {
  nlohmann::json j = {{"judge", v.judge},
                      {"inputs", v.inputs},
                      {"score", nullptr},
                      {"boolean_verdict", nullptr},
                      {"reasoning", nullptr},
                      {"raw", v.raw},
                      {"parse_status", to_string(v.parse_status)}};
  if (v.score) j["score"] = *v.score;
  if (v.boolean_verdict) j["boolean_verdict"] = *v.boolean_verdict;
  if (v.reasoning) j["reasoning"] = *v.reasoning;
  return j;
}

Verdict verdict_from_json(const nlohmann::json& j) {
  Verdict v;
  v.judge = j.at("judge").get<std::string>();
  v.inputs = j.at("inputs").get<std::vector<std::string>>();
  if (!j.at("score").is_null()) v.score = j["score"].get<int>();
  if (!j.at("boolean_verdict").is_null()) v.boolean_verdict = j["boolean_verdict"].get<bool>();
  if (!j.at("reasoning").is_null()) v.reasoning = j["reasoning"].get<std::string>();
  v.raw = j.at("raw").get<std::string>();
  v.parse_status = parse_parse_status(j.at("parse_status").get<std::string>());
  return v;
}

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& slots) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = slots.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != slots.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

std::string format_instruction(const JudgeConfig& judge) {
  const std::string line =
      fmt::format("\"Score: <n>\" where <n> is an integer from 1 to {}", judge.scale.max_score());
  if (judge.require_reasoning) {
    return "Explain your reasoning first, then finish with a final line of the form " + line + ".";
  }
  return "Answer with a final line of the form " + line + ".";
}

CompletionRequest render_prompt(const JudgeConfig& judge, const PromptInputs& in) {
  if (in.inputs.size() != judge.arity()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("judge '{}' ({}) takes {} input(s), got {}", judge.name, to_string(judge.task),
                            judge.arity(), in.inputs.size()));
  }
  for (const auto* a : in.inputs) {
    if (a == nullptr) throw Error(ErrorCode::kInvalidArgument, "null judge input");
  }
  std::string reference;
  if (in.context) {
    if (judge.task != JudgeTask::kScoreSingle) {
      throw Error(ErrorCode::kInvalidArgument, "rank context applies to score-single judges only");
    }
    if (!judge.scale.in_range(in.context->reference_rank)) {
      throw Error(ErrorCode::kOutOfRange, fmt::format("reference rank {} outside scale 1..{}",
                                                      in.context->reference_rank, judge.scale.max_score()));
    }
    reference = fmt::format(
        "For calibration, human reviewers rated the following reference artifact {} on this scale:\n"
        "<<<\n{}\n>>>\n\n",
        in.context->reference_rank, in.context->reference.body);
  } else if (in.reference != nullptr) {
    reference = fmt::format("Reference description:\n<<<\n{}\n>>>\n\n", in.reference->body);
  }

  std::map<std::string, std::string> slots = {
      {"scale", judge.scale.render()},
      {"input_a", in.inputs[0]->body},
      {"input_b", judge.arity() > 1 ? in.inputs[1]->body : std::string{}},
      {"reference", reference},
      {"format_instruction", format_instruction(judge)}};

  CompletionRequest r;
  r.system_text = "You are a careful, consistent evaluator of software artifacts.";
  if (!judge.few_shot_examples.empty()) {
    r.system_text += "\nExamples of ideal answers:";
    for (const auto& ex : judge.few_shot_examples) r.system_text += "\n---\n" + ex.ideal_output;
  }
  r.user_text = fill_template(judge.effective_template(), slots);
  r.tag = "judge:" + judge.name;
  return r;
}

Verdict parse_verdict(const JudgeConfig& judge, const std::string& raw) {
  Verdict v;
  v.judge = judge.name;
  v.raw = raw;
  auto finish = [&](int score, ParseStatus status, std::size_t score_line_start) {
    v.score = score;
    v.boolean_verdict = score >= judge.scale.usefulness_threshold;
    v.parse_status = status;
    if (judge.require_reasoning) {
      auto text = trim(std::string_view(raw).substr(0, score_line_start));
      if (!text.empty()) v.reasoning = std::move(text);
    }
    return v;
  };

  static const std::regex score_re(R"([*_]*score[*_]*\s*[:=]\s*[*_]*\s*(-?\d+))", std::regex::icase);
  std::optional<std::pair<int, std::size_t>> last;
  for (auto it = std::sregex_iterator(raw.begin(), raw.end(), score_re); it != std::sregex_iterator(); ++it) {
    auto n = to_int((*it)[1].str());
    if (!n) continue;
    const auto pos = static_cast<std::size_t>(it->position(0));
    const auto line_start = raw.rfind('\n', pos);
    last = std::make_pair(*n, line_start == std::string::npos ? 0 : line_start);
  }
  if (last && judge.scale.in_range(last->first)) return finish(last->first, ParseStatus::kOk, last->second);

  // Repair: a standalone in-range integer on the final non-empty line,
  // ignoring denominators such as "3/7" or "out of 7".
  const std::string body = trim(raw);
  if (body.empty()) return v;
  const auto nl = body.rfind('\n');
  const std::string line = nl == std::string::npos ? body : body.substr(nl + 1);
  const std::size_t line_start = raw.rfind(line);
  std::optional<int> candidate;
  for (std::size_t i = 0; i < line.size();) {
    if (!std::isdigit(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
    const bool left_ok = i == 0 || (!std::isalnum(static_cast<unsigned char>(line[i - 1])) &&
                                    line[i - 1] != '/' && line[i - 1] != '.');
    const bool right_ok = j == line.size() ||
                          (!std::isalnum(static_cast<unsigned char>(line[j])) && line[j] != '/' &&
                           !(line[j] == '.' && j + 1 < line.size() && std::isdigit(static_cast<unsigned char>(line[j + 1]))));
    const bool denominator = i >= 7 && line.compare(i - 7, 7, "out of ") == 0;
    if (left_ok && right_ok && !denominator) {
      auto n = to_int(line.substr(i, j - i));
      if (n && judge.scale.in_range(*n)) candidate = n;
    }
    i = j;
  }
  if (candidate) return finish(*candidate, ParseStatus::kRepaired, line_start);
  return v;
}

std::optional<int> preferred_slot(const JudgeConfig& judge, const Verdict& v) {
  if (!v.score) return std::nullopt;
  const int max = judge.scale.max_score();
  if (max % 2 == 1 && *v.score == (max + 1) / 2) return std::nullopt;
  return *v.score >= judge.scale.usefulness_threshold ? 0 : 1;
}

// ---------------------------------------------------------------------------

VerdictCache::VerdictCache(Store* store) : store_(store) {
  if (store_ == nullptr) return;
  for (const auto& rec : store_->records(RecordType::kVerdict)) {
    const auto j = rec.json();
    if (!j.contains("cache_key")) continue;
    entries_.emplace(j["cache_key"].get<std::string>(), verdict_from_json(j.at("verdict")));
  }
}

std::optional<Verdict> VerdictCache::find(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  ++hits_;
  return it->second;
}

void VerdictCache::put(const std::string& key, const std::string& judge_fingerprint, const Verdict& v) {
  std::lock_guard lock(mu_);
  entries_.insert_or_assign(key, v);
  if (store_ != nullptr) {
    store_->put(RecordType::kVerdict,
                {{"cache_key", key}, {"judge_fingerprint", judge_fingerprint}, {"verdict", to_json(v)}});
  }
}

std::size_t VerdictCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

nlohmann::json to_json(const CriteriaNote& n) {
  return {{"kind", "criteria-note"},
          {"judge", n.judge},
          {"exemplar_id", n.exemplar_id},
          {"expected_score", n.expected_score},
          {"polarity", n.positive ? "positive" : "negative"},
          {"criteria", n.criteria}};
}

// ---------------------------------------------------------------------------

Judge::Judge(JudgeConfig config, Provider& provider, VerdictCache* cache)
    : config_(std::move(config)), provider_(provider), cache_(cache) {
  (void)config_.effective_template();
  fingerprint_ = digest_fields({"judge", config_.fingerprint(), provider_.profile().name,
                                provider_.profile().model_name});
}

Verdict Judge::run(const PromptInputs& in, const std::string& cache_key) {
  if (cache_ != nullptr) {
    if (auto hit = cache_->find(cache_key)) return *hit;
  }
  CompletionRequest request = render_prompt(config_, in);
  const auto result = provider_.complete(request);
  {
    std::lock_guard lock(mu_);
    ++provider_calls_;
  }
  Verdict v = parse_verdict(config_, result.text);
  for (const auto* a : in.inputs) v.inputs.push_back(a->id);
  if (cache_ != nullptr) cache_->put(cache_key, fingerprint_, v);
  return v;
}

Verdict Judge::judge_pair(const Artifact& a, const Artifact& b, const Artifact* reference) {
  if (config_.task == JudgeTask::kScoreSingle) {
    throw Error(ErrorCode::kInvalidArgument, "judge '" + config_.name + "' is not a pair judge");
  }
  PromptInputs in{{&a, &b}, reference, std::nullopt};
  const std::string key =
      digest_fields({"verdict", fingerprint_, a.id, b.id, reference ? reference->id : std::string{}});
  return run(in, key);
}

Verdict Judge::judge_rank(const Artifact& artifact, const std::optional<RankContext>& context) {
  if (config_.task != JudgeTask::kScoreSingle) {
    throw Error(ErrorCode::kInvalidArgument, "judge '" + config_.name + "' is not a score-single judge");
  }
  PromptInputs in{{&artifact}, nullptr, context};
  const std::string key = digest_fields(
      {"verdict", fingerprint_, artifact.id, context ? context->reference.id : std::string{},
       context ? std::to_string(context->reference_rank) : std::string{}});
  // Validate the context before consulting the cache.
  (void)render_prompt(config_, in);
  return run(in, key);
}

CriteriaNote Judge::elicit_criteria(const Artifact& exemplar, int expected_score, Store* store) {
  if (exemplar.body.empty()) throw Error(ErrorCode::kInvalidArgument, "exemplar must be non-empty");
  if (!config_.scale.in_range(expected_score)) {
    throw Error(ErrorCode::kOutOfRange, fmt::format("expected score {} outside scale", expected_score));
  }
  CompletionRequest r;
  r.system_text = "You explain evaluation criteria.";
  r.user_text = fmt::format(
      "Here is a scale:\n{}\nThe artifact below merits a score of {} on this scale. Explain which "
      "criteria make it deserve exactly that score, as a short list.\n\n<<<\n{}\n>>>",
      config_.scale.render(), expected_score, exemplar.body);
  r.tag = "criteria:" + config_.name;
  const auto result = provider_.complete(r);
  {
    std::lock_guard lock(mu_);
    ++provider_calls_;
  }
  CriteriaNote note{config_.name, exemplar.id, expected_score,
                    expected_score >= config_.scale.usefulness_threshold, trim(result.text)};
  if (store != nullptr) store->put(RecordType::kJudge, to_json(note));
  return note;
}

}  // namespace forge
