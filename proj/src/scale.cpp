#include "forge/scale.hpp"

#include <set>

#include <fmt/format.h>

#include "forge/error.hpp"

namespace forge {

const std::string& Scale::text(int score) const {
  if (!in_range(score)) {
    throw Error(ErrorCode::kOutOfRange, fmt::format("score {} outside scale '{}' (1..{})", score, name, max_score()));
  }
  return levels[static_cast<std::size_t>(score - 1)].description;
}

std::string Scale::render() const {
  std::string out;
  for (const auto& l : levels) out += fmt::format("{}. {}\n", l.score, l.description);
  return out;
}

Scale define_scale(std::string name, std::vector<ScaleLevel> levels, int usefulness_threshold) {
  if (name.empty()) throw Error(ErrorCode::kInvalidArgument, "scale name must be non-empty");
  if (levels.empty()) throw Error(ErrorCode::kInvalidArgument, "scale '" + name + "' has no levels");
  std::set<std::string> texts;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i].score != static_cast<int>(i) + 1) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("scale '{}': scores must be consecutive from 1 (position {} has {})", name,
                              i + 1, levels[i].score));
    }
    if (levels[i].description.empty()) {
      throw Error(ErrorCode::kInvalidArgument, fmt::format("scale '{}': level {} has no text", name, i + 1));
    }
    if (!texts.insert(levels[i].description).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("scale '{}': level {} repeats the text of an earlier level", name, i + 1));
    }
  }
  if (usefulness_threshold < 1 || usefulness_threshold > static_cast<int>(levels.size())) {
    throw Error(ErrorCode::kOutOfRange, fmt::format("scale '{}': threshold {} outside 1..{}", name,
                                                    usefulness_threshold, levels.size()));
  }
  return Scale{std::move(name), std::move(levels), usefulness_threshold};
}

Scale define_scale(std::string name, const std::vector<std::string>& texts, int usefulness_threshold) {
  std::vector<ScaleLevel> levels;
  for (std::size_t i = 0; i < texts.size(); ++i) levels.push_back({static_cast<int>(i) + 1, texts[i]});
  return define_scale(std::move(name), std::move(levels), usefulness_threshold);
}

Scale summarization_scale() {
  return define_scale("summarization",
                      {"An empty summary.",
                       "A completely irrelevant summary or a duplication of the input.",
                       "A hallucinated summary that is somewhat related.",
                       "The summary is poor and is not useful.",
                       "The summary is fair and is at the minimal level of usefulness.",
                       "The summary is good but is missing minor elements.",
                       "The summary is excellent and adheres to all of the requirements."},
                      5);
}

Scale explanation_scale() {
  return define_scale(
      "explanation",
      {"The explanation is empty or repeats the input.",
       "The explanation is overly abstract, brief and mostly consists of hallucinated content.",
       "The explanation is partial and incorrect, deemed unhelpful and unreliable by experienced "
       "programmers for understanding and maintaining the code.",
       "The explanation is incomplete and lacks critical details but provides enough information for "
       "an experienced programmer to grasp the general structure of the program.",
       "The explanation includes many useful details but contains some inaccuracies, falling short "
       "of enterprise-level standards.",
       "The explanation is missing only minor details, making it understandable and maintainable by "
       "a novice programmer.",
       "The explanation is thorough, detailed, and sufficient for a novice programmer to easily "
       "understand and maintain the code."},
      4);
}

Scale similarity_scale() {
  return define_scale(
      "similarity",
      {"The two texts describe completely different programs.",
       "The programs share only a broad topic; their purposes differ.",
       "The programs have a related purpose but differ in their main functionality.",
       "The programs share their main functionality but differ in some visible behavior.",
       "The programs are the same apart from minor behavioral details.",
       "The programs are the same; the texts differ only in emphasis or level of detail.",
       "The two texts describe the same program in every respect."},
      4);
}

Scale preference_scale() {
  return define_scale("preference",
                      {"The second is much better.", "The second is better.",
                       "The second is slightly better.", "Both are equally good.",
                       "The first is slightly better.", "The first is better.",
                       "The first is much better."},
                      5);
}

std::vector<std::string> builtin_scale_names() {
  return {"summarization", "explanation", "similarity", "preference"};
}

Scale builtin_scale(const std::string& name) {
  if (name == "summarization") return summarization_scale();
  if (name == "explanation") return explanation_scale();
  if (name == "similarity") return similarity_scale();
  if (name == "preference") return preference_scale();
  throw Error(ErrorCode::kNotFound, "no built-in scale named '" + name + "'");
}

nlohmann::json to_json(const Scale& s) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& l : s.levels) levels.push_back({{"score", l.score}, {"description", l.description}});
  return {{"name", s.name}, {"levels", levels}, {"usefulness_threshold", s.usefulness_threshold}};
}

Scale scale_from_json(const nlohmann::json& j) {
  try {
    std::vector<ScaleLevel> levels;
    for (const auto& l : j.at("levels")) {
      if (l.is_string()) {
        levels.push_back({static_cast<int>(levels.size()) + 1, l.get<std::string>()});
      } else {
        levels.push_back({l.at("score").get<int>(), l.at("description").get<std::string>()});
      }
    }
    return define_scale(j.at("name").get<std::string>(), std::move(levels),
                        j.at("usefulness_threshold").get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("scale document: ") + e.what());
  }
}

}  // namespace forge
