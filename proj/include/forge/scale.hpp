#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace forge {

struct ScaleLevel {
  int score = 0;
  std::string description;

  friend bool operator==(const ScaleLevel&, const ScaleLevel&) = default;
};

struct Scale {
  std::string name;
  std::vector<ScaleLevel> levels;  // scores 1..N in order
  int usefulness_threshold = 1;

  int max_score() const { return static_cast<int>(levels.size()); }
  bool in_range(int score) const { return score >= 1 && score <= max_score(); }
  const std::string& text(int score) const;  // throws kOutOfRange

  // "1. An empty summary.\n2. ..." as embedded in prompts.
  std::string render() const;

  friend bool operator==(const Scale&, const Scale&) = default;
};

// Validates: consecutive scores from 1, non-empty distinct texts,
// 1 <= threshold <= max. Throws kInvalidArgument / kOutOfRange.
Scale define_scale(std::string name, std::vector<ScaleLevel> levels, int usefulness_threshold);
// Convenience: level i+1 gets texts[i].
Scale define_scale(std::string name, const std::vector<std::string>& texts, int usefulness_threshold);

// Built-in scales. The similarity and preference level texts are our own;
// only their endpoints and the threshold of 4 are fixed by the method.
Scale summarization_scale();
Scale explanation_scale();
Scale similarity_scale();
// For compare-pair judges: 1 = second much better, mid = tie, max = first
// much better. Threshold is mid + 1, so boolean verdict true = first wins.
Scale preference_scale();

Scale builtin_scale(const std::string& name);  // throws kNotFound
std::vector<std::string> builtin_scale_names();

nlohmann::json to_json(const Scale& s);
Scale scale_from_json(const nlohmann::json& j);

}  // namespace forge
