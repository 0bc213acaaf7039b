#pragma once

// Human labeling tasks kept in the store as label records. Tasks are created
// in batches from a SamplePlan; a submission is a separate record and the
// first submission for a task wins.

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "forge/bootstrap.hpp"
#include "forge/rational.hpp"
#include "forge/sampling.hpp"
#include "forge/scale.hpp"
#include "forge/store.hpp"

namespace forge {

enum class LabelKind { kRankSingle, kPreferPair };

std::string_view to_string(LabelKind k);
LabelKind parse_label_kind(std::string_view text);

// rank-single carries an int on the scale; prefer-pair carries "first"/"second".
using LabelValue = std::variant<int, std::string>;

nlohmann::json to_json(const LabelValue& v);
LabelValue label_value_from_json(const nlohmann::json& j);

struct LabelTask {
  std::string id;
  std::string batch_id;
  LabelKind kind = LabelKind::kRankSingle;
  std::vector<std::string> inputs;
  std::string scale;  // rank-single only
  bool done = false;
  std::optional<LabelValue> label;
  std::string labeler;
  std::string submitted_at;

  std::string status() const { return done ? "done" : "open"; }
};

nlohmann::json to_json(const LabelTask& t);

struct LabelBatch {
  std::string id;
  LabelKind kind = LabelKind::kRankSingle;
  std::string scale;
  std::vector<std::string> task_ids;
  SamplePlan plan;
  std::map<std::string, int> judge_ranks;  // empty when no judge is attached
  Rational threshold = kDefaultAcceptanceThreshold;
};

nlohmann::json to_json(const LabelBatch& b);

struct BatchAgreement {
  std::string batch_id;
  std::size_t total = 0;
  std::size_t labeled = 0;
  std::size_t compared = 0;  // labeled comparisons with a defined judge order
  std::size_t agreeing = 0;
  Rational fraction;         // agreeing / compared
  Rational threshold;
  bool accepted = false;

  // "no-data", "accept" or "reject".
  std::string status() const;
};

nlohmann::json to_json(const BatchAgreement& a);

class LabelBook {
 public:
  explicit LabelBook(Store& store);

  // Throws kInsufficientPopulation via the sampler, kInvalidArgument for an
  // unknown scale on rank-single batches.
  LabelBatch create_batch(const std::vector<std::string>& population, SamplePlan plan, LabelKind kind,
                          const std::string& scale = "summarization",
                          std::map<std::string, int> judge_ranks = {},
                          Rational threshold = kDefaultAcceptanceThreshold);

  // Prefer-pair tasks over the pairs a bootstrap run sampled.
  LabelBatch create_bootstrap_batch(const BootstrapBatch& bootstrap);

  // Throws kNotFound, kConflict (already labeled), kOutOfRange (rank outside
  // the scale) or kInvalidArgument (wrong label shape for the kind).
  LabelTask submit(const std::string& task_id, const LabelValue& label, const std::string& labeler);

  std::vector<LabelTask> tasks(std::optional<std::string> status = std::nullopt,
                               std::optional<std::string> batch_id = std::nullopt) const;
  std::optional<LabelTask> find_task(const std::string& id) const;
  std::optional<LabelBatch> find_batch(const std::string& id) const;
  std::vector<LabelBatch> batches() const;

  BatchAgreement agreement(const std::string& batch_id) const;

  // Canonical records for the batch plus a flat tab-separated table.
  nlohmann::json export_batch(const std::string& batch_id) const;
  std::string export_table(const std::string& batch_id) const;

  // Scale by name: a stored scale record wins over the built-ins.
  Scale scale(const std::string& name) const;

 private:
  struct Snapshot {
    std::map<std::string, LabelTask> tasks;
    std::vector<std::string> order;
    std::map<std::string, LabelBatch> batches;
    std::vector<std::string> batch_order;
  };
  Snapshot snapshot() const;

  Store& store_;
  mutable std::mutex mu_;
};

}  // namespace forge
