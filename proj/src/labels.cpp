#include "forge/labels.hpp"

#include <sstream>

#include <fmt/format.h>

#include "forge/error.hpp"
#include "forge/hash.hpp"

namespace forge {

std::string_view to_string(LabelKind k) { return k == LabelKind::kRankSingle ? "rank-single" : "prefer-pair"; }

LabelKind parse_label_kind(std::string_view text) {
  if (text == "rank-single") return LabelKind::kRankSingle;
  if (text == "prefer-pair") return LabelKind::kPreferPair;
  throw Error(ErrorCode::kParse, fmt::format("unknown label kind '{}'", text));
}

nlohmann::json to_json(const LabelValue& v) {
  return std::visit([](const auto& x) { return nlohmann::json(x); }, v);
}

LabelValue label_value_from_json(const nlohmann::json& j) {
  if (j.is_number_integer()) return j.get<int>();
  if (j.is_string()) {
    // The CLI passes everything as text.
    const auto s = j.get<std::string>();
    if (!s.empty() && s.find_first_not_of("0123456789") == std::string::npos && s.size() < 9) return std::stoi(s);
    return s;
  }
  throw Error(ErrorCode::kInvalidArgument, "label must be an integer or \"first\"/\"second\"");
}

nlohmann::json to_json(const LabelTask& t) {
  nlohmann::json j{{"id", t.id},         {"batch_id", t.batch_id}, {"kind", to_string(t.kind)},
                   {"inputs", t.inputs}, {"scale", t.scale},       {"status", t.status()}};
  j["label"] = t.label ? to_json(*t.label) : nlohmann::json(nullptr);
  j["labeler"] = t.labeler;
  j["submitted_at"] = t.submitted_at;
  return j;
}

nlohmann::json to_json(const LabelBatch& b) {
  return {{"kind", "label-batch"},  {"batch_id", b.id},         {"label_kind", to_string(b.kind)},
          {"scale", b.scale},       {"task_ids", b.task_ids},   {"plan", to_json(b.plan)},
          {"judge_ranks", b.judge_ranks}, {"threshold", b.threshold}};
}

std::string BatchAgreement::status() const {
  if (compared == 0) return "no-data";
  return accepted ? "accept" : "reject";
}

nlohmann::json to_json(const BatchAgreement& a) {
  return {{"batch_id", a.batch_id}, {"total", a.total},        {"labeled", a.labeled},
          {"compared", a.compared}, {"agreeing", a.agreeing},  {"fraction", a.fraction},
          {"fraction_value", a.fraction.to_double()},          {"threshold", a.threshold},
          {"threshold_value", a.threshold.to_double()},        {"accepted", a.accepted},
          {"status", a.status()}};
}

LabelBook::LabelBook(Store& store) : store_(store) {}

Scale LabelBook::scale(const std::string& name) const {
  for (const auto& rec : store_.records(RecordType::kScale)) {
    const auto j = rec.json();
    if (j.value("name", std::string()) == name && j.contains("levels")) return scale_from_json(j);
  }
  return builtin_scale(name);
}

LabelBatch LabelBook::create_batch(const std::vector<std::string>& population, SamplePlan plan, LabelKind kind,
                                   const std::string& scale_name, std::map<std::string, int> judge_ranks,
                                   Rational threshold) {
  if (threshold < Rational(0) || threshold > Rational(1)) {
    throw Error(ErrorCode::kInvalidArgument, "acceptance threshold must lie in [0, 1]");
  }
  LabelBatch batch;
  batch.kind = kind;
  if (kind == LabelKind::kRankSingle) {
    try {
      batch.scale = scale(scale_name).name;
    } catch (const Error&) {
      throw Error(ErrorCode::kInvalidArgument, "unknown scale " + scale_name);
    }
  }
  plan.population = population;
  plan.arity = kind == LabelKind::kRankSingle ? 1 : 2;
  const auto tuples = sample_tuples(plan);
  batch.plan = std::move(plan);
  batch.judge_ranks = std::move(judge_ranks);
  batch.threshold = threshold;
  batch.id = digest_fields({"label-batch", canonical_json(to_json(batch.plan)), to_string(kind), batch.scale,
                            canonical_json(nlohmann::json(batch.judge_ranks)), batch.threshold.str()});

  std::lock_guard lock(mu_);
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    LabelTask t;
    t.batch_id = batch.id;
    t.kind = kind;
    t.inputs = tuples[i];
    t.scale = batch.scale;
    t.id = digest_fields({"label-task", batch.id, std::to_string(i)});
    nlohmann::json payload = to_json(t);
    payload.erase("label");
    payload.erase("labeler");
    payload.erase("submitted_at");
    payload.erase("status");
    payload["record"] = "label-task";
    store_.put(RecordType::kLabel, payload);
    batch.task_ids.push_back(t.id);
  }
  auto payload = to_json(batch);
  payload["record"] = "label-batch";
  store_.put(RecordType::kLabel, payload);
  return batch;
}

LabelBatch LabelBook::create_bootstrap_batch(const BootstrapBatch& bootstrap) {
  // Re-sampling with the recorded plan reproduces the same pairs.
  return create_batch(bootstrap.plan.population, bootstrap.plan, LabelKind::kPreferPair, {},
                      bootstrap.judge_ranks, bootstrap.threshold);
}

LabelBook::Snapshot LabelBook::snapshot() const {
  store_.reload();
  Snapshot s;
  for (const auto& rec : store_.records(RecordType::kLabel)) {
    const auto j = rec.json();
    const auto record = j.value("record", std::string());
    if (record == "label-task") {
      LabelTask t;
      t.id = j.at("id").get<std::string>();
      t.batch_id = j.at("batch_id").get<std::string>();
      t.kind = parse_label_kind(j.at("kind").get<std::string>());
      t.inputs = j.at("inputs").get<std::vector<std::string>>();
      t.scale = j.value("scale", std::string());
      if (!s.tasks.count(t.id)) s.order.push_back(t.id);
      s.tasks.emplace(t.id, std::move(t));
    } else if (record == "label-submission") {
      auto it = s.tasks.find(j.at("task_id").get<std::string>());
      if (it == s.tasks.end() || it->second.done) continue;  // first write wins
      it->second.done = true;
      it->second.label = label_value_from_json(j.at("label"));
      it->second.labeler = j.value("labeler", std::string());
      it->second.submitted_at = rec.created_at;
    } else if (record == "label-batch") {
      LabelBatch b;
      b.id = j.at("batch_id").get<std::string>();
      b.kind = parse_label_kind(j.at("label_kind").get<std::string>());
      b.scale = j.value("scale", std::string());
      b.task_ids = j.at("task_ids").get<std::vector<std::string>>();
      b.plan = sample_plan_from_json(j.at("plan"));
      b.judge_ranks = j.value("judge_ranks", std::map<std::string, int>{});
      b.threshold = j.at("threshold").get<Rational>();
      if (!s.batches.count(b.id)) s.batch_order.push_back(b.id);
      s.batches.emplace(b.id, std::move(b));
    }
  }
  return s;
}

LabelTask LabelBook::submit(const std::string& task_id, const LabelValue& label, const std::string& labeler) {
  std::lock_guard lock(mu_);
  auto s = snapshot();
  auto it = s.tasks.find(task_id);
  if (it == s.tasks.end()) throw Error(ErrorCode::kNotFound, "no label task " + task_id);
  auto& task = it->second;
  if (task.done) {
    throw Error(ErrorCode::kConflict,
                fmt::format("task {} was already labeled by '{}'", task_id, task.labeler));
  }
  if (task.kind == LabelKind::kRankSingle) {
    const int* rank = std::get_if<int>(&label);
    if (!rank) throw Error(ErrorCode::kInvalidArgument, "rank-single tasks take an integer label");
    const auto sc = scale(task.scale);
    if (!sc.in_range(*rank)) {
      throw Error(ErrorCode::kOutOfRange,
                  fmt::format("label {} outside scale {} (1..{})", *rank, sc.name, sc.max_score()));
    }
  } else {
    const auto* pref = std::get_if<std::string>(&label);
    if (!pref || (*pref != "first" && *pref != "second")) {
      throw Error(ErrorCode::kInvalidArgument, "prefer-pair tasks take \"first\" or \"second\"");
    }
  }
  const auto id = store_.put(RecordType::kLabel, {{"record", "label-submission"},
                                                  {"task_id", task_id},
                                                  {"label", to_json(label)},
                                                  {"labeler", labeler}});
  task.done = true;
  task.label = label;
  task.labeler = labeler;
  task.submitted_at = store_.get(id).created_at;
  return task;
}

std::vector<LabelTask> LabelBook::tasks(std::optional<std::string> status, std::optional<std::string> batch_id) const {
  std::lock_guard lock(mu_);
  const auto s = snapshot();
  std::vector<LabelTask> out;
  for (const auto& id : s.order) {
    const auto& t = s.tasks.at(id);
    if (status && t.status() != *status) continue;
    if (batch_id && t.batch_id != *batch_id) continue;
    out.push_back(t);
  }
  return out;
}

std::optional<LabelTask> LabelBook::find_task(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto s = snapshot();
  auto it = s.tasks.find(id);
  if (it == s.tasks.end()) return std::nullopt;
  return it->second;
}

std::optional<LabelBatch> LabelBook::find_batch(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto s = snapshot();
  auto it = s.batches.find(id);
  if (it == s.batches.end()) return std::nullopt;
  return it->second;
}

std::vector<LabelBatch> LabelBook::batches() const {
  std::lock_guard lock(mu_);
  auto s = snapshot();
  std::vector<LabelBatch> out;
  for (const auto& id : s.batch_order) out.push_back(s.batches.at(id));
  return out;
}

BatchAgreement LabelBook::agreement(const std::string& batch_id) const {
  std::lock_guard lock(mu_);
  const auto s = snapshot();
  auto bit = s.batches.find(batch_id);
  if (bit == s.batches.end()) throw Error(ErrorCode::kNotFound, "no label batch " + batch_id);
  const auto& batch = bit->second;
  BatchAgreement a;
  a.batch_id = batch_id;
  a.threshold = batch.threshold;
  a.total = batch.task_ids.size();

  std::vector<std::pair<std::string, int>> human_ranks;  // rank-single, in task order
  for (const auto& id : batch.task_ids) {
    const auto& t = s.tasks.at(id);
    if (!t.done) continue;
    ++a.labeled;
    if (t.kind == LabelKind::kPreferPair) {
      auto ra = batch.judge_ranks.find(t.inputs[0]);
      auto rb = batch.judge_ranks.find(t.inputs[1]);
      if (ra == batch.judge_ranks.end() || rb == batch.judge_ranks.end()) continue;
      ++a.compared;
      const bool first = std::get<std::string>(*t.label) == "first";
      if ((first && ra->second > rb->second) || (!first && rb->second > ra->second)) ++a.agreeing;
    } else {
      human_ranks.emplace_back(t.inputs[0], std::get<int>(*t.label));
    }
  }
  // Rank-single batches compare the pairwise order of labeled items.
  for (std::size_t i = 0; i < human_ranks.size(); ++i) {
    for (std::size_t j = i + 1; j < human_ranks.size(); ++j) {
      const auto& [x, hx] = human_ranks[i];
      const auto& [y, hy] = human_ranks[j];
      auto jx = batch.judge_ranks.find(x);
      auto jy = batch.judge_ranks.find(y);
      if (hx == hy || jx == batch.judge_ranks.end() || jy == batch.judge_ranks.end()) continue;
      ++a.compared;
      if ((hx > hy) == (jx->second > jy->second) && jx->second != jy->second) ++a.agreeing;
    }
  }
  a.fraction = a.compared == 0 ? Rational(0)
                               : Rational(static_cast<std::int64_t>(a.agreeing), static_cast<std::int64_t>(a.compared));
  a.accepted = a.compared > 0 && a.fraction >= a.threshold;
  return a;
}

nlohmann::json LabelBook::export_batch(const std::string& batch_id) const {
  const auto batch = find_batch(batch_id);
  if (!batch) throw Error(ErrorCode::kNotFound, "no label batch " + batch_id);
  nlohmann::json tasks_json = nlohmann::json::array();
  for (const auto& t : tasks(std::nullopt, batch_id)) tasks_json.push_back(to_json(t));
  return {{"batch", to_json(*batch)}, {"tasks", tasks_json}, {"agreement", to_json(agreement(batch_id))}};
}

std::string LabelBook::export_table(const std::string& batch_id) const {
  std::ostringstream out;
  out << "task_id\tkind\tinput_a\tinput_b\tstatus\tlabel\tlabeler\tsubmitted_at\n";
  for (const auto& t : tasks(std::nullopt, batch_id)) {
    const std::string label = t.label ? std::visit([](const auto& v) { return fmt::format("{}", v); }, *t.label) : "";
    out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", t.id, to_string(t.kind), t.inputs.at(0),
                       t.inputs.size() > 1 ? t.inputs[1] : "", t.status(), label, t.labeler, t.submitted_at);
  }
  return out.str();
}

}  // namespace forge
