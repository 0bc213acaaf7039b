#include "forge/artifact.hpp"

#include "forge/error.hpp"
#include "forge/hash.hpp"

namespace forge {

std::string artifact_id(std::string_view kind, std::string_view body) {
  return digest_fields({"artifact", kind, body});
}

Artifact make_artifact(std::string kind, std::string body, Lineage lineage,
                       std::string generation_key) {
  Artifact a;
  a.id = artifact_id(kind, body);
  a.kind = std::move(kind);
  a.body = std::move(body);
  a.lineage = std::move(lineage);
  a.generation_key = std::move(generation_key);
  return a;
}

nlohmann::json to_json(const Artifact& a) {
  nlohmann::json lineage = {{"idea_id", a.lineage.idea_id},
                            {"path", a.lineage.path},
                            {"edge_ids", a.lineage.edge_ids},
                            {"labels", a.lineage.labels},
                            {"providers", a.lineage.providers},
                            {"derivation", a.lineage.derivation},
                            {"parent", nullptr}};
  if (a.lineage.parent) lineage["parent"] = *a.lineage.parent;
  return {{"artifact_id", a.id},
          {"kind", a.kind},
          {"body", a.body},
          {"lineage", lineage},
          {"generation_key", a.generation_key}};
}

Artifact artifact_from_json(const nlohmann::json& j) {
  try {
    Artifact a;
    a.kind = j.at("kind").get<std::string>();
    a.body = j.at("body").get<std::string>();
    a.id = artifact_id(a.kind, a.body);
    if (j.contains("artifact_id") && j["artifact_id"].get<std::string>() != a.id) {
      throw Error(ErrorCode::kCorrupted, "artifact id does not match its body");
    }
    a.generation_key = j.value("generation_key", std::string{});
    const auto& l = j.at("lineage");
    a.lineage.idea_id = l.value("idea_id", std::string{});
    a.lineage.path = l.value("path", std::string{});
    a.lineage.edge_ids = l.value("edge_ids", std::vector<std::uint32_t>{});
    a.lineage.labels = l.value("labels", std::vector<std::string>{});
    a.lineage.providers = l.value("providers", std::vector<std::string>{});
    a.lineage.derivation = l.value("derivation", std::string{});
    if (l.contains("parent") && !l["parent"].is_null()) {
      a.lineage.parent = l["parent"].get<std::string>();
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("artifact record: ") + e.what());
  }
}

ArtifactRepository::ArtifactRepository(Store& store) : store_(store) {
  std::lock_guard lock(mu_);
  for (const auto& rec : store_.records(RecordType::kArtifact)) {
    Artifact a = artifact_from_json(rec.json());
    a.created_at = rec.created_at;
    index_locked(std::move(a));
  }
}

void ArtifactRepository::index_locked(Artifact a) {
  const std::size_t pos = items_.size();
  by_id_.try_emplace(a.id, pos);
  if (!a.generation_key.empty()) by_key_.try_emplace(a.generation_key, pos);
  items_.push_back(std::move(a));
}

Artifact ArtifactRepository::put(Artifact artifact) {
  artifact.id = artifact_id(artifact.kind, artifact.body);
  const std::string record = store_.put(RecordType::kArtifact, to_json(artifact));
  artifact.created_at = store_.get(record).created_at;
  std::lock_guard lock(mu_);
  const bool known_id = by_id_.count(artifact.id) > 0;
  const bool known_key = artifact.generation_key.empty() || by_key_.count(artifact.generation_key) > 0;
  if (!known_id || !known_key) index_locked(artifact);
  return artifact;
}

std::optional<Artifact> ArtifactRepository::find(const std::string& artifact_id) const {
  std::lock_guard lock(mu_);
  auto it = by_id_.find(artifact_id);
  if (it == by_id_.end()) return std::nullopt;
  return items_[it->second];
}

Artifact ArtifactRepository::get(const std::string& artifact_id) const {
  if (auto a = find(artifact_id)) return *a;
  throw Error(ErrorCode::kNotFound, "unknown artifact '" + artifact_id + "'");
}

std::optional<Artifact> ArtifactRepository::by_generation_key(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = by_key_.find(key);
  if (it == by_key_.end()) return std::nullopt;
  return items_[it->second];
}

std::vector<Artifact> ArtifactRepository::ancestry(const std::string& artifact_id) const {
  std::vector<Artifact> chain;
  std::optional<std::string> next = artifact_id;
  while (next) {
    auto a = find(*next);
    if (!a) throw Error(ErrorCode::kNotFound, "lineage references unknown artifact '" + *next + "'");
    for (const auto& seen : chain) {
      if (seen.id == a->id) throw Error(ErrorCode::kCorrupted, "lineage cycle at " + a->id);
    }
    next = a->lineage.parent;
    chain.push_back(std::move(*a));
  }
  return chain;
}

std::vector<Artifact> ArtifactRepository::all() const {
  std::lock_guard lock(mu_);
  return items_;
}

}  // namespace forge
