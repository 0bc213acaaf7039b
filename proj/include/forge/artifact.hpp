#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "forge/store.hpp"

namespace forge {

struct Lineage {
  std::string idea_id;
  std::string path;  // kinds walked so far, e.g. "description>cobol"
  std::vector<std::uint32_t> edge_ids;
  std::vector<std::string> labels;
  std::vector<std::string> providers;
  std::optional<std::string> parent;
  std::string derivation;  // elaboration, generation, perturbation:<kind>, composition

  friend bool operator==(const Lineage&, const Lineage&) = default;
};

struct Artifact {
  std::string id;  // artifact_id(kind, body)
  std::string kind;
  std::string body;
  Lineage lineage;
  std::string generation_key;  // cache key of the step that produced it
  std::string created_at;      // filled from the store; not hashed
};

std::string artifact_id(std::string_view kind, std::string_view body);
Artifact make_artifact(std::string kind, std::string body, Lineage lineage,
                       std::string generation_key = {});

nlohmann::json to_json(const Artifact& a);
Artifact artifact_from_json(const nlohmann::json& j);

// In-memory index over the artifact records of a Store. Thread-safe.
class ArtifactRepository {
 public:
  explicit ArtifactRepository(Store& store);

  // Persists (idempotently) and indexes; returns the artifact as stored.
  Artifact put(Artifact artifact);

  std::optional<Artifact> find(const std::string& artifact_id) const;
  Artifact get(const std::string& artifact_id) const;  // throws kNotFound
  std::optional<Artifact> by_generation_key(const std::string& key) const;

  // The artifact followed by its parents, nearest first.
  std::vector<Artifact> ancestry(const std::string& artifact_id) const;

  std::vector<Artifact> all() const;
  Store& store() { return store_; }

 private:
  void index_locked(Artifact a);

  Store& store_;
  mutable std::mutex mu_;
  std::vector<Artifact> items_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::size_t> by_key_;
};

}  // namespace forge
