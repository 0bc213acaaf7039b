#pragma once

// Append-only, content-addressed record store.
//
// On disk: <dir>/records.ndjson, one record per line:
//   <record_type> TAB <id> TAB <created_at> TAB <canonical json payload>
// id = sha256 over (record_type, canonical payload). The timestamp is kept
// outside the hashed payload. Lines whose id does not match their payload are
// quarantined on read and never served.

#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace forge {

enum class RecordType { kArtifact, kVerdict, kDataset, kReport, kLabel, kScale, kJudge, kGraph, kPlan };

std::string_view to_string(RecordType t);
RecordType parse_record_type(std::string_view text);

struct StoreRecord {
  RecordType type = RecordType::kArtifact;
  std::string id;
  std::string payload;  // canonical bytes exactly as stored
  std::string created_at;

  nlohmann::json json() const { return nlohmann::json::parse(payload); }
};

struct QuarantineEntry {
  std::size_t line = 0;
  std::string reason;
  std::string raw;
};

// Sorted keys, no insignificant whitespace.
std::string canonical_json(const nlohmann::json& value);

class Store {
 public:
  using Clock = std::function<std::string()>;

  explicit Store(std::filesystem::path dir);

  // $LAAJ_STORE_DIR, else ".forge-store".
  static std::filesystem::path default_dir();

  // Idempotent: the same (type, payload) always maps to the same id and is
  // written once.
  std::string put(RecordType type, const nlohmann::json& payload);

  static std::string record_id(RecordType type, std::string_view canonical_payload);

  bool contains(const std::string& id) const;
  StoreRecord get(const std::string& id) const;  // throws kNotFound
  std::optional<StoreRecord> find(const std::string& id) const;

  // Ids in append order.
  std::vector<std::string> list(RecordType type,
                                const std::function<bool(const nlohmann::json&)>& filter = {}) const;
  std::vector<StoreRecord> records(RecordType type) const;

  std::size_t size() const;
  std::set<std::string> ids() const;
  std::vector<QuarantineEntry> quarantined() const;
  const std::filesystem::path& dir() const { return dir_; }

  // Picks up lines appended by other processes.
  void reload();

  void set_clock(Clock clock) { clock_ = std::move(clock); }

 private:
  void sync_locked();

  std::filesystem::path dir_;
  std::filesystem::path records_path_;
  std::filesystem::path lock_path_;
  Clock clock_;

  mutable std::shared_mutex mu_;
  std::vector<StoreRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<QuarantineEntry> quarantine_;
  std::uintmax_t read_offset_ = 0;
  std::size_t lines_read_ = 0;
};

}  // namespace forge
