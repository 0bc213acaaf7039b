#include "forge/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "forge/error.hpp"
#include "forge/hash.hpp"

namespace forge {
namespace {

constexpr std::string_view kTypeNames[] = {"artifact", "verdict", "dataset", "report", "label",
                                           "scale",    "judge",   "graph",   "plan"};

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  return fmt::format("{:%Y-%m-%dT%H:%M:%S}Z", fmt::gmtime(std::chrono::system_clock::to_time_t(now)));
}

// flock-based advisory lock shared by every process writing to the store.
class FileLock {
 public:
  explicit FileLock(const std::filesystem::path& path)
      : fd_(::open(path.c_str(), O_CREAT | O_RDWR, 0644)) {
    if (fd_ < 0) throw Error(ErrorCode::kIo, "cannot open lock file " + path.string());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw Error(ErrorCode::kIo, "cannot lock " + path.string());
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_;
};

}  // namespace

std::string_view to_string(RecordType t) { return kTypeNames[static_cast<std::size_t>(t)]; }

RecordType parse_record_type(std::string_view text) {
  for (std::size_t i = 0; i < std::size(kTypeNames); ++i) {
    if (kTypeNames[i] == text) return static_cast<RecordType>(i);
  }
  throw Error(ErrorCode::kParse, "unknown record type '" + std::string(text) + "'");
}

std::string canonical_json(const nlohmann::json& value) {
  // nlohmann::json objects are std::map backed, so dump() is key-sorted.
  return value.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
}

Store::Store(std::filesystem::path dir)
    : dir_(std::move(dir)),
      records_path_(dir_ / "records.ndjson"),
      lock_path_(dir_ / "records.lock"),
      clock_(utc_now) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create store dir " + dir_.string() + ": " + ec.message());
  std::unique_lock lock(mu_);
  sync_locked();
}

std::filesystem::path Store::default_dir() {
  if (const char* env = std::getenv("LAAJ_STORE_DIR"); env != nullptr && *env != '\0') return env;
  return ".forge-store";
}

std::string Store::record_id(RecordType type, std::string_view canonical_payload) {
  return digest_fields({to_string(type), canonical_payload});
}

void Store::sync_locked() {
  std::ifstream in(records_path_, std::ios::binary);
  if (!in) return;
  in.seekg(static_cast<std::streamoff>(read_offset_));
  std::string line;
  while (true) {
    const auto line_start = in.tellg();
    if (!std::getline(in, line)) break;
    if (in.eof()) {
      // Unterminated tail: a writer may still be mid-append. Leave it for the
      // next sync; put() terminates it before appending.
      in.clear();
      in.seekg(line_start);
      break;
    }
    ++lines_read_;
    read_offset_ = static_cast<std::uintmax_t>(in.tellg());
    if (line.empty()) continue;

    auto quarantine = [&](std::string reason) {
      spdlog::warn("store {}: quarantined line {}: {}", dir_.string(), lines_read_, reason);
      quarantine_.push_back(QuarantineEntry{lines_read_, std::move(reason), line});
    };

    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    const auto t3 = t2 == std::string::npos ? t2 : line.find('\t', t2 + 1);
    if (t3 == std::string::npos) {
      quarantine("malformed line");
      continue;
    }
    StoreRecord rec;
    try {
      rec.type = parse_record_type(std::string_view(line).substr(0, t1));
    } catch (const Error&) {
      quarantine("unknown record type");
      continue;
    }
    rec.id = line.substr(t1 + 1, t2 - t1 - 1);
    rec.created_at = line.substr(t2 + 1, t3 - t2 - 1);
    rec.payload = line.substr(t3 + 1);
    if (record_id(rec.type, rec.payload) != rec.id) {
      quarantine("hash mismatch for id " + rec.id);
      continue;
    }
    if (index_.count(rec.id)) continue;
    index_.emplace(rec.id, records_.size());
    records_.push_back(std::move(rec));
  }
}

void Store::reload() {
  std::unique_lock lock(mu_);
  sync_locked();
}

std::string Store::put(RecordType type, const nlohmann::json& payload) {
  std::string canonical;
  try {
    canonical = canonical_json(payload);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("payload not canonicalizable: ") + e.what());
  }
  const std::string id = record_id(type, canonical);

  std::unique_lock lock(mu_);
  if (index_.count(id)) return id;

  FileLock file_lock(lock_path_);
  sync_locked();
  if (index_.count(id)) return id;

  StoreRecord rec{type, id, std::move(canonical), clock_()};
  {
    std::fstream io(records_path_, std::ios::in | std::ios::out | std::ios::binary | std::ios::app);
    if (!io) throw Error(ErrorCode::kIo, "cannot open " + records_path_.string());
    const auto size = std::filesystem::file_size(records_path_);
    std::string prefix;
    if (size > 0) {
      std::ifstream tail(records_path_, std::ios::binary);
      tail.seekg(static_cast<std::streamoff>(size - 1));
      if (tail.get() != '\n') prefix = "\n";
    }
    io << prefix << to_string(type) << '\t' << rec.id << '\t' << rec.created_at << '\t'
       << rec.payload << '\n';
    io.flush();
    if (!io) throw Error(ErrorCode::kIo, "write failed on " + records_path_.string());
  }
  // Our own line is now on disk; advance past it so it is not re-read.
  sync_locked();
  if (!index_.count(id)) {
    index_.emplace(id, records_.size());
    records_.push_back(std::move(rec));
  }
  return id;
}

bool Store::contains(const std::string& id) const {
  std::shared_lock lock(mu_);
  return index_.count(id) > 0;
}

std::optional<StoreRecord> Store::find(const std::string& id) const {
  std::shared_lock lock(mu_);
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return records_[it->second];
}

StoreRecord Store::get(const std::string& id) const {
  if (auto rec = find(id)) return *rec;
  throw Error(ErrorCode::kNotFound, "no record with id '" + id + "'");
}

std::vector<std::string> Store::list(RecordType type,
                                     const std::function<bool(const nlohmann::json&)>& filter) const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& r : records_) {
    if (r.type != type) continue;
    if (filter && !filter(nlohmann::json::parse(r.payload))) continue;
    out.push_back(r.id);
  }
  return out;
}

std::vector<StoreRecord> Store::records(RecordType type) const {
  std::shared_lock lock(mu_);
  std::vector<StoreRecord> out;
  for (const auto& r : records_) {
    if (r.type == type) out.push_back(r);
  }
  return out;
}

std::size_t Store::size() const {
  std::shared_lock lock(mu_);
  return records_.size();
}

std::set<std::string> Store::ids() const {
  std::shared_lock lock(mu_);
  std::set<std::string> out;
  for (const auto& r : records_) out.insert(r.id);
  return out;
}

std::vector<QuarantineEntry> Store::quarantined() const {
  std::shared_lock lock(mu_);
  return quarantine_;
}

}  // namespace forge
