#pragma once

// Text-generation backends behind one interface: a chat-completion HTTP
// client and a scripted mock. Both share the budget check and the retry
// loop implemented in Provider::complete.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/error.hpp"

namespace forge {

enum class ProviderKind { kHttpChat, kScriptedMock };

struct ProviderProfile {
  std::string name;
  ProviderKind kind = ProviderKind::kScriptedMock;
  std::string endpoint;  // http-chat only, e.g. "https://host/v1"
  std::string model_name = "mock";
  std::size_t max_tokens_per_call = 4096;
  std::size_t max_retries = 2;
  double temperature = 0.0;
  std::chrono::milliseconds request_timeout{60000};
  std::chrono::milliseconds backoff_base{250};
  bool jitter = false;

  void validate() const;
};

struct CompletionRequest {
  std::string system_text;
  std::string user_text;
  std::vector<std::string> stop_sequences;
  std::string tag;  // trace label, not part of the digest

  std::string digest() const;
};

struct TokenUsage {
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
};

struct CompletionResult {
  std::string text;
  TokenUsage token_usage;
  std::size_t attempts = 1;
  std::string provider;
};

struct BatchOutcome {
  std::optional<CompletionResult> result;
  std::optional<Error> error;

  bool ok() const { return result.has_value(); }
};

// Deterministic budget proxy: ceil(characters / 4).
std::size_t estimate_tokens(std::string_view text);
std::size_t estimate_tokens(const CompletionRequest& request);

// Thrown by transports for failures worth retrying (timeouts, 429, 5xx).
class TransientFailure : public Error {
 public:
  explicit TransientFailure(const std::string& message)
      : Error(ErrorCode::kProviderFailure, message) {}
};

class Provider {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit Provider(ProviderProfile profile);
  virtual ~Provider() = default;
  Provider(const Provider&) = delete;
  Provider& operator=(const Provider&) = delete;

  const ProviderProfile& profile() const { return profile_; }

  // Safe for concurrent callers.
  CompletionResult complete(const CompletionRequest& request);

  std::vector<BatchOutcome> complete_batch(std::span<const CompletionRequest> requests,
                                           std::size_t max_in_flight);

  // Number of transport attempts made so far (cache hits never reach here).
  std::uint64_t call_count() const { return calls_.load(); }

  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

  // Delay before retry number `retry` (1-based): base * 2^(retry-1), plus up
  // to 50% jitter when enabled.
  std::chrono::milliseconds backoff_delay(std::size_t retry) const;

 protected:
  struct Reply {
    std::string text;
    TokenUsage usage;
  };
  virtual Reply attempt(const CompletionRequest& request) = 0;

 private:
  ProviderProfile profile_;
  Sleeper sleeper_;
  std::atomic<std::uint64_t> calls_{0};
};

struct ScriptEntry {
  enum class Match { kDigest, kSubstring };
  Match match = Match::kSubstring;
  std::string pattern;
  std::string response;
  bool fail = false;  // permanent provider failure instead of a response
};

class ScriptedMockProvider : public Provider {
 public:
  // Returns a response or nullopt when the request is not covered.
  using Responder = std::function<std::optional<std::string>(const CompletionRequest&)>;

  explicit ScriptedMockProvider(ProviderProfile profile);

  // Matching order: exact digest entries, then the first substring entry
  // found in user_text (in listing order), then the responder.
  void script(std::vector<ScriptEntry> entries);
  void set_responder(Responder responder) { responder_ = std::move(responder); }
  // The next `count` attempts fail with a transient error.
  void inject_transient_failures(std::size_t count);

 protected:
  Reply attempt(const CompletionRequest& request) override;

 private:
  std::vector<ScriptEntry> entries_;
  Responder responder_;
  std::mutex mu_;
  std::size_t pending_failures_ = 0;
};

class HttpChatProvider : public Provider {
 public:
  explicit HttpChatProvider(ProviderProfile profile);

  // The JSON body sent for a request (exposed for wire-format tests).
  nlohmann::json request_body(const CompletionRequest& request) const;

 protected:
  Reply attempt(const CompletionRequest& request) override;
};

// Rejects live profiles with kInvalidArgument.
void script_mock(Provider& provider, std::vector<ScriptEntry> entries);

std::shared_ptr<Provider> make_provider(const ProviderProfile& profile);

using ProviderRegistry = std::map<std::string, std::shared_ptr<Provider>>;

// {"providers":[{"name":..,"kind":"scripted-mock"|"http-chat","endpoint":..,
//   "model":..,"max_tokens_per_call":..,"max_retries":..,"temperature":..,
//   "timeout_ms":..,"script":[{"substring"|"digest":..,"response":..}]}]}
ProviderProfile profile_from_json(const nlohmann::json& j);
ProviderRegistry load_providers(const nlohmann::json& config);

Provider& resolve_provider(const ProviderRegistry& registry, const std::string& name);

}  // namespace forge
