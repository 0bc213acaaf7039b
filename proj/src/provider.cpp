#include "forge/provider.hpp"

#include <algorithm>
#include <random>
#include <thread>

#include <spdlog/spdlog.h>

#include "forge/hash.hpp"

namespace forge {

void ProviderProfile::validate() const {
  if (name.empty()) throw Error(ErrorCode::kInvalidArgument, "provider profile needs a name");
  if (max_tokens_per_call == 0) {
    throw Error(ErrorCode::kInvalidArgument, "max_tokens_per_call must be positive");
  }
  if (temperature < 0.0) throw Error(ErrorCode::kInvalidArgument, "temperature must be >= 0");
  if (kind == ProviderKind::kHttpChat && endpoint.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "http-chat profile '" + name + "' needs an endpoint");
  }
}

std::string CompletionRequest::digest() const {
  std::string stops;
  for (const auto& s : stop_sequences) {
    stops += std::to_string(s.size());
    stops += ':';
    stops += s;
  }
  return digest_fields({system_text, user_text, stops});
}

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

std::size_t estimate_tokens(const CompletionRequest& request) {
  return (request.system_text.size() + request.user_text.size() + 3) / 4;
}

Provider::Provider(ProviderProfile profile)
    : profile_(std::move(profile)),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  profile_.validate();
}

std::chrono::milliseconds Provider::backoff_delay(std::size_t retry) const {
  auto delay = profile_.backoff_base * (1LL << std::min<std::size_t>(retry - 1, 20));
  if (profile_.jitter && delay.count() > 0) {
    thread_local std::mt19937_64 rng{std::random_device{}()};
    delay += std::chrono::milliseconds(rng() % static_cast<std::uint64_t>(delay.count() / 2 + 1));
  }
  return delay;
}

CompletionResult Provider::complete(const CompletionRequest& request) {
  if (request.user_text.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "completion request has empty user text");
  }
  const auto estimated = estimate_tokens(request);
  if (estimated > profile_.max_tokens_per_call) {
    throw Error(ErrorCode::kBudgetExceeded,
                "request needs ~" + std::to_string(estimated) + " tokens, budget is " +
                    std::to_string(profile_.max_tokens_per_call));
  }

  const std::size_t max_attempts = profile_.max_retries + 1;
  for (std::size_t attempt_no = 1;; ++attempt_no) {
    ++calls_;
    try {
      Reply reply = attempt(request);
      CompletionResult result;
      result.text = std::move(reply.text);
      result.token_usage = reply.usage;
      if (result.token_usage.prompt_tokens == 0) result.token_usage.prompt_tokens = estimated;
      if (result.token_usage.completion_tokens == 0) {
        result.token_usage.completion_tokens = estimate_tokens(result.text);
      }
      result.attempts = attempt_no;
      result.provider = profile_.name;
      return result;
    } catch (const TransientFailure& e) {
      if (attempt_no >= max_attempts) {
        throw Error(ErrorCode::kExhaustedRetries,
                    profile_.name + ": gave up after " + std::to_string(attempt_no) +
                        " attempts: " + e.what());
      }
      const auto delay = backoff_delay(attempt_no);
      spdlog::debug("{}: attempt {} failed ({}), retrying in {}ms", profile_.name, attempt_no,
                    e.what(), delay.count());
      sleeper_(delay);
    }
  }
}

std::vector<BatchOutcome> Provider::complete_batch(std::span<const CompletionRequest> requests,
                                                   std::size_t max_in_flight) {
  if (max_in_flight < 1) throw Error(ErrorCode::kInvalidArgument, "max_in_flight must be >= 1");
  std::vector<BatchOutcome> out(requests.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        out[i].result = complete(requests[i]);
      } catch (const Error& e) {
        out[i].error = e;
      }
    }
  };
  const std::size_t workers = std::min(max_in_flight, requests.size());
  std::vector<std::thread> threads;
  for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(worker);
  if (workers > 0) worker();
  for (auto& t : threads) t.join();
  return out;
}

ScriptedMockProvider::ScriptedMockProvider(ProviderProfile profile)
    : Provider([&] {
        profile.kind = ProviderKind::kScriptedMock;
        return std::move(profile);
      }()) {}

void ScriptedMockProvider::script(std::vector<ScriptEntry> entries) {
  std::lock_guard lock(mu_);
  for (auto& e : entries) entries_.push_back(std::move(e));
}

void ScriptedMockProvider::inject_transient_failures(std::size_t count) {
  std::lock_guard lock(mu_);
  pending_failures_ += count;
}

Provider::Reply ScriptedMockProvider::attempt(const CompletionRequest& request) {
  {
    std::lock_guard lock(mu_);
    if (pending_failures_ > 0) {
      --pending_failures_;
      throw TransientFailure(profile().name + ": injected transient failure");
    }
  }
  auto answer = [&](const ScriptEntry& e) -> Reply {
    if (e.fail) {
      throw Error(ErrorCode::kProviderFailure, profile().name + ": scripted failure");
    }
    return Reply{e.response, {}};
  };
  const std::string digest = request.digest();
  for (const auto& e : entries_) {
    if (e.match == ScriptEntry::Match::kDigest && e.pattern == digest) return answer(e);
  }
  for (const auto& e : entries_) {
    if (e.match == ScriptEntry::Match::kSubstring &&
        request.user_text.find(e.pattern) != std::string::npos) {
      return answer(e);
    }
  }
  if (responder_) {
    if (auto text = responder_(request)) return Reply{std::move(*text), {}};
  }
  throw Error(ErrorCode::kMissingScript,
              profile().name + ": no script entry for request " + digest.substr(0, 12) +
                  (request.tag.empty() ? "" : " (" + request.tag + ")"));
}

void script_mock(Provider& provider, std::vector<ScriptEntry> entries) {
  auto* mock = dynamic_cast<ScriptedMockProvider*>(&provider);
  if (mock == nullptr) {
    throw Error(ErrorCode::kInvalidArgument,
                "provider '" + provider.profile().name + "' is live and cannot be scripted");
  }
  mock->script(std::move(entries));
}

std::shared_ptr<Provider> make_provider(const ProviderProfile& profile) {
  if (profile.kind == ProviderKind::kHttpChat) return std::make_shared<HttpChatProvider>(profile);
  return std::make_shared<ScriptedMockProvider>(profile);
}

ProviderProfile profile_from_json(const nlohmann::json& j) {
  ProviderProfile p;
  p.name = j.at("name").get<std::string>();
  const auto kind = j.value("kind", std::string("scripted-mock"));
  if (kind == "http-chat") {
    p.kind = ProviderKind::kHttpChat;
  } else if (kind == "scripted-mock") {
    p.kind = ProviderKind::kScriptedMock;
  } else {
    throw Error(ErrorCode::kParse, "unknown provider kind '" + kind + "'");
  }
  p.endpoint = j.value("endpoint", std::string{});
  p.model_name = j.value("model", p.model_name);
  p.max_tokens_per_call = j.value("max_tokens_per_call", p.max_tokens_per_call);
  p.max_retries = j.value("max_retries", p.max_retries);
  p.temperature = j.value("temperature", p.temperature);
  p.request_timeout = std::chrono::milliseconds(j.value("timeout_ms", p.request_timeout.count()));
  p.backoff_base = std::chrono::milliseconds(j.value("backoff_ms", p.backoff_base.count()));
  p.jitter = j.value("jitter", p.jitter);
  p.validate();
  return p;
}

ProviderRegistry load_providers(const nlohmann::json& config) {
  ProviderRegistry registry;
  for (const auto& entry : config.at("providers")) {
    auto profile = profile_from_json(entry);
    auto provider = make_provider(profile);
    if (entry.contains("script")) {
      std::vector<ScriptEntry> script;
      for (const auto& s : entry.at("script")) {
        ScriptEntry e;
        if (s.contains("digest")) {
          e.match = ScriptEntry::Match::kDigest;
          e.pattern = s.at("digest").get<std::string>();
        } else {
          e.pattern = s.at("substring").get<std::string>();
        }
        e.response = s.value("response", std::string{});
        e.fail = s.value("fail", false);
        script.push_back(std::move(e));
      }
      script_mock(*provider, std::move(script));
    }
    if (!registry.emplace(profile.name, std::move(provider)).second) {
      throw Error(ErrorCode::kDuplicate, "provider '" + profile.name + "' defined twice");
    }
  }
  return registry;
}

Provider& resolve_provider(const ProviderRegistry& registry, const std::string& name) {
  auto it = registry.find(name);
  if (it == registry.end() || !it->second) {
    throw Error(ErrorCode::kNotFound, "no provider bound to '" + name + "'");
  }
  return *it->second;
}

}  // namespace forge
