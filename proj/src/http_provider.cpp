#include <cstdlib>

#include <httplib.h>

#include "forge/provider.hpp"

namespace forge {
namespace {

struct Endpoint {
  std::string origin;     // scheme://host[:port]
  std::string base_path;  // "" or "/v1"
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "endpoint must include a scheme: '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.origin = url.substr(0, path_start);
  if (path_start != std::string::npos) ep.base_path = url.substr(path_start);
  while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
  return ep;
}

std::chrono::milliseconds effective_timeout(std::chrono::milliseconds configured) {
  if (const char* env = std::getenv("LAAJ_HTTP_TIMEOUT_MS"); env != nullptr && *env != '\0') {
    try {
      return std::chrono::milliseconds(std::stoll(env));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kInvalidArgument, "LAAJ_HTTP_TIMEOUT_MS is not an integer");
    }
  }
  return configured;
}

}  // namespace

HttpChatProvider::HttpChatProvider(ProviderProfile profile)
    : Provider([&] {
        profile.kind = ProviderKind::kHttpChat;
        return std::move(profile);
      }()) {
  split_endpoint(this->profile().endpoint);
}

nlohmann::json HttpChatProvider::request_body(const CompletionRequest& request) const {
  nlohmann::json messages = nlohmann::json::array();
  if (!request.system_text.empty()) {
    messages.push_back({{"role", "system"}, {"content", request.system_text}});
  }
  messages.push_back({{"role", "user"}, {"content", request.user_text}});
  nlohmann::json body = {{"model", profile().model_name},
                         {"messages", messages},
                         {"temperature", profile().temperature},
                         {"max_tokens", profile().max_tokens_per_call}};
  if (!request.stop_sequences.empty()) body["stop"] = request.stop_sequences;
  return body;
}

Provider::Reply HttpChatProvider::attempt(const CompletionRequest& request) {
  const Endpoint ep = split_endpoint(profile().endpoint);
  httplib::Client client(ep.origin);
  const auto timeout = effective_timeout(profile().request_timeout);
  const auto secs = static_cast<time_t>(timeout.count() / 1000);
  const auto usecs = static_cast<time_t>((timeout.count() % 1000) * 1000);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  if (const char* token = std::getenv("LAAJ_API_TOKEN"); token != nullptr && *token != '\0') {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  const auto res = client.Post(ep.base_path + "/chat/completions", headers,
                               request_body(request).dump(), "application/json");
  if (!res) {
    throw TransientFailure(profile().name + ": transport error: " + httplib::to_string(res.error()));
  }
  if (res->status == 429 || res->status >= 500) {
    throw TransientFailure(profile().name + ": HTTP " + std::to_string(res->status));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::kProviderFailure,
                profile().name + ": HTTP " + std::to_string(res->status) + ": " + res->body);
  }

  try {
    const auto doc = nlohmann::json::parse(res->body);
    Reply reply;
    reply.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
    if (doc.contains("usage")) {
      reply.usage.prompt_tokens = doc["usage"].value("prompt_tokens", std::size_t{0});
      reply.usage.completion_tokens = doc["usage"].value("completion_tokens", std::size_t{0});
    }
    return reply;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProviderFailure,
                profile().name + ": malformed completion response: " + e.what());
  }
}

}  // namespace forge
