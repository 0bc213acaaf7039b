#include "forge/server.hpp"

#include <httplib.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "forge/artifact.hpp"
#include "forge/error.hpp"

namespace forge {
namespace {

constexpr const char* kJson = "application/json; charset=utf-8";

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kConflict:
    case ErrorCode::kDuplicate:
      return 409;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kOutOfRange:
    case ErrorCode::kParse:
      return 400;
    default:
      return 500;
  }
}

void reply(httplib::Response& res, const nlohmann::json& body, int status = 200) {
  res.status = status;
  res.set_content(canonical_json(body), kJson);
}

void reply_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  reply(res, {{"error", to_string(code)}, {"message", message}}, status_for(code));
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      reply_error(res, e.code(), e.what());
    } catch (const nlohmann::json::exception& e) {
      reply_error(res, ErrorCode::kParse, e.what());
    }
  };
}

}  // namespace

ReviewServer::ReviewServer(Store& store, std::optional<std::filesystem::path> static_dir)
    : store_(store), labels_(store), http_(std::make_unique<httplib::Server>()) {
  routes();
  if (static_dir && !http_->set_mount_point("/", static_dir->string())) {
    throw Error(ErrorCode::kIo, "cannot serve static files from " + static_dir->string());
  }
}

ReviewServer::~ReviewServer() { stop(); }

void ReviewServer::routes() {
  http_->Get("/api/tasks", guarded([this](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::string> status, batch;
    if (req.has_param("status")) status = req.get_param_value("status");
    if (req.has_param("batch")) batch = req.get_param_value("batch");
    if (status && *status != "open" && *status != "done") {
      throw Error(ErrorCode::kInvalidArgument, "status must be open or done");
    }
    nlohmann::json out = nlohmann::json::array();
    for (const auto& t : labels_.tasks(status, batch)) out.push_back(to_json(t));
    reply(res, {{"tasks", out}});
  }));

  http_->Get("/api/tasks/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto id = req.path_params.at("id");
    const auto task = labels_.find_task(id);
    if (!task) throw Error(ErrorCode::kNotFound, "no label task " + id);
    auto out = to_json(*task);
    nlohmann::json artifacts = nlohmann::json::array();
    const ArtifactRepository repo(store_);
    for (const auto& input : task->inputs) {
      const auto a = repo.find(input);
      if (!a) {
        artifacts.push_back({{"id", input}, {"missing", true}});
        continue;
      }
      // Lineage stays hidden so labels remain blind.
      artifacts.push_back({{"id", a->id}, {"kind", a->kind}, {"body", a->body}});
    }
    out["artifacts"] = artifacts;
    if (task->kind == LabelKind::kRankSingle) out["scale_levels"] = to_json(labels_.scale(task->scale));
    reply(res, out);
  }));

  http_->Post("/api/tasks/:id/label", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto id = req.path_params.at("id");
    const auto body = nlohmann::json::parse(req.body);
    if (!body.contains("label")) throw Error(ErrorCode::kInvalidArgument, "missing label");
    const auto labeler = body.value("labeler", std::string("anonymous"));
    try {
      reply(res, to_json(labels_.submit(id, label_value_from_json(body.at("label")), labeler)));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kConflict) throw;
      nlohmann::json out{{"error", to_string(e.code())}, {"message", e.what()}};
      if (auto current = labels_.find_task(id)) out["task"] = to_json(*current);
      reply(res, out, 409);
    }
  }));

  http_->Get("/api/batches", guarded([this](const httplib::Request&, httplib::Response& res) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& b : labels_.batches()) out.push_back(to_json(b));
    reply(res, {{"batches", out}});
  }));

  http_->Get("/api/agreement", guarded([this](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("batch")) throw Error(ErrorCode::kInvalidArgument, "missing batch parameter");
    reply(res, to_json(labels_.agreement(req.get_param_value("batch"))));
  }));

  http_->Get("/api/reports/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto id = req.path_params.at("id");
    store_.reload();
    const auto rec = store_.find(id);
    if (!rec || rec->type != RecordType::kReport) throw Error(ErrorCode::kNotFound, "no report " + id);
    res.status = 200;
    res.set_content(rec->payload, kJson);
  }));
}

int ReviewServer::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = http_->bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::kIo, "cannot bind " + host);
  } else if (!http_->bind_to_port(host, port)) {
    throw Error(ErrorCode::kIo, fmt::format("cannot bind {}:{}", host, port));
  }
  spdlog::info("review API on http://{}:{}", host, bound);
  return bound;
}

void ReviewServer::listen() { http_->listen_after_bind(); }

void ReviewServer::start() {
  thread_ = std::thread([this] { listen(); });
  http_->wait_until_ready();
}

void ReviewServer::stop() {
  if (http_) http_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace forge
