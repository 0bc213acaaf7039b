#pragma once

// Local HTTP API for the review console:
//   GET  /api/tasks?status=open[&batch=<id>]
//   GET  /api/tasks/{id}            task plus artifact bodies (no lineage)
//   POST /api/tasks/{id}/label      {"label": 5 | "first" | "second", "labeler": "..."}
//   GET  /api/batches
//   GET  /api/agreement?batch={id}
//   GET  /api/reports/{id}
// Errors come back as {"error": code, "message": text} with 400/404/409.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "forge/labels.hpp"
#include "forge/store.hpp"

namespace httplib {
class Server;
}

namespace forge {

class ReviewServer {
 public:
  explicit ReviewServer(Store& store, std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~ReviewServer();

  ReviewServer(const ReviewServer&) = delete;
  ReviewServer& operator=(const ReviewServer&) = delete;

  // port 0 picks a free port. Returns the bound port; throws kIo on failure.
  int bind(const std::string& host = "127.0.0.1", int port = 0);
  void listen();  // blocks until stop()
  void start();   // listen() on a background thread
  void stop();

  LabelBook& labels() { return labels_; }

 private:
  void routes();

  Store& store_;
  LabelBook labels_;
  std::unique_ptr<httplib::Server> http_;
  std::thread thread_;
};

}  // namespace forge
