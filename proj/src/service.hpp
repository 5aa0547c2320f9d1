#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include <json.hpp>

#include "session.hpp"

namespace limevis {

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// The HTTP API over one active session. handle() is transport-free so it
/// can be exercised without sockets; serve() binds it to cpp-httplib.
class Service {
 public:
  Service(LabeledDataset dataset, std::shared_ptr<Predictor> predictor, ExecuteOptions options = {});

  ApiResponse handle(const ApiRequest& request);

  /// Blocks until stop() is called or the listener fails.
  bool serve(const std::string& host, int port);
  /// Binds to an OS-chosen port and returns it; pair with listen_after_bind().
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();

 private:
  ApiResponse categories() const;
  ApiResponse execute(const nlohmann::json& body);
  ApiResponse overview(const std::string& mode) const;
  ApiResponse embedding() const;
  ApiResponse detail(int image_id) const;
  ApiResponse toggle(int image_id, const nlohmann::json& body);
  ApiResponse reset(int image_id);

  struct HttpServer;

  LabeledDataset dataset_;
  std::shared_ptr<Predictor> predictor_;
  ExecuteOptions options_;

  std::mutex execute_mutex_;
  mutable std::shared_mutex session_mutex_;
  std::optional<Session> session_;
  int session_id_ = 0;
  std::shared_ptr<HttpServer> http_;
};

}  // namespace limevis
