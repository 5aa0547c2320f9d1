#include <cerrno>
#include <csignal>
#include <cstring>
#include <string_view>
#include <thread>

#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

#include "base64.hpp"
#include "error.hpp"
#include "predictor.hpp"

namespace limevis {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& message) {
  throw Error(ErrorCode::ExternalPredictorFailure, message);
}

class SubprocessChannel final : public JsonChannel {
 public:
  SubprocessChannel(const std::string& command, std::chrono::milliseconds timeout) : timeout_(timeout) {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) fail(std::string("socketpair: ") + std::strerror(errno));
    pid_ = ::fork();
    if (pid_ < 0) {
      ::close(fds[0]);
      ::close(fds[1]);
      fail(std::string("fork: ") + std::strerror(errno));
    }
    if (pid_ == 0) {
      ::dup2(fds[1], STDIN_FILENO);
      ::dup2(fds[1], STDOUT_FILENO);
      ::close(fds[0]);
      ::close(fds[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(fds[1]);
    fd_ = fds[0];
  }

  ~SubprocessChannel() override {
    if (fd_ >= 0) ::close(fd_);
    if (pid_ > 0) {
      // Closing stdin asks a well-behaved responder to exit.
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
  }

  SubprocessChannel(const SubprocessChannel&) = delete;
  SubprocessChannel& operator=(const SubprocessChannel&) = delete;

  std::string exchange(const std::string& request_line) override {
    if (fd_ < 0) fail("external predictor channel is closed");
    std::string out = request_line;
    out += '\n';
    std::size_t sent = 0;
    while (sent < out.size()) {
      const ssize_t k = ::send(fd_, out.data() + sent, out.size() - sent, MSG_NOSIGNAL);
      if (k < 0) {
        if (errno == EINTR) continue;
        broken();
        fail(std::string("write to external predictor failed: ") + std::strerror(errno));
      }
      sent += static_cast<std::size_t>(k);
    }
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    for (;;) {
      if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) {
        broken();
        fail("external predictor timed out");
      }
      pollfd pfd{fd_, POLLIN, 0};
      const int r = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (r < 0 && errno == EINTR) continue;
      if (r <= 0) {
        broken();
        fail("external predictor timed out");
      }
      char chunk[65536];
      const ssize_t k = ::recv(fd_, chunk, sizeof chunk, 0);
      if (k < 0 && errno == EINTR) continue;
      if (k <= 0) {
        broken();
        fail("external predictor closed its output");
      }
      buffer_.append(chunk, static_cast<std::size_t>(k));
    }
  }

 private:
  // After a timeout or partial read the stream position is unknown.
  void broken() {
    ::close(fd_);
    fd_ = -1;
  }

  std::chrono::milliseconds timeout_;
  pid_t pid_ = -1;
  int fd_ = -1;
  std::string buffer_;
};

class HttpChannel final : public JsonChannel {
 public:
  HttpChannel(std::string url, std::chrono::milliseconds timeout) {
    constexpr std::string_view suffix = "/predict";
    if (url.size() >= suffix.size() && url.compare(url.size() - suffix.size(), suffix.size(), suffix) == 0)
      url.resize(url.size() - suffix.size());
    const auto scheme = url.find("://");
    const auto slash = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (slash != std::string::npos) {
      prefix_ = url.substr(slash);
      url.resize(slash);
    }
    client_ = std::make_unique<httplib::Client>(url);
    if (!client_->is_valid()) fail("invalid external predictor URL");
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client_->set_connection_timeout(secs.count(), usecs.count());
    client_->set_read_timeout(secs.count(), usecs.count());
    client_->set_write_timeout(secs.count(), usecs.count());
  }

  std::string exchange(const std::string& request_line) override {
    auto res = client_->Post(prefix_ + "/predict", request_line + "\n", "application/json");
    if (!res) fail("HTTP request to external predictor failed: " + httplib::to_string(res.error()));
    if (res->status != 200) fail("external predictor returned HTTP " + std::to_string(res->status));
    std::string body = res->body;
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
    return body;
  }

 private:
  std::unique_ptr<httplib::Client> client_;
  std::string prefix_;
};

json parse_response(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail("malformed response from external predictor");
  return j;
}

void check_id(const json& response, std::int64_t id) {
  if (!response.contains("id") || !response["id"].is_number_integer() || response["id"].get<std::int64_t>() != id)
    fail("external predictor response id mismatch");
}

std::vector<double> number_array(const json& response, const char* key) {
  if (!response.contains(key) || !response[key].is_array()) fail(std::string("response lacks '") + key + "' array");
  std::vector<double> out;
  for (const auto& v : response[key]) {
    if (!v.is_number()) fail(std::string("non-numeric entry in '") + key + "'");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

std::unique_ptr<JsonChannel> spawn_subprocess_channel(const std::string& command, std::chrono::milliseconds timeout) {
  return std::make_unique<SubprocessChannel>(command, timeout);
}

std::unique_ptr<JsonChannel> http_channel(const std::string& url, std::chrono::milliseconds timeout) {
  return std::make_unique<HttpChannel>(url, timeout);
}

std::string encode_predict_request(std::int64_t id, const RgbImage& image) {
  json req = {{"id", id},
              {"width", image.width()},
              {"height", image.height()},
              {"pixels_b64", base64_encode(image.bytes())}};
  return req.dump();
}

ExternalPredictor::ExternalPredictor(std::unique_ptr<JsonChannel> channel) : channel_(std::move(channel)) {
  const json hello = parse_response(channel_->exchange(R"({"hello":true})"));
  if (!hello.contains("class_count") || !hello["class_count"].is_number_integer())
    fail("handshake response lacks class_count");
  class_count_ = hello["class_count"].get<int>();
  if (class_count_ < 1) fail("handshake class_count must be positive");
  if (!hello.contains("class_names") || !hello["class_names"].is_array())
    fail("handshake response lacks class_names");
  for (const auto& name : hello["class_names"]) {
    if (!name.is_string()) fail("class_names must be strings");
    names_.push_back(name.get<std::string>());
  }
  if (names_.size() != static_cast<std::size_t>(class_count_)) fail("class_names length differs from class_count");
}

std::vector<ClassProbabilities> ExternalPredictor::predict_batch(std::span<const RgbImage> images) {
  std::lock_guard lock(mutex_);
  std::vector<ClassProbabilities> out;
  out.reserve(images.size());
  for (const auto& img : images) {
    const std::int64_t id = next_id_++;
    const json res = parse_response(channel_->exchange(encode_predict_request(id, img)));
    check_id(res, id);
    ClassProbabilities p{number_array(res, "probs")};
    if (const auto why = probability_violation(p.probs, static_cast<std::size_t>(class_count_)); !why.empty())
      fail("external predictor returned invalid probabilities: " + why);
    out.push_back(std::move(p));
  }
  return out;
}

ExternalFeatureExtractor::ExternalFeatureExtractor(std::unique_ptr<JsonChannel> channel) : channel_(std::move(channel)) {
  parse_response(channel_->exchange(R"({"hello":true})"));
}

std::vector<double> ExternalFeatureExtractor::extract(const RgbImage& image) {
  std::lock_guard lock(mutex_);
  const std::int64_t id = next_id_++;
  const json res = parse_response(channel_->exchange(encode_predict_request(id, image)));
  check_id(res, id);
  auto features = number_array(res, "features");
  if (features.empty()) fail("external extractor returned no features");
  for (const double v : features)
    if (!std::isfinite(v)) fail("external extractor returned non-finite features");
  if (dim_ == 0) dim_ = features.size();
  if (features.size() != dim_) fail("external extractor changed feature dimension");
  return features;
}

}  // namespace limevis
