#include "service.hpp"

#include <charconv>

#include <httplib.h>

#include "base64.hpp"
#include "error.hpp"
#include "serialize.hpp"

namespace limevis {

using nlohmann::json;

struct Service::HttpServer {
  httplib::Server server;
};

namespace {

json ppm_payload(const RgbImage& image) {
  return {{"ppm_b64", base64_encode(write_ppm(image))}};
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= path.size()) {
    const auto slash = path.find('/', start);
    const auto stop = slash == std::string::npos ? path.size() : slash;
    if (stop > start) parts.push_back(path.substr(start, stop - start));
    if (slash == std::string::npos) break;
    start = slash + 1;
  }
  return parts;
}

std::optional<int> parse_int(const std::string& s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

ApiResponse error_response(int status, const std::string& code, const std::string& message) {
  return {status, {{"error_code", code}, {"message", message}}};
}

}  // namespace

Service::Service(LabeledDataset dataset, std::shared_ptr<Predictor> predictor, ExecuteOptions options)
    : dataset_(std::move(dataset)), predictor_(std::move(predictor)), options_(options) {
  if (!predictor_) throw Error(ErrorCode::InvalidArgument, "service needs a predictor");
}

ApiResponse Service::handle(const ApiRequest& request) {
  try {
    const auto parts = split_path(request.path);
    if (parts.size() < 2 || parts[0] != "api") return error_response(404, "NotFound", "no such endpoint");
    json body;
    if (request.method == "POST" && !request.body.empty()) {
      body = json::parse(request.body, nullptr, false);
      if (body.is_discarded()) return error_response(400, error_code_name(ErrorCode::InvalidArgument), "body is not JSON");
    }
    const std::string& head = parts[1];
    if (parts.size() == 2) {
      if (head == "categories" && request.method == "GET") return categories();
      if (head == "execute" && request.method == "POST") return execute(body);
      if (head == "overview" && request.method == "GET") {
        const auto it = request.query.find("mode");
        return overview(it == request.query.end() ? "original" : it->second);
      }
      if (head == "embedding" && request.method == "GET") return embedding();
    }
    if (head == "image" && parts.size() == 4) {
      const auto id = parse_int(parts[2]);
      if (!id) return error_response(400, error_code_name(ErrorCode::InvalidArgument), "image id must be an integer");
      if (parts[3] == "detail" && request.method == "GET") return detail(*id);
      if (parts[3] == "toggle" && request.method == "POST") return toggle(*id, body);
      if (parts[3] == "reset" && request.method == "POST") return reset(*id);
    }
    return error_response(404, "NotFound", "no such endpoint");
  } catch (const Error& e) {
    return error_response(e.code() == ErrorCode::NoSession ? 409 : 400, error_code_name(e.code()), e.what());
  } catch (const std::exception& e) {
    return error_response(500, error_code_name(ErrorCode::Internal), e.what());
  }
}

ApiResponse Service::categories() const {
  return {200, {{"categories", dataset_.category_names}}};
}

ApiResponse Service::execute(const json& body) {
  if (!body.is_object() || !body.contains("category"))
    throw Error(ErrorCode::InvalidArgument, "execute needs a 'category'");
  int category = -1;
  const auto& c = body["category"];
  if (c.is_string()) {
    category = dataset_.find_category(c.get<std::string>());
  } else if (c.is_number_integer()) {
    category = c.get<int>();
  }
  if (category < 0 || category >= dataset_.class_count())
    throw Error(ErrorCode::InvalidArgument, "unknown category");
  const ExplainConfig config = config_from_json(body.contains("config") ? body["config"] : json());

  std::lock_guard exec_lock(execute_mutex_);
  ExecuteOptions opts = options_;
  opts.embedding.seed = config.seed;
  Session fresh = Session::execute(dataset_, category, config, predictor_, opts);

  std::unique_lock lock(session_mutex_);
  session_ = std::move(fresh);
  ++session_id_;
  json cells = json::array();
  for (const auto& cell : session_->overview_cells())
    cells.push_back({{"image_id", cell.image_id}, {"row", cell.row}, {"col", cell.col}, {"correct", cell.correct}});
  return {200, {{"session_id", session_id_}, {"cells", cells}}};
}

ApiResponse Service::overview(const std::string& mode) const {
  if (mode != "original" && mode != "lime") throw Error(ErrorCode::InvalidArgument, "mode must be original or lime");
  std::shared_lock lock(session_mutex_);
  if (!session_) throw Error(ErrorCode::NoSession, "no analysis has been executed");
  json cells = json::array();
  const auto cells_meta = session_->overview_cells();
  for (std::size_t i = 0; i < cells_meta.size(); ++i) {
    const auto& cell = cells_meta[i];
    const auto& e = session_->entries()[i];
    cells.push_back({{"image_id", cell.image_id},
                     {"row", cell.row},
                     {"col", cell.col},
                     {"correct", cell.correct},
                     {"ppm_b64", base64_encode(write_ppm(mode == "lime" ? e.lime_image : e.original))}});
  }
  return {200, {{"mode", mode}, {"cells", cells}}};
}

ApiResponse Service::embedding() const {
  std::shared_lock lock(session_mutex_);
  if (!session_) throw Error(ErrorCode::NoSession, "no analysis has been executed");
  json points = json::array();
  const auto& coords = session_->embedding().coords;
  for (std::size_t i = 0; i < session_->entries().size(); ++i) {
    const auto& e = session_->entries()[i];
    points.push_back({{"image_id", e.image_id}, {"x", coords[i][0]}, {"y", coords[i][1]}, {"correct", e.correct}});
  }
  return {200, {{"points", points}}};
}

ApiResponse Service::detail(int image_id) const {
  std::shared_lock lock(session_mutex_);
  if (!session_) throw Error(ErrorCode::NoSession, "no analysis has been executed");
  const SessionEntry& e = session_->entry(image_id);
  return {200,
          {{"image_id", image_id},
           {"original", ppm_payload(e.original)},
           {"lime", ppm_payload(e.lime_image)},
           {"boundary_overlay", ppm_payload(boundary_overlay(session_->masked_image(image_id), e.spmap))},
           {"spmap", to_json(e.spmap)},
           {"original_probs", e.explanation.original_probs.probs},
           {"current_probs", session_->current_probs(image_id).probs},
           {"toggle", session_->toggle_state(image_id)},
           {"class_names", session_->class_names()},
           {"explanation", to_json(e.explanation, session_->config())}}};
}

ApiResponse Service::toggle(int image_id, const json& body) {
  std::unique_lock lock(session_mutex_);
  if (!session_) throw Error(ErrorCode::NoSession, "no analysis has been executed");
  if (!body.is_object()) throw Error(ErrorCode::InvalidArgument, "toggle needs {x, y} or {superpixel_id}");
  int superpixel = -1;
  if (body.contains("superpixel_id") && body["superpixel_id"].is_number_integer()) {
    superpixel = body["superpixel_id"].get<int>();
  } else if (body.contains("x") && body.contains("y") && body["x"].is_number() && body["y"].is_number()) {
    superpixel = session_->pixel_to_superpixel(image_id, static_cast<int>(std::floor(body["x"].get<double>())),
                                               static_cast<int>(std::floor(body["y"].get<double>())));
  } else {
    throw Error(ErrorCode::InvalidArgument, "toggle needs {x, y} or {superpixel_id}");
  }
  const ToggleResult r = session_->toggle(image_id, superpixel);
  const SuperpixelMap& spmap = session_->entry(image_id).spmap;
  return {200,
          {{"image_id", image_id},
           {"superpixel_id", superpixel},
           {"toggle", r.toggle},
           {"ppm_b64", base64_encode(write_ppm(r.masked))},
           {"overlay_ppm_b64", base64_encode(write_ppm(boundary_overlay(r.masked, spmap)))},
           {"current_probs", r.current.probs}}};
}

ApiResponse Service::reset(int image_id) {
  std::unique_lock lock(session_mutex_);
  if (!session_) throw Error(ErrorCode::NoSession, "no analysis has been executed");
  const ToggleResult r = session_->reset(image_id);
  return {200, {{"image_id", image_id}, {"toggle", r.toggle}, {"current_probs", r.current.probs}}};
}

// ---------------------------------------------------------------------------
// HTTP transport

namespace {

void install_routes(httplib::Server& server, Service& service) {
  auto dispatch = [&service](const httplib::Request& req, httplib::Response& res) {
    ApiRequest api{req.method, req.path, {}, req.body};
    for (const auto& [k, v] : req.params) api.query.emplace(k, v);
    const ApiResponse out = service.handle(api);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  server.Get(R"(/api/.*)", dispatch);
  server.Post(R"(/api/.*)", dispatch);
}

}  // namespace

bool Service::serve(const std::string& host, int port) {
  http_ = std::make_shared<HttpServer>();
  install_routes(http_->server, *this);
  return http_->server.listen(host, port);
}

int Service::bind_any_port(const std::string& host) {
  http_ = std::make_shared<HttpServer>();
  install_routes(http_->server, *this);
  return http_->server.bind_to_any_port(host);
}

bool Service::listen_after_bind() { return http_ && http_->server.listen_after_bind(); }

void Service::stop() {
  if (http_) http_->server.stop();
}

}  // namespace limevis
