#include "gridvad/http_backends.hpp"

#include <chrono>
#include <thread>

#include <spdlog/spdlog.h>
#include <httplib.h>

#include "gridvad/masks.hpp"

namespace gridvad {

using nlohmann::json;

ParsedUrl parse_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto host_begin = scheme == std::string::npos ? 0 : scheme + 3;
  const auto slash = url.find('/', host_begin);
  if (slash == std::string::npos) return {url, ""};
  std::string path = url.substr(slash);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {url.substr(0, slash), path};
}

json post_json(const HttpEndpoint& endpoint, const std::string& path, const json& body) {
  const auto url = parse_url(endpoint.url);
  const std::string payload = body.dump();
  double backoff = endpoint.backoff_initial_s;
  std::string last_error;
  for (int attempt = 0; attempt <= endpoint.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff *= 2;
    }
    httplib::Client client(url.origin);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(endpoint.timeout_s));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post(path, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      spdlog::warn("POST {}{} failed (attempt {}): {}", url.origin, path, attempt + 1, last_error);
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      spdlog::warn("POST {}{} returned {} (attempt {})", url.origin, path, res->status,
                   attempt + 1);
      continue;
    }
    if (res->status >= 400)
      throw ProtocolError("POST " + path + " rejected with HTTP " + std::to_string(res->status) +
                          ": " + res->body);
    try {
      return json::parse(res->body);
    } catch (const json::exception& e) {
      throw ProtocolError("POST " + path + " returned invalid JSON: " + e.what());
    }
  }
  throw TransportError("POST " + url.origin + path + " failed after " +
                       std::to_string(endpoint.max_retries + 1) + " attempts: " + last_error);
}

std::string base64_png(const RgbImage& image) {
  const auto png = encode_png(image);
  return httplib::detail::base64_encode(std::string(png.begin(), png.end()));
}

json build_chat_body(const std::string& model, double temperature, const std::string& prompt,
                     const std::string* image_b64, const ChatDialect& dialect) {
  json content = json::array();
  if (image_b64) {
    if (dialect.image_as_data_url)
      content.push_back({{"type", "image_url"},
                         {"image_url", {{"url", "data:image/png;base64," + *image_b64}}}});
    else
      content.push_back({{"type", "image"}, {"image", *image_b64}});
  }
  content.push_back({{"type", "text"}, {"text", prompt}});
  return {{"model", model},
          {"temperature", temperature},
          {"messages", json::array({{{"role", "user"}, {"content", content}}})}};
}

HttpChatBackend::HttpChatBackend(HttpEndpoint endpoint, std::string model, ChatDialect dialect)
    : endpoint_(std::move(endpoint)),
      url_(parse_url(endpoint_.url)),
      model_(std::move(model)),
      dialect_(std::move(dialect)) {}

std::string HttpChatBackend::complete(const VlmRequest& request) {
  std::string image;
  if (request.image) image = base64_png(*request.image);
  const auto body = build_chat_body(model_, request.temperature, request.prompt,
                                    request.image ? &image : nullptr, dialect_);
  const auto response = post_json(endpoint_, url_.path, body);
  const json::json_pointer ptr(dialect_.response_pointer);
  if (!response.contains(ptr) || !response.at(ptr).is_string())
    throw ProtocolError("chat response has no string at " + dialect_.response_pointer);
  return response.at(ptr).get<std::string>();
}

HttpGroundingBackend::HttpGroundingBackend(HttpEndpoint endpoint)
    : endpoint_(std::move(endpoint)), url_(parse_url(endpoint_.url)) {}

std::vector<BoundingBox> parse_ground_response(const json& body) {
  if (!body.is_object() || !body.contains("boxes") || !body["boxes"].is_array())
    throw ProtocolError("/ground response lacks a 'boxes' array");
  std::vector<BoundingBox> out;
  for (const auto& b : body["boxes"]) {
    for (const char* key : {"x0", "y0", "x1", "y1", "score"})
      if (!b.contains(key) || !b[key].is_number())
        throw ProtocolError(std::string("/ground box lacks numeric '") + key + "'");
    out.push_back({b["x0"].get<double>(), b["y0"].get<double>(), b["x1"].get<double>(),
                   b["y1"].get<double>(), b["score"].get<double>()});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const BoundingBox& a, const BoundingBox& b) { return a.score > b.score; });
  return out;
}

std::vector<BoundingBox> HttpGroundingBackend::ground(const GroundingRequest& request) {
  const json body = {{"image_b64", base64_png(request.image)},
                     {"text", request.text},
                     {"box_threshold", request.box_threshold},
                     {"text_threshold", request.text_threshold}};
  return parse_ground_response(post_json(endpoint_, url_.path + "/ground", body));
}

HttpPropagationBackend::HttpPropagationBackend(HttpEndpoint endpoint)
    : endpoint_(std::move(endpoint)), url_(parse_url(endpoint_.url)) {}

std::vector<Bitmap> parse_propagate_response(const json& body, std::size_t frame_count,
                                             int height, int width) {
  if (!body.is_object() || !body.contains("masks_rle") || !body["masks_rle"].is_array())
    throw ProtocolError("/propagate response lacks a 'masks_rle' array");
  const auto& masks = body["masks_rle"];
  if (masks.size() != frame_count)
    throw ProtocolError("/propagate returned " + std::to_string(masks.size()) + " masks for " +
                        std::to_string(frame_count) + " frames");
  std::vector<Bitmap> out;
  out.reserve(masks.size());
  for (const auto& m : masks) {
    if (!m.is_array()) throw ProtocolError("/propagate mask is not an array of run lengths");
    RunLengths runs;
    runs.reserve(m.size());
    for (const auto& r : m) {
      if (!r.is_number_unsigned() && !(r.is_number_integer() && r.get<std::int64_t>() >= 0))
        throw ProtocolError("/propagate run length is not a non-negative integer");
      runs.push_back(r.get<std::uint32_t>());
    }
    out.push_back(decode_rle(runs, height, width));
  }
  return out;
}

std::vector<Bitmap> HttpPropagationBackend::propagate(const PropagationRequest& request) {
  json frames = json::array();
  for (const auto& f : request.frames) frames.push_back(base64_png(f));
  const json body = {{"frames_b64", frames},
                     {"anchor_index", request.anchor_index},
                     {"box", {request.box.x0, request.box.y0, request.box.x1, request.box.y1}}};
  return parse_propagate_response(post_json(endpoint_, url_.path + "/propagate", body),
                                  request.frames.size(), request.height, request.width);
}

}  // namespace gridvad
