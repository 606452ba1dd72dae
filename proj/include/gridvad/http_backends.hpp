#pragma once

#include <functional>
#include <string>

#include <json.hpp>

#include "gridvad/backends.hpp"

namespace gridvad {

struct HttpEndpoint {
  std::string url;  // e.g. http://localhost:8000/v1/chat/completions, or a base URL
  double timeout_s = 60.0;
  int max_retries = 3;          // retries after the first attempt
  double backoff_initial_s = 0.5;  // doubles on every retry
};

/// Splits "http://host:port/path" into the scheme+authority and the path.
struct ParsedUrl {
  std::string origin;
  std::string path;
};
ParsedUrl parse_url(const std::string& url);

/// POSTs a JSON body and returns the decoded JSON response. Retries
/// transport failures and 5xx answers with exponential backoff, then throws
/// TransportError. 4xx answers throw ProtocolError immediately.
nlohmann::json post_json(const HttpEndpoint& endpoint, const std::string& path,
                         const nlohmann::json& body);

std::string base64_png(const RgbImage& image);

/// Field names of a chat-completions style endpoint.
struct ChatDialect {
  std::string response_pointer = "/choices/0/message/content";
  bool image_as_data_url = true;  // false: raw base64 in {"type":"image","image":...}
};

nlohmann::json build_chat_body(const std::string& model, double temperature,
                               const std::string& prompt, const std::string* image_b64,
                               const ChatDialect& dialect);

class HttpChatBackend final : public VisionLanguageBackend {
 public:
  HttpChatBackend(HttpEndpoint endpoint, std::string model, ChatDialect dialect = {});
  std::string complete(const VlmRequest& request) override;

 private:
  HttpEndpoint endpoint_;
  ParsedUrl url_;
  std::string model_;
  ChatDialect dialect_;
};

/// POST {base}/ground.
class HttpGroundingBackend final : public GroundingBackend {
 public:
  explicit HttpGroundingBackend(HttpEndpoint endpoint);
  std::vector<BoundingBox> ground(const GroundingRequest& request) override;

 private:
  HttpEndpoint endpoint_;
  ParsedUrl url_;
};

/// POST {base}/propagate.
class HttpPropagationBackend final : public PropagationBackend {
 public:
  explicit HttpPropagationBackend(HttpEndpoint endpoint);
  std::vector<Bitmap> propagate(const PropagationRequest& request) override;

 private:
  HttpEndpoint endpoint_;
  ParsedUrl url_;
};

/// Wire helpers shared with tests and fixtures.
std::vector<BoundingBox> parse_ground_response(const nlohmann::json& body);
std::vector<Bitmap> parse_propagate_response(const nlohmann::json& body, std::size_t frame_count,
                                             int height, int width);

}  // namespace gridvad
