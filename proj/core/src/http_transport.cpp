#include <atomic>
#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "renderworld/backends.hpp"
#include "renderworld/digest.hpp"
#include "renderworld/error.hpp"
#include "renderworld/renderer.hpp"

namespace renderworld {

using nlohmann::json;

namespace {

std::atomic<std::size_t> g_requests{0};

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& url) {
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(ErrorCode::ConfigInvalid, "endpoint URL lacks a scheme: " + url);
  const std::size_t slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

struct Reply {
  int status = 0;
  std::string body;
};

// One POST. Connection failures map to `unreachable`, read timeouts to Timeout.
Reply post(const std::string& url, const httplib::Headers& headers, const std::string& body, int timeout_ms,
           ErrorCode unreachable) {
  const Url u = split_url(url);
  httplib::Client client(u.origin);
  const auto sec = timeout_ms / 1000;
  const auto usec = (timeout_ms % 1000) * 1000;
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
  ++g_requests;
  auto res = client.Post(u.path, headers, body, "application/json");
  if (!res) {
    const auto err = res.error();
    const std::string what = httplib::to_string(err);
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
      throw Error(unreachable == ErrorCode::RendererUnavailable ? ErrorCode::RenderTimeout : ErrorCode::Timeout,
                  url + ": " + what);
    throw Error(unreachable, url + ": " + what);
  }
  return {res->status, res->body};
}

httplib::Headers auth_headers(const BackendProfile& profile) {
  httplib::Headers headers;
  if (profile.auth_env.empty()) return headers;
  const char* key = std::getenv(profile.auth_env.c_str());
  if (!key || !*key)
    throw Error(ErrorCode::ConfigInvalid,
                profile.id + ": environment variable " + profile.auth_env + " is not set");
  headers.emplace("Authorization", std::string("Bearer ") + key);
  return headers;
}

void check_status(const BackendProfile& profile, const Reply& reply) {
  if (reply.status < 200 || reply.status >= 300)
    throw HttpStatusError(reply.status, profile.id + ": HTTP " + std::to_string(reply.status) + ": " +
                                            reply.body.substr(0, 300));
}

class HttpChatTransport final : public ChatTransport {
 public:
  std::string complete(const BackendProfile& profile, const ChatRequest& request) override {
    const Reply reply = post(profile.endpoint, auth_headers(profile), chat_wire_body(profile, request),
                             profile.timeout_ms, ErrorCode::TransportError);
    check_status(profile, reply);
    try {
      const json body = json::parse(reply.body);
      const json& content = body.at("choices").at(0).at("message").at("content");
      if (content.is_string()) return content.get<std::string>();
      std::string text;
      for (const auto& part : content)
        if (part.value("type", "") == "text") text += part.at("text").get<std::string>();
      return text;
    } catch (const json::exception& e) {
      throw Error(ErrorCode::TransportError, profile.id + ": malformed chat response: " + e.what());
    }
  }
};

class HttpEmbeddingTransport final : public EmbeddingTransport {
 public:
  std::vector<double> embed(const BackendProfile& profile, const UiState& image) override {
    const json request = {
        {"model", profile.model_name},
        {"input", json::array({{{"type", "image_url"},
                                {"image_url", {{"url", "data:image/png;base64," + base64_encode(image.png())}}}}})}};
    const Reply reply =
        post(profile.endpoint, auth_headers(profile), request.dump(), profile.timeout_ms, ErrorCode::TransportError);
    check_status(profile, reply);
    try {
      return json::parse(reply.body).at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::TransportError, profile.id + ": malformed embedding response: " + e.what());
    }
  }
};

class HttpRenderEndpoint final : public RenderEndpoint {
 public:
  explicit HttpRenderEndpoint(HttpRenderOptions options) : options_(std::move(options)) {
    split_url(options_.url);
  }

  std::vector<std::uint8_t> render_png(const RenderRequest& request) override {
    const json body = {{"html", request.html},
                       {"width", request.width},
                       {"height", request.height},
                       {"timeout_ms", request.timeout_ms},
                       {"settle_ms", options_.settle_ms}};
    const Reply reply = post(options_.url, {}, body.dump(), request.timeout_ms, ErrorCode::RendererUnavailable);
    if (reply.status < 200 || reply.status >= 300)
      throw Error(reply.status == 504 ? ErrorCode::RenderTimeout : ErrorCode::RendererUnavailable,
                  "render endpoint answered HTTP " + std::to_string(reply.status));
    return {reply.body.begin(), reply.body.end()};
  }

  std::string version() const override { return options_.version; }

 private:
  HttpRenderOptions options_;
};

}  // namespace

std::shared_ptr<ChatTransport> make_http_chat_transport() { return std::make_shared<HttpChatTransport>(); }

std::shared_ptr<EmbeddingTransport> make_http_embedding_transport() {
  return std::make_shared<HttpEmbeddingTransport>();
}

std::unique_ptr<RenderEndpoint> make_http_render_endpoint(HttpRenderOptions options) {
  return std::make_unique<HttpRenderEndpoint>(std::move(options));
}

std::size_t http_request_count() noexcept { return g_requests.load(); }

}  // namespace renderworld
