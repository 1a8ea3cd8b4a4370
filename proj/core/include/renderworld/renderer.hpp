#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "renderworld/html.hpp"
#include "renderworld/types.hpp"

namespace renderworld {

struct RenderRequest {
  std::string html;
  int width = 0;
  int height = 0;
  int timeout_ms = 15000;
};

/// The "submit HTML, receive PNG at fixed viewport" contract.
class RenderEndpoint {
 public:
  virtual ~RenderEndpoint() = default;
  virtual std::vector<std::uint8_t> render_png(const RenderRequest& request) = 0;
  virtual std::string version() const = 0;
};

struct HttpRenderOptions {
  std::string url;  // e.g. http://127.0.0.1:3000/render
  std::string version = "http-1";
  int settle_ms = 200;
};

/// POSTs {html,width,height,timeout_ms,settle_ms} as JSON; expects image/png.
std::unique_ptr<RenderEndpoint> make_http_render_endpoint(HttpRenderOptions options);

/// Deterministic in-process rasterizer (see stub_renderer.cpp for the subset
/// of CSS it understands).
std::unique_ptr<RenderEndpoint> make_stub_render_endpoint();

struct RenderResult {
  UiState image;
  std::string html_hash;
  std::string renderer_version;
  bool from_cache = false;
  bool forced = false;
};

struct RenderOptions {
  bool force = false;  // render even if validation fails
};

struct RendererConfig {
  int timeout_ms = 15000;
  std::optional<std::filesystem::path> cache_dir;  // cache/render/<prefix>/<hash>.png
};

/// Validating, caching front of a RenderEndpoint. Safe for concurrent use;
/// concurrent renders of one key share a single endpoint call.
class Renderer {
 public:
  Renderer(std::shared_ptr<RenderEndpoint> endpoint, RendererConfig config = {});

  RenderResult render(const HtmlDocument& doc, RenderOptions options = {});

  std::string version() const { return endpoint_->version(); }
  std::size_t endpoint_calls() const;

 private:
  std::string cache_key(const HtmlDocument& doc) const;
  std::optional<std::vector<std::uint8_t>> load_cached(const std::string& key, const HtmlDocument& doc) const;
  void store_cached(const std::string& key, const HtmlDocument& doc, const std::vector<std::uint8_t>& png) const;

  std::shared_ptr<RenderEndpoint> endpoint_;
  RendererConfig config_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_future<std::vector<std::uint8_t>>> entries_;
  std::size_t endpoint_calls_ = 0;
};

}  // namespace renderworld
