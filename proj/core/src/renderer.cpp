#include "renderworld/renderer.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "renderworld/corpus.hpp"
#include "renderworld/digest.hpp"
#include "renderworld/error.hpp"

namespace renderworld {

namespace fs = std::filesystem;

Renderer::Renderer(std::shared_ptr<RenderEndpoint> endpoint, RendererConfig config)
    : endpoint_(std::move(endpoint)), config_(std::move(config)) {
  if (!endpoint_) throw Error(ErrorCode::InvalidArgument, "renderer requires an endpoint");
}

std::size_t Renderer::endpoint_calls() const {
  std::lock_guard lock(mutex_);
  return endpoint_calls_;
}

std::string Renderer::cache_key(const HtmlDocument& doc) const {
  std::ostringstream key;
  key << doc.content_hash() << '|' << doc.viewport().width << 'x' << doc.viewport().height << '|'
      << endpoint_->version();
  return sha256_hex(key.str());
}

std::optional<std::vector<std::uint8_t>> Renderer::load_cached(const std::string& key,
                                                               const HtmlDocument& doc) const {
  if (!config_.cache_dir) return std::nullopt;
  const fs::path dir = *config_.cache_dir / "render" / key.substr(0, 2);
  const fs::path png = dir / (key + ".png");
  const fs::path meta = dir / (key + ".meta");
  std::error_code ec;
  if (!fs::exists(png, ec) || !fs::exists(meta, ec)) return std::nullopt;
  try {
    const auto m = nlohmann::json::parse(read_file_text(meta));
    if (m.at("renderer_version") != endpoint_->version() || m.at("html_hash") != doc.content_hash())
      return std::nullopt;
    auto bytes = read_file_bytes(png);
    const auto size = png_dimensions(bytes);
    if (size.width != doc.viewport().width || size.height != doc.viewport().height) return std::nullopt;
    return bytes;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void Renderer::store_cached(const std::string& key, const HtmlDocument& doc,
                            const std::vector<std::uint8_t>& png) const {
  if (!config_.cache_dir) return;
  const fs::path dir = *config_.cache_dir / "render" / key.substr(0, 2);
  fs::create_directories(dir);
  write_file_atomic(dir / (key + ".png"), png);
  const nlohmann::json meta = {{"renderer_version", endpoint_->version()},
                               {"html_hash", doc.content_hash()},
                               {"width", doc.viewport().width},
                               {"height", doc.viewport().height}};
  const std::string text = meta.dump(2) + "\n";
  write_file_atomic(dir / (key + ".meta"), text);
}

RenderResult Renderer::render(const HtmlDocument& doc, RenderOptions options) {
  if (!options.force) {
    const auto report = validate_html(doc);
    if (!report.valid()) {
      std::string rules;
      for (const auto& id : report.rule_ids()) rules += (rules.empty() ? "" : ",") + id;
      throw Error(ErrorCode::InvalidDocument, "document fails validation: " + rules);
    }
  }

  const std::string key = cache_key(doc);
  std::shared_future<std::vector<std::uint8_t>> future;
  std::promise<std::vector<std::uint8_t>> promise;
  bool owner = false;
  {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) {
      future = it->second;
    } else {
      future = promise.get_future().share();
      entries_.emplace(key, future);
      owner = true;
    }
  }

  bool from_cache = !owner;
  if (owner) {
    try {
      auto cached = load_cached(key, doc);
      if (cached) {
        from_cache = true;
      } else {
        {
          std::lock_guard lock(mutex_);
          ++endpoint_calls_;
        }
        RenderRequest request{doc.source(), doc.viewport().width, doc.viewport().height, config_.timeout_ms};
        auto png = endpoint_->render_png(request);
        const auto size = png_dimensions(png);
        if (size.width != request.width || size.height != request.height)
          throw Error(ErrorCode::DimensionMismatch,
                      "renderer returned " + std::to_string(size.width) + "x" + std::to_string(size.height) +
                          ", expected " + std::to_string(request.width) + "x" + std::to_string(request.height));
        store_cached(key, doc, png);
        cached = std::move(png);
      }
      promise.set_value(std::move(*cached));
    } catch (...) {
      promise.set_exception(std::current_exception());
      std::lock_guard lock(mutex_);
      entries_.erase(key);
    }
  }

  RenderResult result;
  result.image = UiState::from_png(future.get(), ImageOrigin::rendered);
  result.html_hash = doc.content_hash();
  result.renderer_version = endpoint_->version();
  result.from_cache = from_cache;
  result.forced = options.force;
  return result;
}

}  // namespace renderworld
