#include "runtime.hpp"

#include <renderworld/error.hpp>

namespace renderworld::cli {

namespace fs = std::filesystem;

Runtime::Runtime(const CommonOptions& options) : options_(options) {
  config_ = options.config.empty() ? Config::defaults() : Config::load(options.config);
  if (options.max_concurrency) {
    if (*options.max_concurrency < 1) throw Error(ErrorCode::ConfigInvalid, "--max-concurrency must be at least 1");
    config_.pipeline.max_concurrency = *options.max_concurrency;
  }
  if (options.strict) config_.pipeline.strict = true;
  if (!options.record.empty() && !options.replay.empty())
    throw Error(ErrorCode::ConfigInvalid, "--record and --replay are mutually exclusive");

  const bool bypass_disk = !options.record.empty() || !options.replay.empty();
  cache_ = std::make_shared<ResponseCache>(
      bypass_disk ? std::nullopt : std::optional<fs::path>(config_.resolve(config_.pipeline.cache_dir)));
  if (!options.record.empty()) recording_ = std::make_shared<StubScript>();
  if (!options.replay.empty()) replay_ = std::make_shared<const StubScript>(StubScript::load(options.replay));
}

std::shared_ptr<const StubScript> Runtime::profile_script(const BackendProfile& profile) {
  if (profile.script.empty()) return nullptr;
  auto& slot = scripts_[profile.script];
  if (!slot) slot = std::make_shared<const StubScript>(StubScript::load(config_.resolve(profile.script)));
  return slot;
}

std::shared_ptr<ChatTransport> Runtime::chat_transport(const BackendProfile& profile) {
  if (replay_) return make_stub_chat_transport(replay_, ChatFallback::none);
  std::shared_ptr<ChatTransport> t =
      profile.transport == "http"
          ? make_http_chat_transport()
          : make_stub_chat_transport(profile_script(profile),
                                     profile.fallback == "synthetic" ? ChatFallback::synthetic : ChatFallback::none);
  return recording_ ? make_recording_chat_transport(t, recording_) : t;
}

std::shared_ptr<EmbeddingTransport> Runtime::embedding_transport(const BackendProfile& profile) {
  if (replay_) return make_stub_embedding_transport(replay_, EmbedFallback::none, profile.dimension);
  std::shared_ptr<EmbeddingTransport> t;
  if (profile.transport == "http") {
    t = make_http_embedding_transport();
  } else {
    const EmbedFallback fallback = profile.fallback == "seeded"      ? EmbedFallback::seeded
                                   : profile.fallback == "thumbnail" ? EmbedFallback::thumbnail
                                                                     : EmbedFallback::none;
    t = make_stub_embedding_transport(profile_script(profile), fallback, profile.dimension);
  }
  return recording_ ? make_recording_embedding_transport(t, recording_) : t;
}

ChatBackend& Runtime::chat(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto& slot = chats_[id];
  if (!slot) {
    const auto& profile = config_.backend(id, BackendKind::chat);
    slot = std::make_unique<ChatBackend>(profile, chat_transport(profile), cache_, log_);
  }
  return *slot;
}

EmbeddingBackend& Runtime::embedding(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto& slot = embeddings_[id];
  if (!slot) {
    const auto& profile = config_.backend(id, BackendKind::embedding);
    slot = std::make_unique<EmbeddingBackend>(profile, embedding_transport(profile), cache_, log_);
  }
  return *slot;
}

Renderer& Runtime::renderer() {
  std::lock_guard lock(mutex_);
  if (!renderer_) {
    std::shared_ptr<RenderEndpoint> endpoint;
    if (config_.renderer.backend == "http") {
      HttpRenderOptions http;
      http.url = config_.renderer.url;
      if (!config_.renderer.version.empty()) http.version = config_.renderer.version;
      http.settle_ms = config_.renderer.settle_ms;
      endpoint = make_http_render_endpoint(http);
    } else {
      endpoint = make_stub_render_endpoint();
    }
    RendererConfig rc;
    rc.timeout_ms = config_.renderer.timeout_ms;
    rc.cache_dir = config_.resolve(config_.pipeline.cache_dir);
    renderer_ = std::make_unique<Renderer>(std::move(endpoint), rc);
  }
  return *renderer_;
}

RunManifest Runtime::start_manifest(const std::string& command, const std::vector<std::string>& args) const {
  RunManifest m;
  m.command = command;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--out" || args[i] == "--record" || args[i] == "--replay") {
      ++i;
      continue;
    }
    m.args.push_back(args[i]);
  }
  m.config_digest = config_.digest();
  m.template_checksums = template_checksums();
  m.started_at = utc_timestamp();
  return m;
}

void Runtime::finish(const fs::path& dir, RunManifest manifest) {
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, backend] : chats_) manifest.backend_profiles[id] = profile_json(backend->profile());
    for (const auto& [id, backend] : embeddings_) manifest.backend_profiles[id] = profile_json(backend->profile());
    if (renderer_) manifest.renderer_version = renderer_->version();
  }
  manifest.finished_at = utc_timestamp();
  fs::create_directories(dir);
  manifest.write(dir);
  log_->write_jsonl(dir / "calls.jsonl", options_.timing);
  if (recording_) recording_->save(options_.record);
}

}  // namespace renderworld::cli
