#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <renderworld/backends.hpp>
#include <renderworld/config.hpp>
#include <renderworld/manifest.hpp>
#include <renderworld/renderer.hpp>

namespace renderworld::cli {

/// Flags shared by every subcommand.
struct CommonOptions {
  std::string config;
  std::string out;
  std::optional<int> max_concurrency;
  bool strict = false;
  std::string record;
  std::string replay;
  bool timing = false;
};

/// Backends, renderer, cache and call log for one command invocation.
///
/// In record mode every chat/embedding transport is wrapped and the responses
/// are written to the script on finish(); in replay mode every profile is
/// served from the script with no fallback. Both modes bypass the on-disk
/// response cache so that each logical call reaches a transport.
class Runtime {
 public:
  explicit Runtime(const CommonOptions& options);

  const Config& config() const noexcept { return config_; }
  int concurrency() const noexcept { return config_.pipeline.max_concurrency; }
  bool strict() const noexcept { return config_.pipeline.strict; }

  ChatBackend& chat(const std::string& id);
  EmbeddingBackend& embedding(const std::string& id);
  Renderer& renderer();
  CallLog& log() noexcept { return *log_; }

  /// Writes manifest.json and calls.jsonl into `dir` and saves any recording.
  void finish(const std::filesystem::path& dir, RunManifest manifest);

  RunManifest start_manifest(const std::string& command, const std::vector<std::string>& args) const;

 private:
  std::shared_ptr<ChatTransport> chat_transport(const BackendProfile& profile);
  std::shared_ptr<EmbeddingTransport> embedding_transport(const BackendProfile& profile);
  std::shared_ptr<const StubScript> profile_script(const BackendProfile& profile);

  CommonOptions options_;
  Config config_;
  std::shared_ptr<CallLog> log_ = std::make_shared<CallLog>();
  std::shared_ptr<ResponseCache> cache_;
  std::shared_ptr<StubScript> recording_;
  std::shared_ptr<const StubScript> replay_;
  std::map<std::string, std::shared_ptr<const StubScript>> scripts_;
  std::map<std::string, std::unique_ptr<ChatBackend>> chats_;
  std::map<std::string, std::unique_ptr<EmbeddingBackend>> embeddings_;
  std::unique_ptr<Renderer> renderer_;
  std::mutex mutex_;
};

}  // namespace renderworld::cli
