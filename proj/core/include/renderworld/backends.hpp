#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "renderworld/prompting.hpp"
#include "renderworld/types.hpp"

namespace renderworld {

enum class BackendKind { chat, embedding, render };

std::string_view to_string(BackendKind kind) noexcept;

struct BackendProfile {
  std::string id;
  BackendKind kind = BackendKind::chat;
  std::string transport = "stub";  // "http" or "stub"
  std::string endpoint;            // full URL for http transports
  std::string model_name;
  DecodeClass decode_class = DecodeClass::judge;
  std::optional<DecodeParams> decode_override;
  std::string auth_env;  // name of the environment variable holding the key
  int timeout_ms = 60000;
  int retries = 2;
  std::vector<int> backoff_ms{500, 2000};
  int concurrency = 4;
  bool cache = true;

  // Embedding profiles.
  int dimension = 0;  // 0: accept whatever the provider returns
  bool signed_output = true;
  std::optional<Viewport> input_size;

  // Stub transports.
  std::string script;           // path to a stub script; empty for none
  std::string fallback = "none";  // "none" | "synthetic" (chat), "seeded" | "thumbnail" (embedding)

  DecodeParams decode_defaults() const;
};

/// Calls at or below this temperature are treated as deterministic and cached.
inline constexpr double kCacheTemperatureThreshold = 0.2;

struct ChatRequest {
  std::string template_name;
  /// Stable identifier used by stub scripts: "<template>:<digest16>[/retry][/s<n>]".
  std::string match_key;
  std::vector<ChatMessage> messages;
  DecodeParams decode;
};

/// Wire body (chat-completions schema) with images as base64 PNG data URLs.
std::string chat_wire_body(const BackendProfile& profile, const ChatRequest& request);

/// Same body with every image replaced by its content hash; used for cache keys.
std::string chat_canonical_body(const BackendProfile& profile, const ChatRequest& request);

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual std::string complete(const BackendProfile& profile, const ChatRequest& request) = 0;
};

class EmbeddingTransport {
 public:
  virtual ~EmbeddingTransport() = default;
  virtual std::vector<double> embed(const BackendProfile& profile, const UiState& image) = 0;
};

struct CallRecord {
  std::string profile;
  std::string kind;  // "chat" | "embed"
  std::string key;
  bool cache_hit = false;
  int retries = 0;
  double duration_ms = 0.0;
  bool ok = true;
  std::string error;
};

/// Thread-safe append-only log of logical backend calls.
class CallLog {
 public:
  void add(CallRecord record);
  std::vector<CallRecord> records() const;
  /// Calls that reached a transport (cache misses).
  std::size_t backend_calls() const;
  void clear();
  /// One JSON object per line. Lines are sorted so the file is independent of
  /// scheduling; timing is included only when requested.
  void write_jsonl(const std::filesystem::path& path, bool include_timing) const;

 private:
  mutable std::mutex mutex_;
  std::vector<CallRecord> records_;
};

/// Content-addressed response store with single-flight population. Each entry
/// keeps the full canonical request so a key collision is detected on read.
class ResponseCache {
 public:
  explicit ResponseCache(std::optional<std::filesystem::path> dir = std::nullopt);

  struct Lookup {
    std::string response;
    bool hit = false;
  };

  Lookup get_or_compute(const std::string& key, const std::string& canonical_request,
                        const std::function<std::string()>& compute);

  const std::optional<std::filesystem::path>& directory() const noexcept { return dir_; }

 private:
  std::optional<std::string> load(const std::string& key, const std::string& canonical_request) const;
  void store(const std::string& key, const std::string& canonical_request, const std::string& response) const;

  std::optional<std::filesystem::path> dir_;
  std::mutex mutex_;
  std::map<std::string, std::shared_future<std::string>> entries_;
};

struct ChatOptions {
  std::string suffix;        // appended as an extra user text part (re-ask)
  int sample_index = 0;      // distinguishes rollouts of one prompt
  std::optional<DecodeParams> decode;
};

/// Retrying, caching, concurrency-limited chat client.
class ChatBackend {
 public:
  ChatBackend(BackendProfile profile, std::shared_ptr<ChatTransport> transport,
              std::shared_ptr<ResponseCache> cache, std::shared_ptr<CallLog> log);

  std::string chat(const AssembledPrompt& prompt, const ChatOptions& options = {});
  std::string chat(const ChatRequest& request);

  ChatRequest build_request(const AssembledPrompt& prompt, const ChatOptions& options) const;
  const BackendProfile& profile() const noexcept { return profile_; }

 private:
  BackendProfile profile_;
  std::shared_ptr<ChatTransport> transport_;
  std::shared_ptr<ResponseCache> cache_;
  std::shared_ptr<CallLog> log_;
  std::unique_ptr<std::counting_semaphore<>> slots_;
};

/// Embedding client; results are cached unconditionally per (model, image).
class EmbeddingBackend {
 public:
  EmbeddingBackend(BackendProfile profile, std::shared_ptr<EmbeddingTransport> transport,
                   std::shared_ptr<ResponseCache> cache, std::shared_ptr<CallLog> log);

  std::vector<double> embed(const UiState& image);
  bool signed_output() const noexcept { return profile_.signed_output; }
  const BackendProfile& profile() const noexcept { return profile_; }

 private:
  BackendProfile profile_;
  std::shared_ptr<EmbeddingTransport> transport_;
  std::shared_ptr<ResponseCache> cache_;
  std::shared_ptr<CallLog> log_;
  std::unique_ptr<std::counting_semaphore<>> slots_;
};

/// Runs fn with retries on Timeout/TransportError/HttpStatus(429, 5xx).
/// Other errors propagate immediately; exhausted retries raise BackendFailure.
std::string with_retries(const BackendProfile& profile, const std::function<std::string()>& fn, int& retries_used);

// --- transports -----------------------------------------------------------

std::shared_ptr<ChatTransport> make_http_chat_transport();
std::shared_ptr<EmbeddingTransport> make_http_embedding_transport();

/// Number of HTTP requests issued by this process (all transports).
std::size_t http_request_count() noexcept;

/// Canned responses for offline runs. Chat entries are keyed by match key;
/// "<template>:*" acts as a per-template wildcard. Embedding entries are keyed
/// by image content hash.
class StubScript {
 public:
  StubScript() = default;
  StubScript(StubScript&& other) noexcept : chat_(std::move(other.chat_)), embed_(std::move(other.embed_)) {}

  static StubScript load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::optional<std::string> find_chat(const std::string& match_key, const std::string& template_name) const;
  std::optional<std::vector<double>> find_embedding(const std::string& image_hash) const;

  void put_chat(const std::string& match_key, std::string response);
  void put_embedding(const std::string& image_hash, std::vector<double> vector);

  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::string> chat_;
  std::map<std::string, std::vector<double>> embed_;
};

enum class ChatFallback { none, synthetic };
enum class EmbedFallback { none, seeded, thumbnail };

/// Replays a script; unmatched keys raise StubMiss unless a fallback is set.
std::shared_ptr<ChatTransport> make_stub_chat_transport(std::shared_ptr<const StubScript> script,
                                                        ChatFallback fallback);
std::shared_ptr<EmbeddingTransport> make_stub_embedding_transport(std::shared_ptr<const StubScript> script,
                                                                  EmbedFallback fallback, int dimension);

/// Proxies an inner transport and records every response into sink.
std::shared_ptr<ChatTransport> make_recording_chat_transport(std::shared_ptr<ChatTransport> inner,
                                                             std::shared_ptr<StubScript> sink);
std::shared_ptr<EmbeddingTransport> make_recording_embedding_transport(std::shared_ptr<EmbeddingTransport> inner,
                                                                       std::shared_ptr<StubScript> sink);

/// Deterministic response generated from the request alone (synthetic fallback).
std::string synthetic_chat_response(const ChatRequest& request);

/// Unit vector seeded from the image hash.
std::vector<double> seeded_embedding(const std::string& image_hash, int dimension);
/// Non-negative 8x16 grid of mean RGB values.
std::vector<double> thumbnail_embedding(const UiState& image);

}  // namespace renderworld
