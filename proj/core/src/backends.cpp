#include "renderworld/backends.hpp"

#include <algorithm>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "renderworld/corpus.hpp"
#include "renderworld/digest.hpp"
#include "renderworld/error.hpp"

namespace renderworld {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(BackendKind kind) noexcept {
  switch (kind) {
    case BackendKind::chat: return "chat";
    case BackendKind::embedding: return "embedding";
    case BackendKind::render: return "render";
  }
  return "unknown";
}

DecodeParams BackendProfile::decode_defaults() const {
  return decode_override.value_or(decode_profile(decode_class));
}

namespace {

json wire_messages(const ChatRequest& request, bool canonical) {
  json messages = json::array();
  for (const auto& message : request.messages) {
    json content = json::array();
    for (const auto& part : message.parts) {
      if (part.is_text()) {
        content.push_back({{"type", "text"}, {"text", part.text()}});
      } else {
        const std::string url = canonical ? "sha256:" + part.image().content_hash()
                                          : "data:image/png;base64," + base64_encode(part.image().png());
        content.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
      }
    }
    messages.push_back({{"role", to_string(message.role)}, {"content", std::move(content)}});
  }
  return messages;
}

json wire_body(const BackendProfile& profile, const ChatRequest& request, bool canonical) {
  return {{"model", profile.model_name},
          {"messages", wire_messages(request, canonical)},
          {"temperature", request.decode.temperature},
          {"max_tokens", request.decode.max_tokens}};
}

bool retryable(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Timeout:
    case ErrorCode::TransportError: return true;
    case ErrorCode::HttpStatus: {
      const int status = static_cast<const HttpStatusError&>(e).status();
      return status == 429 || status >= 500;
    }
    default: return false;
  }
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

std::unique_ptr<std::counting_semaphore<>> make_slots(int concurrency) {
  return std::make_unique<std::counting_semaphore<>>(std::max(concurrency, 1));
}

struct SlotGuard {
  std::counting_semaphore<>& sem;
  explicit SlotGuard(std::counting_semaphore<>& s) : sem(s) { sem.acquire(); }
  ~SlotGuard() { sem.release(); }
};

}  // namespace

std::string chat_wire_body(const BackendProfile& profile, const ChatRequest& request) {
  return wire_body(profile, request, false).dump();
}

std::string chat_canonical_body(const BackendProfile& profile, const ChatRequest& request) {
  return wire_body(profile, request, true).dump();
}

// --- CallLog ----------------------------------------------------------------

void CallLog::add(CallRecord record) {
  std::lock_guard lock(mutex_);
  records_.push_back(std::move(record));
}

std::vector<CallRecord> CallLog::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::size_t CallLog::backend_calls() const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(
      std::count_if(records_.begin(), records_.end(), [](const CallRecord& r) { return !r.cache_hit; }));
}

void CallLog::clear() {
  std::lock_guard lock(mutex_);
  records_.clear();
}

void CallLog::write_jsonl(const fs::path& path, bool include_timing) const {
  std::vector<std::string> lines;
  for (const auto& r : records()) {
    json j = {{"profile", r.profile}, {"kind", r.kind}, {"key", r.key}, {"cache_hit", r.cache_hit},
              {"retries", r.retries}, {"ok", r.ok}};
    if (!r.error.empty()) j["error"] = r.error;
    if (include_timing) j["duration_ms"] = r.duration_ms;
    lines.push_back(j.dump());
  }
  std::sort(lines.begin(), lines.end());
  std::string text;
  for (const auto& line : lines) text += line + "\n";
  write_file_atomic(path, text);
}

// --- ResponseCache ------------------------------------------------------------

ResponseCache::ResponseCache(std::optional<fs::path> dir) : dir_(std::move(dir)) {}

std::optional<std::string> ResponseCache::load(const std::string& key, const std::string& canonical_request) const {
  if (!dir_) return std::nullopt;
  const fs::path path = *dir_ / "calls" / key.substr(0, 2) / (key + ".json");
  std::error_code ec;
  if (!fs::exists(path, ec)) return std::nullopt;
  try {
    const json entry = json::parse(read_file_text(path));
    if (entry.at("request").get<std::string>() != canonical_request) {
      spdlog::warn("response cache collision on {}; ignoring stored entry", key);
      return std::nullopt;
    }
    return entry.at("response").get<std::string>();
  } catch (const std::exception& e) {
    spdlog::warn("unreadable response cache entry {}: {}", path.string(), e.what());
    return std::nullopt;
  }
}

void ResponseCache::store(const std::string& key, const std::string& canonical_request,
                          const std::string& response) const {
  if (!dir_) return;
  const fs::path dir = *dir_ / "calls" / key.substr(0, 2);
  fs::create_directories(dir);
  const json entry = {{"request", canonical_request}, {"response", response}};
  write_file_atomic(dir / (key + ".json"), entry.dump() + "\n");
}

ResponseCache::Lookup ResponseCache::get_or_compute(const std::string& key, const std::string& canonical_request,
                                                    const std::function<std::string()>& compute) {
  // The in-memory key folds in the canonical request so that a digest
  // collision can never hand one request another's response.
  const std::string memo_key = key + "\n" + canonical_request;
  std::promise<std::string> promise;
  std::shared_future<std::string> future;
  bool owner = false;
  {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(memo_key); it != entries_.end()) {
      future = it->second;
    } else {
      future = promise.get_future().share();
      entries_.emplace(memo_key, future);
      owner = true;
    }
  }
  if (!owner) return {future.get(), true};

  try {
    if (auto stored = load(key, canonical_request)) {
      promise.set_value(*stored);
      return {*stored, true};
    }
    std::string response = compute();
    store(key, canonical_request, response);
    promise.set_value(response);
    return {std::move(response), false};
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard lock(mutex_);
    entries_.erase(memo_key);
    throw;
  }
}

// --- retries ----------------------------------------------------------------

std::string with_retries(const BackendProfile& profile, const std::function<std::string()>& fn, int& retries_used) {
  retries_used = 0;
  for (int attempt = 0;; ++attempt) {
    try {
      return fn();
    } catch (const Error& e) {
      if (!retryable(e)) throw;
      if (attempt >= profile.retries)
        throw Error(ErrorCode::BackendFailure, profile.id + ": giving up after " + std::to_string(attempt + 1) +
                                                   " attempt(s): " + e.what());
      int delay = 0;
      if (!profile.backoff_ms.empty())
        delay = profile.backoff_ms[std::min<std::size_t>(attempt, profile.backoff_ms.size() - 1)];
      spdlog::debug("{}: retry {} after {} ms ({})", profile.id, attempt + 1, delay, e.what());
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
      ++retries_used;
    }
  }
}

// --- ChatBackend --------------------------------------------------------------

ChatBackend::ChatBackend(BackendProfile profile, std::shared_ptr<ChatTransport> transport,
                         std::shared_ptr<ResponseCache> cache, std::shared_ptr<CallLog> log)
    : profile_(std::move(profile)),
      transport_(std::move(transport)),
      cache_(cache ? std::move(cache) : std::make_shared<ResponseCache>()),
      log_(log ? std::move(log) : std::make_shared<CallLog>()),
      slots_(make_slots(profile_.concurrency)) {
  if (profile_.kind != BackendKind::chat)
    throw Error(ErrorCode::ConfigInvalid, "profile " + profile_.id + " is not a chat profile");
  if (!transport_) throw Error(ErrorCode::InvalidArgument, "chat backend requires a transport");
}

ChatRequest ChatBackend::build_request(const AssembledPrompt& prompt, const ChatOptions& options) const {
  ChatRequest request;
  request.template_name = std::string(to_string(prompt.template_id));
  request.messages = prompt.messages;
  request.decode = options.decode.value_or(profile_.decode_override.value_or(prompt.decode));
  request.match_key = request.template_name + ":" + prompt.slot_digest.substr(0, 16);
  if (!options.suffix.empty()) {
    if (request.messages.empty() || request.messages.back().role != Role::user)
      request.messages.push_back({Role::user, {}});
    request.messages.back().parts.push_back({options.suffix});
    request.match_key += "/retry";
  }
  if (options.sample_index > 0) request.match_key += "/s" + std::to_string(options.sample_index);
  return request;
}

std::string ChatBackend::chat(const AssembledPrompt& prompt, const ChatOptions& options) {
  return chat(build_request(prompt, options));
}

std::string ChatBackend::chat(const ChatRequest& request) {
  const auto start = std::chrono::steady_clock::now();
  CallRecord record;
  record.profile = profile_.id;
  record.kind = "chat";
  record.key = request.match_key;
  auto call = [&] {
    SlotGuard guard(*slots_);
    return with_retries(profile_, [&] { return transport_->complete(profile_, request); }, record.retries);
  };
  try {
    std::string response;
    if (profile_.cache && request.decode.temperature <= kCacheTemperatureThreshold) {
      const std::string canonical = chat_canonical_body(profile_, request);
      const std::string key = sha256_hex(json{{"profile", profile_.id},
                                              {"model", profile_.model_name},
                                              {"match_key", request.match_key},
                                              {"body", canonical}}
                                             .dump());
      auto lookup = cache_->get_or_compute(key, canonical, call);
      record.cache_hit = lookup.hit;
      response = std::move(lookup.response);
    } else {
      response = call();
    }
    record.duration_ms = elapsed_ms(start);
    log_->add(record);
    return response;
  } catch (const std::exception& e) {
    record.ok = false;
    record.error = e.what();
    record.duration_ms = elapsed_ms(start);
    log_->add(record);
    throw;
  }
}

// --- EmbeddingBackend ---------------------------------------------------------

EmbeddingBackend::EmbeddingBackend(BackendProfile profile, std::shared_ptr<EmbeddingTransport> transport,
                                   std::shared_ptr<ResponseCache> cache, std::shared_ptr<CallLog> log)
    : profile_(std::move(profile)),
      transport_(std::move(transport)),
      cache_(cache ? std::move(cache) : std::make_shared<ResponseCache>()),
      log_(log ? std::move(log) : std::make_shared<CallLog>()),
      slots_(make_slots(profile_.concurrency)) {
  if (profile_.kind != BackendKind::embedding)
    throw Error(ErrorCode::ConfigInvalid, "profile " + profile_.id + " is not an embedding profile");
  if (!transport_) throw Error(ErrorCode::InvalidArgument, "embedding backend requires a transport");
}

std::vector<double> EmbeddingBackend::embed(const UiState& image) {
  const auto start = std::chrono::steady_clock::now();
  CallRecord record;
  record.profile = profile_.id;
  record.kind = "embed";
  record.key = "embed:" + image.content_hash().substr(0, 16);
  try {
    const json request = {{"profile", profile_.id},
                          {"model", profile_.model_name},
                          {"image", image.content_hash()},
                          {"input_size", profile_.input_size ? json::array({profile_.input_size->width,
                                                                            profile_.input_size->height})
                                                             : json()}};
    const std::string canonical = request.dump();
    auto lookup = cache_->get_or_compute(sha256_hex(canonical), canonical, [&] {
      SlotGuard guard(*slots_);
      UiState input = image;
      if (profile_.input_size && input.viewport() != *profile_.input_size)
        input = UiState::from_image(resize_box(image.decode(), profile_.input_size->width, profile_.input_size->height),
                                    image.origin());
      std::vector<double> vec;
      with_retries(
          profile_,
          [&] {
            vec = transport_->embed(profile_, input);
            return std::string();
          },
          record.retries);
      if (profile_.dimension > 0 && static_cast<int>(vec.size()) != profile_.dimension)
        throw Error(ErrorCode::DimensionMismatchEmbedding,
                    profile_.id + ": provider returned " + std::to_string(vec.size()) + " dimensions, profile expects " +
                        std::to_string(profile_.dimension));
      return json(vec).dump();
    });
    record.cache_hit = lookup.hit;
    record.duration_ms = elapsed_ms(start);
    log_->add(record);
    return json::parse(lookup.response).get<std::vector<double>>();
  } catch (const std::exception& e) {
    record.ok = false;
    record.error = e.what();
    record.duration_ms = elapsed_ms(start);
    log_->add(record);
    throw;
  }
}

}  // namespace renderworld
