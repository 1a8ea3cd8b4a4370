#include "fakes.hpp"

#include <map>
#include <tuple>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"

namespace rwtest {

using namespace renderworld;

std::shared_ptr<ScriptedChat> ScriptedChat::replies(std::vector<std::string> replies) {
  return std::make_shared<ScriptedChat>([replies = std::move(replies)](const ChatRequest&, int call) {
    return replies.at(std::min<std::size_t>(static_cast<std::size_t>(call), replies.size() - 1));
  });
}

std::string ScriptedChat::complete(const BackendProfile&, const ChatRequest& request) {
  int call = 0;
  {
    std::lock_guard lock(mutex_);
    requests_.push_back(request);
    call = calls_++;
  }
  return fn_(request, call);
}

std::vector<ChatRequest> ScriptedChat::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

double ScriptedGate::score(const UiState&, const UiState&) {
  std::lock_guard lock(mutex_);
  const auto i = static_cast<std::size_t>(calls_++);
  return i < scores_.size() ? scores_[i] : exhausted_;
}

BackendProfile chat_profile(const std::string& id, bool cache, DecodeClass cls) {
  BackendProfile p;
  p.id = id;
  p.kind = BackendKind::chat;
  p.model_name = "test-model";
  p.decode_class = cls;
  p.cache = cache;
  p.retries = 2;
  p.backoff_ms = {0, 0};
  p.concurrency = 8;
  return p;
}

BackendProfile embedding_profile(const std::string& id, int dimension, bool signed_output) {
  BackendProfile p;
  p.id = id;
  p.kind = BackendKind::embedding;
  p.model_name = "test-embedder";
  p.dimension = dimension;
  p.signed_output = signed_output;
  p.backoff_ms = {0, 0};
  p.concurrency = 8;
  return p;
}

std::unique_ptr<ChatBackend> Backends::chat(std::shared_ptr<ChatTransport> transport, BackendProfile profile) {
  return std::make_unique<ChatBackend>(std::move(profile), std::move(transport), cache, log);
}

std::unique_ptr<EmbeddingBackend> Backends::embedding(std::shared_ptr<EmbeddingTransport> transport,
                                                      BackendProfile profile) {
  return std::make_unique<EmbeddingBackend>(std::move(profile), std::move(transport), cache, log);
}

std::unique_ptr<Renderer> stub_renderer() { return std::make_unique<Renderer>(make_stub_render_endpoint()); }

UiState solid_state(Rgba color, int width, int height) {
  static std::mutex mutex;
  static std::map<std::tuple<int, int, int, int, int>, UiState> memo;
  std::lock_guard lock(mutex);
  const auto key = std::make_tuple(int(color.r), int(color.g), int(color.b), width, height);
  auto it = memo.find(key);
  if (it == memo.end())
    it = memo.emplace(key, UiState::from_image(Image(width, height, color), ImageOrigin::ground_truth)).first;
  return it->second;
}

std::string solid_html(const std::string& css_color, int width, int height) {
  return "<!DOCTYPE html>\n<html>\n<head>\n<style>\n"
         "body { margin: 0; padding: 0; background: transparent; }\n"
         "#render-target { width: " +
         std::to_string(width) + "px; height: " + std::to_string(height) +
         "px; position: relative; overflow: hidden; background: " + css_color +
         "; }\n</style>\n</head>\n<body>\n<div id=\"render-target\"></div>\n</body>\n</html>\n";
}

std::string score_reply(double score, const std::string& reasoning) {
  return nlohmann::json{{"score", score}, {"reasoning", reasoning}}.dump();
}

}  // namespace rwtest
