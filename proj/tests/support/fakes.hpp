#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <renderworld/backends.hpp>
#include <renderworld/renderer.hpp>
#include <renderworld/synthesis.hpp>

namespace rwtest {

/// Chat transport answering from a callback; records every request.
class ScriptedChat final : public renderworld::ChatTransport {
 public:
  using Fn = std::function<std::string(const renderworld::ChatRequest&, int call)>;

  explicit ScriptedChat(Fn fn) : fn_(std::move(fn)) {}

  /// Replies in order; the last reply repeats once the list runs out.
  static std::shared_ptr<ScriptedChat> replies(std::vector<std::string> replies);

  std::string complete(const renderworld::BackendProfile& profile, const renderworld::ChatRequest& request) override;

  int calls() const { return calls_.load(); }
  std::vector<renderworld::ChatRequest> requests() const;

 private:
  Fn fn_;
  std::atomic<int> calls_{0};
  mutable std::mutex mutex_;
  std::vector<renderworld::ChatRequest> requests_;
};

class ScriptedEmbedding final : public renderworld::EmbeddingTransport {
 public:
  using Fn = std::function<std::vector<double>(const renderworld::UiState&)>;
  explicit ScriptedEmbedding(Fn fn) : fn_(std::move(fn)) {}
  std::vector<double> embed(const renderworld::BackendProfile&, const renderworld::UiState& image) override {
    ++calls_;
    return fn_(image);
  }
  int calls() const { return calls_.load(); }

 private:
  Fn fn_;
  std::atomic<int> calls_{0};
};

/// Gate returning scripted scores in call order; "below" once exhausted.
class ScriptedGate final : public renderworld::SimilarityGate {
 public:
  explicit ScriptedGate(std::vector<double> scores, double exhausted = 0.0)
      : scores_(std::move(scores)), exhausted_(exhausted) {}
  double score(const renderworld::UiState&, const renderworld::UiState&) override;
  int calls() const { return calls_; }

 private:
  std::vector<double> scores_;
  double exhausted_;
  int calls_ = 0;
  std::mutex mutex_;
};

renderworld::BackendProfile chat_profile(const std::string& id = "test", bool cache = false,
                                         renderworld::DecodeClass cls = renderworld::DecodeClass::judge);
renderworld::BackendProfile embedding_profile(const std::string& id = "emb", int dimension = 0, bool signed_output = true);

/// Owns the shared cache and call log for a set of backends.
struct Backends {
  std::shared_ptr<renderworld::ResponseCache> cache = std::make_shared<renderworld::ResponseCache>();
  std::shared_ptr<renderworld::CallLog> log = std::make_shared<renderworld::CallLog>();

  std::unique_ptr<renderworld::ChatBackend> chat(std::shared_ptr<renderworld::ChatTransport> transport,
                                                 renderworld::BackendProfile profile = chat_profile());
  std::unique_ptr<renderworld::EmbeddingBackend> embedding(std::shared_ptr<renderworld::EmbeddingTransport> transport,
                                                           renderworld::BackendProfile profile = embedding_profile());
};

std::unique_ptr<renderworld::Renderer> stub_renderer();

/// Solid-color screenshot (cached per color).
renderworld::UiState solid_state(renderworld::Rgba color = {255, 255, 255, 255}, int width = 1080, int height = 2400);

/// Conforming document whose render-target is one solid color.
std::string solid_html(const std::string& css_color, int width = 1080, int height = 2400);

/// JSON reply text for the {"score","reasoning"} judge schema.
std::string score_reply(double score, const std::string& reasoning = "ok");

}  // namespace rwtest
