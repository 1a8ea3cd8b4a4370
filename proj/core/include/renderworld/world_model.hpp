#pragma once

#include <optional>
#include <string>

#include "renderworld/backends.hpp"
#include "renderworld/html.hpp"
#include "renderworld/renderer.hpp"

namespace renderworld {

/// A predicted next state: generated code and its render, or the reason there is none.
struct PredictedState {
  std::optional<HtmlDocument> html;
  std::optional<UiState> image;
  bool repaired = false;
  std::string error;  // empty on success; otherwise an ErrorCode name

  bool ok() const noexcept { return image.has_value(); }
};

/// Code-then-render next-state generator: annotate the screenshot, prompt the
/// generator with the world-model templates, extract, validate, render.
class WorldModel {
 public:
  WorldModel(ChatBackend& generator, Renderer& renderer, Viewport viewport);

  AssembledPrompt build_prompt(const InteractionStep& step, const GuiAction& action) const;

  /// Backend failures propagate; document and render problems are returned in `error`.
  PredictedState predict(const InteractionStep& step, const GuiAction& action, int sample_index = 0);

 private:
  ChatBackend& generator_;
  Renderer& renderer_;
  Viewport viewport_;
};

}  // namespace renderworld
