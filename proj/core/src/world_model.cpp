#include "renderworld/world_model.hpp"

#include "renderworld/error.hpp"
#include "renderworld/prompting.hpp"

namespace renderworld {

WorldModel::WorldModel(ChatBackend& generator, Renderer& renderer, Viewport viewport)
    : generator_(generator), renderer_(renderer), viewport_(viewport) {}

AssembledPrompt WorldModel::build_prompt(const InteractionStep& step, const GuiAction& action) const {
  const UiState annotated = annotate_action(step.before, action);
  const SlotMap slots = {{"instruction_str", step.goal.text()},
                         {"semantic_desc", expand_instruction(action)},
                         {"action_json", action.raw_json()}};
  return assemble(TemplateId::world_model_user, slots, std::span(&annotated, 1));
}

PredictedState WorldModel::predict(const InteractionStep& step, const GuiAction& action, int sample_index) {
  ChatOptions options;
  options.sample_index = sample_index;
  const std::string reply = generator_.chat(build_prompt(step, action), options);

  PredictedState state;
  try {
    auto extracted = extract_html(reply, viewport_);
    state.repaired = extracted.repaired;
    state.html = std::move(extracted.document);
    auto rendered = renderer_.render(*state.html);
    state.image = std::move(rendered.image);
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::NoDocumentFound:
      case ErrorCode::InvalidDocument:
      case ErrorCode::RendererUnavailable:
      case ErrorCode::RenderTimeout:
      case ErrorCode::DimensionMismatch:
        state.error = std::string(to_string(e.code()));
        break;
      default:
        throw;
    }
  }
  return state;
}

}  // namespace renderworld
