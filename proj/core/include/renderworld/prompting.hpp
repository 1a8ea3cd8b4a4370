#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "renderworld/types.hpp"

namespace renderworld {

enum class TemplateId {
  initial_synthesis,
  revision,
  world_model_system,
  world_model_user,
  reward_visual,
  reward_action,
  eval_adherence,
  eval_inverse,
  eval_visual_pair,
  select_verifier,
  agent_propose,
};

inline constexpr TemplateId kAllTemplateIds[] = {
    TemplateId::initial_synthesis, TemplateId::revision,       TemplateId::world_model_system,
    TemplateId::world_model_user,  TemplateId::reward_visual,  TemplateId::reward_action,
    TemplateId::eval_adherence,    TemplateId::eval_inverse,   TemplateId::eval_visual_pair,
    TemplateId::select_verifier,   TemplateId::agent_propose,
};

std::string_view to_string(TemplateId id) noexcept;
std::optional<TemplateId> template_id_from_name(std::string_view name);

enum class DecodeClass { judge, generator };

struct DecodeParams {
  double temperature = 0.1;
  int max_tokens = 1024;

  friend bool operator==(const DecodeParams&, const DecodeParams&) = default;
};

inline constexpr DecodeParams kJudgeDecode{0.1, 1024};
inline constexpr DecodeParams kGeneratorDecode{0.7, 8192};

DecodeClass decode_class(TemplateId id) noexcept;
DecodeParams decode_profile(DecodeClass cls) noexcept;

struct PromptTemplate {
  TemplateId id;
  std::string system;  // empty when the template has no system section
  std::string user;
  std::string checksum;  // SHA-256 of the asset file bytes
  std::vector<std::string> slots;  // sorted, unique
  int image_count = 0;
};

/// Template as compiled from assets/prompts/<id>.txt.
const PromptTemplate& prompt_template(TemplateId id);

enum class Role { system, user };

std::string_view to_string(Role role) noexcept;

struct ContentPart {
  std::variant<std::string, UiState> value;

  bool is_text() const noexcept { return std::holds_alternative<std::string>(value); }
  const std::string& text() const { return std::get<std::string>(value); }
  const UiState& image() const { return std::get<UiState>(value); }
};

struct ChatMessage {
  Role role = Role::user;
  std::vector<ContentPart> parts;
};

struct AssembledPrompt {
  TemplateId template_id{};
  std::vector<ChatMessage> messages;
  DecodeParams decode;
  /// Digest over the filled slots and the image hashes; identifies the call.
  std::string slot_digest;
};

using SlotMap = std::map<std::string, std::string>;

/// Fills {name} slots and places images. Images go where the user text has an
/// "<image>" line, otherwise ahead of the text in order. Throws MissingSlot,
/// ExtraSlot, ImageCountMismatch.
AssembledPrompt assemble(TemplateId id, const SlotMap& slots, std::span<const UiState> images);

/// Draws the action cue onto the screenshot: a red circle (r=20, alpha 0.6)
/// for click/long_press, a red arrow along the finger direction for scroll.
/// Other kinds return the input unchanged. Throws PointOutOfBounds.
UiState annotate_action(const UiState& before, const GuiAction& action);

inline constexpr int kCueRadius = 20;
inline constexpr double kCueAlpha = 0.6;
inline constexpr int kArrowLength = 300;
inline constexpr int kArrowHeadLength = 40;
inline constexpr int kArrowHeadWidth = 40;
inline constexpr int kArrowShaftWidth = 12;

/// Deterministic natural-language narrative for an action.
std::string expand_instruction(const GuiAction& action);

}  // namespace renderworld
