#include "renderworld/prompting.hpp"

#include <algorithm>
#include <array>
#include <mutex>
#include <regex>
#include <utility>

#include <nlohmann/json.hpp>

#include "renderworld/digest.hpp"
#include "renderworld/error.hpp"

namespace renderworld {

namespace detail {
struct EmbeddedPrompt {
  std::string_view name;
  std::string_view text;
};
extern const EmbeddedPrompt embedded_prompts[];
extern const std::size_t embedded_prompt_count;
}  // namespace detail

namespace {

constexpr std::string_view kImageMarker = "<image>";

// Screenshots each template expects, in attachment order.
constexpr int expected_images(TemplateId id) {
  switch (id) {
    case TemplateId::world_model_system: return 0;
    case TemplateId::initial_synthesis:
    case TemplateId::world_model_user:
    case TemplateId::agent_propose: return 1;
    default: return 2;
  }
}

bool is_image_slot(std::string_view name) {
  return name.size() > 6 && name.substr(name.size() - 6) == "_IMAGE";
}

const std::regex& slot_regex() {
  static const std::regex kSlot(R"(\{([A-Za-z_][A-Za-z0-9_]*)\})");
  return kSlot;
}

PromptTemplate parse_template(TemplateId id, std::string_view text) {
  PromptTemplate t;
  t.id = id;
  t.checksum = sha256_hex(text);
  std::string* current = nullptr;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    const std::size_t next = eol == std::string_view::npos ? text.size() : eol + 1;
    const std::string_view line = text.substr(pos, (eol == std::string_view::npos ? text.size() : eol) - pos);
    if (line == "=== system ===") {
      current = &t.system;
    } else if (line == "=== user ===") {
      current = &t.user;
    } else if (current) {
      current->append(text.substr(pos, next - pos));
    } else if (!line.empty()) {
      throw Error(ErrorCode::UnknownTemplate, "prompt asset " + std::string(to_string(id)) + " has text before a section marker");
    }
    pos = next;
  }
  for (std::string* s : {&t.system, &t.user})
    while (!s->empty() && s->back() == '\n') s->pop_back();

  std::vector<std::string> image_names;
  for (const std::string* s : {&t.system, &t.user})
    for (auto it = std::sregex_iterator(s->begin(), s->end(), slot_regex()); it != std::sregex_iterator(); ++it) {
      const std::string name = (*it)[1];
      if (is_image_slot(name)) image_names.push_back(name);
      else t.slots.push_back(name);
    }
  std::sort(image_names.begin(), image_names.end());
  const int image_slots = static_cast<int>(std::unique(image_names.begin(), image_names.end()) - image_names.begin());
  std::sort(t.slots.begin(), t.slots.end());
  t.slots.erase(std::unique(t.slots.begin(), t.slots.end()), t.slots.end());

  int markers = 0;
  for (std::size_t p = t.user.find(kImageMarker); p != std::string::npos; p = t.user.find(kImageMarker, p + 1)) ++markers;
  t.image_count = expected_images(id);
  if (markers + image_slots != 0 && markers + image_slots != t.image_count)
    throw Error(ErrorCode::ImageCountMismatch, "prompt asset " + std::string(to_string(id)) + " image placement disagrees with its image count");
  return t;
}

const std::array<PromptTemplate, std::size(kAllTemplateIds)>& templates() {
  static const auto table = [] {
    std::array<PromptTemplate, std::size(kAllTemplateIds)> out;
    for (TemplateId id : kAllTemplateIds) {
      const auto* begin = detail::embedded_prompts;
      const auto* end = begin + detail::embedded_prompt_count;
      const auto it = std::find_if(begin, end, [&](const auto& p) { return p.name == to_string(id); });
      if (it == end) throw Error(ErrorCode::UnknownTemplate, "no prompt asset for " + std::string(to_string(id)));
      out[static_cast<std::size_t>(id)] = parse_template(id, it->text);
    }
    return out;
  }();
  return table;
}

// Fills slots in one pass; filled values are never rescanned.
std::string fill(const std::string& text, const SlotMap& slots) {
  std::string out;
  std::size_t last = 0;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), slot_regex()); it != std::sregex_iterator(); ++it) {
    const std::string name = (*it)[1];
    if (is_image_slot(name)) continue;
    out.append(text, last, static_cast<std::size_t>(it->position()) - last);
    out += slots.at(name);
    last = static_cast<std::size_t>(it->position() + it->length());
  }
  out.append(text, last);
  return out;
}

// Splits filled user text at "<image>" lines and {*_IMAGE} slots, inserting
// screenshots in order. A repeated image slot refers back to the screenshot
// by its bare name. Without any marker, screenshots precede the text.
std::vector<ContentPart> place_images(const std::string& text, std::span<const UiState> images) {
  static const std::regex kMarker(R"((^<image>\n?|\{([A-Za-z_][A-Za-z0-9_]*_IMAGE)\}))", std::regex::multiline);
  std::vector<ContentPart> parts;
  std::vector<std::string> seen;
  std::string pending;
  std::size_t last = 0, used = 0;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kMarker); it != std::sregex_iterator(); ++it) {
    pending += text.substr(last, static_cast<std::size_t>(it->position()) - last);
    last = static_cast<std::size_t>(it->position() + it->length());
    const std::string slot = (*it)[2];
    if (!slot.empty() && std::find(seen.begin(), seen.end(), slot) != seen.end()) {
      pending += slot;
      continue;
    }
    if (!slot.empty()) seen.push_back(slot);
    if (!pending.empty()) parts.push_back({std::exchange(pending, {})});
    parts.push_back({images[used++]});
  }
  pending += text.substr(last);
  if (used == 0) {
    for (const auto& image : images) parts.push_back({image});
    parts.push_back({pending});
    return parts;
  }
  if (!pending.empty()) parts.push_back({pending});
  return parts;
}

}  // namespace

std::string_view to_string(TemplateId id) noexcept {
  switch (id) {
    case TemplateId::initial_synthesis: return "initial_synthesis";
    case TemplateId::revision: return "revision";
    case TemplateId::world_model_system: return "world_model_system";
    case TemplateId::world_model_user: return "world_model_user";
    case TemplateId::reward_visual: return "reward_visual";
    case TemplateId::reward_action: return "reward_action";
    case TemplateId::eval_adherence: return "eval_adherence";
    case TemplateId::eval_inverse: return "eval_inverse";
    case TemplateId::eval_visual_pair: return "eval_visual_pair";
    case TemplateId::select_verifier: return "select_verifier";
    case TemplateId::agent_propose: return "agent_propose";
  }
  return "unknown";
}

std::optional<TemplateId> template_id_from_name(std::string_view name) {
  for (TemplateId id : kAllTemplateIds)
    if (to_string(id) == name) return id;
  return std::nullopt;
}

std::string_view to_string(Role role) noexcept { return role == Role::system ? "system" : "user"; }

DecodeClass decode_class(TemplateId id) noexcept {
  switch (id) {
    case TemplateId::initial_synthesis:
    case TemplateId::revision:
    case TemplateId::world_model_system:
    case TemplateId::world_model_user:
    case TemplateId::agent_propose: return DecodeClass::generator;
    default: return DecodeClass::judge;
  }
}

DecodeParams decode_profile(DecodeClass cls) noexcept {
  return cls == DecodeClass::judge ? kJudgeDecode : kGeneratorDecode;
}

const PromptTemplate& prompt_template(TemplateId id) { return templates()[static_cast<std::size_t>(id)]; }

AssembledPrompt assemble(TemplateId id, const SlotMap& slots, std::span<const UiState> images) {
  const PromptTemplate& t = prompt_template(id);
  for (const auto& name : t.slots)
    if (!slots.contains(name)) throw Error(ErrorCode::MissingSlot, std::string(to_string(id)) + ": missing slot " + name);
  for (const auto& [name, value] : slots)
    if (!std::binary_search(t.slots.begin(), t.slots.end(), name))
      throw Error(ErrorCode::ExtraSlot, std::string(to_string(id)) + ": unexpected slot " + name);
  if (static_cast<int>(images.size()) != t.image_count)
    throw Error(ErrorCode::ImageCountMismatch, std::string(to_string(id)) + " expects " + std::to_string(t.image_count) +
                                                   " image(s), got " + std::to_string(images.size()));
  for (const auto& image : images)
    if (!image.valid()) throw Error(ErrorCode::InvalidArgument, "prompt image has no data");

  AssembledPrompt prompt;
  prompt.template_id = id;
  prompt.decode = decode_profile(decode_class(id));
  std::string system = t.system;
  if (id == TemplateId::world_model_user) system = prompt_template(TemplateId::world_model_system).system;
  if (!system.empty()) prompt.messages.push_back({Role::system, {{fill(system, slots)}}});
  if (!t.user.empty()) prompt.messages.push_back({Role::user, place_images(fill(t.user, slots), images)});

  nlohmann::json key = {{"template", to_string(id)}, {"checksum", t.checksum}, {"slots", slots}};
  auto& hashes = key["images"] = nlohmann::json::array();
  for (const auto& image : images) hashes.push_back(image.content_hash());
  prompt.slot_digest = sha256_hex(key.dump());
  return prompt;
}

}  // namespace renderworld
