#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>
#include <renderworld/error.hpp>
#include <renderworld/prompting.hpp>

#include "fakes.hpp"
#include "fixtures.hpp"

using namespace renderworld;
using nlohmann::json;

namespace {

const Viewport kVp{};

GuiAction act(const char* text) { return parse_action(text, kVp); }

std::string user_text(const AssembledPrompt& p) {
  std::string s;
  for (const auto& m : p.messages)
    if (m.role == Role::user)
      for (const auto& part : m.parts)
        if (part.is_text()) s += part.text();
  return s;
}

std::string all_text(const AssembledPrompt& p) {
  std::string s;
  for (const auto& m : p.messages)
    for (const auto& part : m.parts)
      if (part.is_text()) s += part.text() + "\n";
  return s;
}

// Alpha blend of an opaque foreground over an opaque background, rounded.
int blend(int fg, int bg, double alpha) { return static_cast<int>(std::lround(alpha * fg + (1.0 - alpha) * bg)); }

struct Box {
  int x0 = 1 << 30, y0 = 1 << 30, x1 = -1, y1 = -1;
};

}  // namespace

TEST_CASE("template checksums are pinned") {
  const std::map<TemplateId, std::string> pinned = {
      {TemplateId::agent_propose, "986fe6e1a4e73fa88d17117e153bd7fd66650d8abef344b07e05c846ae788d5c"},
      {TemplateId::eval_adherence, "7727767fc2c6b00624c93f5259ccfe6dd37e96fcccedc28b35ca0f34c554f465"},
      {TemplateId::eval_inverse, "047b226975e45ecc1743eb55d5f19b3d73f0314b3d22bd060eea7958f836f47d"},
      {TemplateId::eval_visual_pair, "2a7ca06f5fa2249f527d8395f92c09942d81aec9f0cdfdf8a93ae5fb18640a6f"},
      {TemplateId::initial_synthesis, "6d0008126d0acd59913efcaa0ccbaa65981cea5454ca00ffd6c097592146fef1"},
      {TemplateId::revision, "b6c5ddba425a9a2cd54f1f02c3d545274050323ec29af460568fe23c7d8a3b6c"},
      {TemplateId::reward_action, "71d94c43a00541b9da6b17ddc33945ad9a3aa08e6271513f3e49fd0ea6a0bfd9"},
      {TemplateId::reward_visual, "919578271cd32cb56de34fb1950d4c7e8a6474a60eac5bd414f3c21404443a4d"},
      {TemplateId::select_verifier, "182a304b545eaf93b06d1f2ab753fd16497453dcfd8af9e73b36ddaa79fa0fba"},
      {TemplateId::world_model_system, "1aad92bab2e7df04cee13a6ba1fe93bcd5dcb1f59e33508c23cb686765127982"},
      {TemplateId::world_model_user, "90b31782fe6c1a54257fe29d56fa443e47ba7a43817cbb435d786d73fe3b6be5"},
  };
  for (TemplateId id : kAllTemplateIds) {
    CAPTURE(to_string(id));
    CHECK(prompt_template(id).checksum == pinned.at(id));
  }
}

TEST_CASE("template slots and image counts") {
  CHECK(prompt_template(TemplateId::world_model_user).slots ==
        std::vector<std::string>{"action_json", "instruction_str", "semantic_desc"});
  CHECK(prompt_template(TemplateId::revision).slots == std::vector<std::string>{"CURRENT_HTML", "height", "width"});
  CHECK(prompt_template(TemplateId::revision).image_count == 2);
  CHECK(prompt_template(TemplateId::initial_synthesis).image_count == 1);
  CHECK(prompt_template(TemplateId::world_model_system).image_count == 0);
  CHECK(prompt_template(TemplateId::eval_inverse).image_count == 2);
}

TEST_CASE("world_model_user places the three fields after INPUT CONTEXT") {
  const auto before = rwtest::solid_state();
  const auto p = assemble(TemplateId::world_model_user,
                          {{"instruction_str", "Turn on Wi-Fi"},
                           {"semantic_desc", "User performed a CLICK"},
                           {"action_json", R"({"action":"click","x":200,"y":300})"}},
                          std::span(&before, 1));
  const std::string text = user_text(p);
  const auto ctx = text.find("INPUT CONTEXT");
  const auto a = text.find("Turn on Wi-Fi");
  const auto b = text.find("User performed a CLICK");
  const auto c = text.find(R"({"action":"click","x":200,"y":300})");
  REQUIRE(ctx != std::string::npos);
  CHECK(ctx < a);
  CHECK(a < b);
  CHECK(b < c);
  CHECK(p.decode == kGeneratorDecode);
  REQUIRE(p.messages.size() == 2);
  CHECK(p.messages[0].role == Role::system);
  CHECK(p.messages[0].parts.at(0).text().find("UI State Transition Simulator") != std::string::npos);
  // The image takes the place of the <image> line, ahead of the context.
  CHECK_FALSE(p.messages[1].parts.at(0).is_text());
  CHECK(p.messages[1].parts.at(0).image().content_hash() == before.content_hash());
}

TEST_CASE("slot errors") {
  const auto before = rwtest::solid_state();
  auto code = [&](const SlotMap& slots, std::span<const UiState> images) {
    try {
      assemble(TemplateId::world_model_user, slots, images);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  const SlotMap full{{"instruction_str", "x"}, {"semantic_desc", "y"}, {"action_json", "{}"}};
  SlotMap missing = full;
  missing.erase("action_json");
  SlotMap extra = full;
  extra["bogus"] = "1";
  CHECK(code(missing, std::span(&before, 1)) == ErrorCode::MissingSlot);
  CHECK(code(extra, std::span(&before, 1)) == ErrorCode::ExtraSlot);
  CHECK(code(full, {}) == ErrorCode::ImageCountMismatch);
}

TEST_CASE("judge templates use the judge decode profile") {
  const auto img = rwtest::solid_state();
  const std::vector<UiState> two{img, img};
  CHECK(assemble(TemplateId::reward_visual, {}, two).decode == DecodeParams{0.1, 1024});
  CHECK(assemble(TemplateId::eval_inverse, {}, two).decode == kJudgeDecode);
  CHECK(decode_class(TemplateId::initial_synthesis) == DecodeClass::generator);
  CHECK(decode_class(TemplateId::agent_propose) == DecodeClass::generator);
  CHECK(decode_class(TemplateId::select_verifier) == DecodeClass::judge);
  CHECK(decode_profile(DecodeClass::generator) == DecodeParams{0.7, 8192});
}

TEST_CASE("assembled judge prompts carry the rubric verbatim") {
  const auto img = rwtest::solid_state();
  const std::vector<UiState> two{img, img};
  const std::string visual = all_text(assemble(TemplateId::reward_visual, {}, two));
  CHECK(visual.find("If a major UI region is missing/swapped (e.g., header absent, bottom nav missing), cap the score at 5.9.") !=
        std::string::npos);
  const std::string action = all_text(assemble(
      TemplateId::reward_action, {{"instruction", "g"}, {"semantic_description", "d"}, {"action_json", "{}"}}, two));
  CHECK(action.find("If the next screen is a wrong page (unrelated destination), cap at 5.9.") != std::string::npos);
  const std::string inverse = all_text(assemble(TemplateId::eval_inverse, {}, two));
  const char* const labels[] = {"1. click:", "2. long_press:", "3. scroll:", "4. input_text:", "5. open_app:",
                                "6. navigate_home:", "7. navigate_back:", "8. wait:", "9. none:"};
  for (const char* l : labels) CHECK(inverse.find(l) != std::string::npos);
  CHECK(inverse.find("// open_app, navigate_home, navigate_back, wait, none") != std::string::npos);
  const std::string adherence = all_text(
      assemble(TemplateId::eval_adherence,
               {{"instruction", "g"}, {"semantic_description", "d"}, {"action_json", "{}"}}, two));
  CHECK(adherence.find("1.0-2.9 (Failed)") != std::string::npos);
}

TEST_CASE("revision prompt fills image slots in order") {
  const auto gt = rwtest::solid_state({255, 255, 255, 255});
  const auto render = rwtest::solid_state({0, 0, 0, 255});
  const std::vector<UiState> imgs{gt, render};
  const auto p = assemble(TemplateId::revision, {{"width", "1080"}, {"height", "2400"}, {"CURRENT_HTML", "<html/>"}}, imgs);
  std::vector<std::string> order;
  for (const auto& part : p.messages.back().parts)
    if (!part.is_text()) order.push_back(part.image().content_hash());
  CHECK(order == std::vector<std::string>{gt.content_hash(), render.content_hash()});
  const std::string text = user_text(p) + all_text(p);
  CHECK(text.find("{TARGET_IMAGE}") == std::string::npos);
  CHECK(text.find("{CURRENT_HTML}") == std::string::npos);
  CHECK(text.find("width:1080px; height:2400px;") != std::string::npos);
}

TEST_CASE("assembly is byte-stable") {
  const auto img = rwtest::solid_state();
  const std::vector<UiState> two{img, img};
  const SlotMap slots{{"instruction", "g"}, {"semantic_description", "d"}, {"action_json", "{}"}};
  const auto a = assemble(TemplateId::reward_action, slots, two);
  const auto b = assemble(TemplateId::reward_action, slots, two);
  CHECK(a.slot_digest == b.slot_digest);
  CHECK(all_text(a) == all_text(b));
  SlotMap other = slots;
  other["instruction"] = "h";
  CHECK(assemble(TemplateId::reward_action, other, two).slot_digest != a.slot_digest);
}

TEST_CASE("click overlay pixel probe") {
  const auto white = rwtest::solid_state();
  const auto out = annotate_action(white, act(R"({"action":"click","x":200,"y":300})"));
  const Image img = out.decode();
  REQUIRE(img.width() == 1080);
  REQUIRE(img.height() == 2400);
  const Rgba p = img.at(200, 300);
  const int r = blend(255, 255, kCueAlpha), g = blend(0, 255, kCueAlpha), b = blend(0, 255, kCueAlpha);
  CHECK(r == 255);
  CHECK(g == 102);
  CHECK(std::abs(int(p.r) - r) <= 1);
  CHECK(std::abs(int(p.g) - g) <= 1);
  CHECK(std::abs(int(p.b) - b) <= 1);
  CHECK(img.at(200 + kCueRadius + 1, 300) == Rgba{255, 255, 255, 255});
  CHECK(img.at(200 + kCueRadius, 300) == p);
  CHECK(out.origin() == ImageOrigin::annotated);
  CHECK(white.decode().at(200, 300) == Rgba{255, 255, 255, 255});
}

TEST_CASE("non-overlay actions return identical bytes") {
  const auto white = rwtest::solid_state();
  for (const char* a : {R"({"action":"wait"})", R"({"action":"input_text","text":"x"})", R"({"action":"navigate_back"})",
                        R"({"action":"open_app","app_name":"Clock"})", R"({"action":"navigate_home"})",
                        R"({"action":"none"})"}) {
    const auto out = annotate_action(white, act(a));
    CHECK(out.png() == white.png());
  }
}

TEST_CASE("scroll arrow follows the finger direction") {
  const auto white = rwtest::solid_state();
  auto box_of = [](const Image& img, std::vector<int>& widths) {
    Box b;
    widths.assign(static_cast<std::size_t>(img.height()), 0);
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        if (!(img.at(x, y) == Rgba{255, 255, 255, 255})) {
          b.x0 = std::min(b.x0, x), b.x1 = std::max(b.x1, x), b.y0 = std::min(b.y0, y), b.y1 = std::max(b.y1, y);
          ++widths[static_cast<std::size_t>(y)];
        }
    return b;
  };
  std::vector<int> widths;
  const Box up = box_of(annotate_action(white, act(R"({"action":"scroll","direction":"up"})")).decode(), widths);
  CHECK(std::abs((up.x0 + up.x1) / 2.0 - 540) <= 1.0);
  CHECK(std::abs((up.y0 + up.y1) / 2.0 - 1200) <= 1.0);
  CHECK(up.y1 - up.y0 + 1 >= kArrowLength - 1);
  CHECK(up.x1 - up.x0 + 1 <= kArrowHeadWidth + 1);
  // Head (wide) on top, shaft below.
  CHECK(widths[static_cast<std::size_t>(up.y0 + kArrowHeadLength / 2)] > kArrowShaftWidth + 4);
  CHECK(widths[static_cast<std::size_t>(up.y1 - 10)] <= kArrowShaftWidth + 1);

  const Box down = box_of(annotate_action(white, act(R"({"action":"scroll","direction":"down"})")).decode(), widths);
  CHECK(std::abs((down.y0 + down.y1) / 2.0 - 1200) <= 1.0);
  CHECK(widths[static_cast<std::size_t>(down.y1 - kArrowHeadLength / 2)] > kArrowShaftWidth + 4);

  const Box left = box_of(annotate_action(white, act(R"({"action":"scroll","direction":"left"})")).decode(), widths);
  CHECK(std::abs((left.x0 + left.x1) / 2.0 - 540) <= 1.0);
  CHECK(left.x1 - left.x0 + 1 >= kArrowLength - 1);
}

TEST_CASE("long press uses the circle and edge points stay in bounds") {
  const auto white = rwtest::solid_state();
  const Image img = annotate_action(white, act(R"({"action":"long_press","x":0,"y":2399})")).decode();
  CHECK(img.at(0, 2399).g == 102);
  CHECK(img.width() == 1080);
  const auto small = rwtest::solid_state({255, 255, 255, 255}, 100, 100);
  try {
    annotate_action(small, act(R"({"action":"click","x":200,"y":300})"));
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PointOutOfBounds);
  }
}

TEST_CASE("instruction expansion") {
  CHECK(expand_instruction(act(R"({"action":"click","x":200,"y":300})")) ==
        "User performed a CLICK at coordinates (200, 300). Expect the button at this location to trigger.");
  const auto text = expand_instruction(act(R"({"action":"input_text","text":"hello"})"));
  CHECK(text.find("\"hello\"") != std::string::npos);
  CHECK(text.find("MUST now contain") != std::string::npos);
  const auto scroll = expand_instruction(act(R"({"action":"scroll","direction":"down"})"));
  CHECK(scroll.find("The content should move, revealing new items") != std::string::npos);
  CHECK(scroll.find("DOWN") != std::string::npos);
  for (ActionKind k : kAllActionKinds) {
    json raw = {{"action", to_string(k)}, {"x", 1}, {"y", 2}, {"direction", "up"}, {"text", "t"}, {"app_name", "A"}};
    const auto a = canonicalize_action(raw, kVp);
    CHECK(expand_instruction(a) == expand_instruction(a));
    CHECK_FALSE(expand_instruction(a).empty());
  }
}
