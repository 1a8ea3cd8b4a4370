#include <doctest.h>

#include <nlohmann/json.hpp>
#include <renderworld/action.hpp>
#include <renderworld/error.hpp>
#include <renderworld/prompting.hpp>
#include <renderworld/types.hpp>

#include "fixtures.hpp"

using namespace renderworld;
using nlohmann::json;

namespace {

const Viewport kVp{};

ErrorCode code_of(const json& raw) {
  try {
    canonicalize_action(raw, kVp);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error for " << raw.dump());
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("click maps loc to point") {
  const auto a = canonicalize_action(json::parse(R"({"action":"click","loc":[200,300]})"), kVp);
  CHECK(a.kind() == ActionKind::click);
  CHECK(a.point() == Point{200, 300});
  CHECK(a.raw_json() == R"({"action":"click","x":200,"y":300})");
}

TEST_CASE("synonyms map onto the taxonomy") {
  CHECK(canonicalize_action(json::parse(R"({"action":"tap","loc":[200,300]})"), kVp) ==
        canonicalize_action(json::parse(R"({"action":"click","x":200,"y":300})"), kVp));
  CHECK(canonicalize_action(json::parse(R"({"action_type":"TYPE","text":"hi"})"), kVp).kind() == ActionKind::input_text);
  CHECK(canonicalize_action(json::parse(R"({"action":"press","coordinate":[5,6]})"), kVp).kind() ==
        ActionKind::long_press);
  CHECK(canonicalize_action(json::parse(R"({"action":"swipe","direction":"left"})"), kVp).kind() == ActionKind::scroll);
}

TEST_CASE("payload errors") {
  CHECK(code_of(json::parse(R"({"action":"scroll"})")) == ErrorCode::MissingPayload);
  CHECK(code_of(json::parse(R"({"action":"click"})")) == ErrorCode::MissingPayload);
  CHECK(code_of(json::parse(R"({"action":"input_text"})")) == ErrorCode::MissingPayload);
  CHECK(code_of(json::parse(R"({"action":"open_app"})")) == ErrorCode::MissingPayload);
  CHECK(code_of(json::parse(R"({"action":"dance"})")) == ErrorCode::UnknownActionKind);
  CHECK(code_of(json::parse(R"({"action":"click","x":1080,"y":5})")) == ErrorCode::OutOfViewport);
  CHECK(code_of(json::parse(R"({"action":"click","x":-1,"y":5})")) == ErrorCode::OutOfViewport);
  CHECK(code_of(json::parse(R"({"action":"click","x":1.5,"y":5})")) == ErrorCode::MissingPayload);
}

TEST_CASE("fields the kind does not carry are dropped") {
  const auto a = canonicalize_action(json::parse(R"({"action":"navigate_back","x":3,"text":"zz"})"), kVp);
  CHECK(a.raw_json() == R"({"action":"navigate_back"})");
  CHECK_FALSE(a.point().has_value());
}

TEST_CASE("canonical form is idempotent and round-trips") {
  const char* const inputs[] = {
      R"({"action":"tap","loc":[1,2]})",
      R"({"action":"long_press","x":1079,"y":2399})",
      R"({"action":"scroll","direction":"UP","distance":400})",
      R"({"action":"type","text":"héllo \"w\""})",
      R"({"action":"open_app","app":"Clock"})",
      R"({"action":"navigate_home"})",
      R"({"action":"navigate_back"})",
      R"({"action":"wait"})",
      R"({"action":"none"})",
  };
  for (const char* in : inputs) {
    const auto a = canonicalize_action(json::parse(in), kVp);
    const auto b = canonicalize_action(action_to_json(a), kVp);
    CHECK(a == b);
    CHECK(parse_action(a.raw_json(), kVp) == a);
    CHECK(b.raw_json() == a.raw_json());
  }
}

TEST_CASE("taxonomy equals the labels listed by the inverse-dynamics prompt") {
  const auto& tmpl = prompt_template(TemplateId::eval_inverse);
  for (ActionKind k : kAllActionKinds) {
    const std::string label(to_string(k));
    CHECK(action_kind_from_label(label) == k);
    CHECK(tmpl.system.find(". " + label + ":") != std::string::npos);
  }
  CHECK_FALSE(action_kind_from_label("swipe_up").has_value());
}

TEST_CASE("UiState keeps dimensions and content hash") {
  const auto s = UiState::from_image(Image(4, 3, {1, 2, 3, 255}), ImageOrigin::rendered);
  CHECK(s.width() == 4);
  CHECK(s.height() == 3);
  CHECK(s.content_hash().size() == 64);
  CHECK(s.decode().at(3, 2) == Rgba{1, 2, 3, 255});
  const auto copy = s;
  CHECK(&copy.png() == &s.png());
  CHECK_THROWS_AS(TaskGoal(""), Error);
}
