#include "renderworld/action.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <nlohmann/json.hpp>

#include "renderworld/error.hpp"
#include "renderworld/types.hpp"

namespace renderworld {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

// Fixed synonym table; anything not here or in the taxonomy is rejected.
std::optional<ActionKind> resolve_verb(std::string_view verb) {
  const std::string v = lower(verb);
  if (v == "tap") return ActionKind::click;
  if (v == "type") return ActionKind::input_text;
  if (v == "press") return ActionKind::long_press;
  if (v == "swipe") return ActionKind::scroll;
  return action_kind_from_label(v);
}

int integral_coordinate(const nlohmann::json& v, const char* what) {
  if (!v.is_number()) throw Error(ErrorCode::MissingPayload, std::string(what) + " is not a number");
  const double d = v.get<double>();
  if (std::floor(d) != d) throw Error(ErrorCode::MissingPayload, std::string(what) + " must be an integer pixel value");
  return static_cast<int>(d);
}

std::optional<Point> read_point(const nlohmann::json& raw) {
  for (const char* key : {"loc", "coordinate", "point"}) {
    if (auto it = raw.find(key); it != raw.end() && !it->is_null()) {
      if (!it->is_array() || it->size() != 2) throw Error(ErrorCode::MissingPayload, std::string(key) + " must be [x, y]");
      return Point{integral_coordinate((*it)[0], "x"), integral_coordinate((*it)[1], "y")};
    }
  }
  const auto x = raw.find("x");
  const auto y = raw.find("y");
  if (x != raw.end() && y != raw.end()) return Point{integral_coordinate(*x, "x"), integral_coordinate(*y, "y")};
  return std::nullopt;
}

std::optional<std::string> read_string(const nlohmann::json& raw, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    if (auto it = raw.find(key); it != raw.end() && it->is_string()) return it->get<std::string>();
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(ActionKind kind) noexcept {
  switch (kind) {
    case ActionKind::click: return "click";
    case ActionKind::long_press: return "long_press";
    case ActionKind::scroll: return "scroll";
    case ActionKind::input_text: return "input_text";
    case ActionKind::open_app: return "open_app";
    case ActionKind::navigate_home: return "navigate_home";
    case ActionKind::navigate_back: return "navigate_back";
    case ActionKind::wait: return "wait";
    case ActionKind::none: return "none";
  }
  return "none";
}

std::optional<ActionKind> action_kind_from_label(std::string_view label) {
  const std::string l = lower(label);
  for (ActionKind k : kAllActionKinds)
    if (to_string(k) == l) return k;
  return std::nullopt;
}

std::string_view to_string(Direction direction) noexcept {
  switch (direction) {
    case Direction::up: return "up";
    case Direction::down: return "down";
    case Direction::left: return "left";
    case Direction::right: return "right";
  }
  return "up";
}

std::optional<Direction> direction_from_label(std::string_view label) {
  const std::string l = lower(label);
  for (Direction d : {Direction::up, Direction::down, Direction::left, Direction::right})
    if (to_string(d) == l) return d;
  return std::nullopt;
}

GuiAction canonicalize_action(const nlohmann::json& raw, const Viewport& viewport) {
  if (!raw.is_object()) throw Error(ErrorCode::UnknownActionKind, "action must be a JSON object");
  const auto verb = read_string(raw, {"action", "action_type"});
  if (!verb) throw Error(ErrorCode::UnknownActionKind, "action record names no kind");
  const auto kind = resolve_verb(*verb);
  if (!kind) throw Error(ErrorCode::UnknownActionKind, "unknown action kind '" + *verb + "'");

  GuiAction a;
  a.kind_ = *kind;
  nlohmann::json out = {{"action", std::string(to_string(*kind))}};

  switch (*kind) {
    case ActionKind::click:
    case ActionKind::long_press: {
      const auto p = read_point(raw);
      if (!p) throw Error(ErrorCode::MissingPayload, std::string(to_string(*kind)) + " requires a point");
      if (p->x < 0 || p->y < 0 || p->x >= viewport.width || p->y >= viewport.height)
        throw Error(ErrorCode::OutOfViewport, "point (" + std::to_string(p->x) + ", " + std::to_string(p->y) +
                                                  ") lies outside the " + std::to_string(viewport.width) + "x" +
                                                  std::to_string(viewport.height) + " viewport");
      a.point_ = p;
      out["x"] = p->x;
      out["y"] = p->y;
      break;
    }
    case ActionKind::scroll: {
      const auto label = read_string(raw, {"direction"});
      if (!label) throw Error(ErrorCode::MissingPayload, "scroll requires a direction");
      const auto dir = direction_from_label(*label);
      if (!dir) throw Error(ErrorCode::MissingPayload, "scroll direction '" + *label + "' is not up/down/left/right");
      a.direction_ = dir;
      out["direction"] = std::string(to_string(*dir));
      if (auto it = raw.find("distance"); it != raw.end() && it->is_number()) {
        a.distance_ = integral_coordinate(*it, "distance");
        out["distance"] = *a.distance_;
      }
      break;
    }
    case ActionKind::input_text: {
      const auto text = read_string(raw, {"text"});
      if (!text) throw Error(ErrorCode::MissingPayload, "input_text requires text");
      a.text_ = text;
      out["text"] = *text;
      break;
    }
    case ActionKind::open_app: {
      const auto app = read_string(raw, {"app_name", "app"});
      if (!app || app->empty()) throw Error(ErrorCode::MissingPayload, "open_app requires app_name");
      a.app_name_ = app;
      out["app_name"] = *app;
      break;
    }
    case ActionKind::navigate_home:
    case ActionKind::navigate_back:
    case ActionKind::wait:
    case ActionKind::none:
      break;
  }
  a.raw_json_ = out.dump();
  return a;
}

GuiAction parse_action(std::string_view json_text, const Viewport& viewport) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::UnknownActionKind, std::string("action is not valid JSON: ") + e.what());
  }
  return canonicalize_action(j, viewport);
}

nlohmann::json action_to_json(const GuiAction& action) { return nlohmann::json::parse(action.raw_json()); }

}  // namespace renderworld
