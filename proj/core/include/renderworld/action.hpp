#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

namespace renderworld {

struct Viewport;

/// The nine-label action taxonomy shared by the inverse-dynamics judge.
enum class ActionKind {
  click,
  long_press,
  scroll,
  input_text,
  open_app,
  navigate_home,
  navigate_back,
  wait,
  none,
};

inline constexpr std::array<ActionKind, 9> kAllActionKinds = {
    ActionKind::click,         ActionKind::long_press,    ActionKind::scroll,
    ActionKind::input_text,    ActionKind::open_app,      ActionKind::navigate_home,
    ActionKind::navigate_back, ActionKind::wait,          ActionKind::none,
};

std::string_view to_string(ActionKind kind) noexcept;
std::optional<ActionKind> action_kind_from_label(std::string_view label);

enum class Direction { up, down, left, right };

std::string_view to_string(Direction direction) noexcept;
std::optional<Direction> direction_from_label(std::string_view label);

struct Point {
  int x = 0;
  int y = 0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// A validated user action. Construct through canonicalize_action or parse_action.
class GuiAction {
 public:
  ActionKind kind() const noexcept { return kind_; }
  const std::optional<Point>& point() const noexcept { return point_; }
  const std::optional<Direction>& direction() const noexcept { return direction_; }
  const std::optional<std::string>& text() const noexcept { return text_; }
  const std::optional<std::string>& app_name() const noexcept { return app_name_; }
  /// Scroll distance as logged; parsed but not consumed by any prompt.
  const std::optional<int>& distance() const noexcept { return distance_; }

  /// Canonical single-line form: sorted keys, no whitespace.
  const std::string& raw_json() const noexcept { return raw_json_; }

  friend bool operator==(const GuiAction& a, const GuiAction& b) { return a.raw_json_ == b.raw_json_; }

 private:
  friend GuiAction canonicalize_action(const nlohmann::json& raw, const Viewport& viewport);

  ActionKind kind_ = ActionKind::none;
  std::optional<Point> point_;
  std::optional<Direction> direction_;
  std::optional<std::string> text_;
  std::optional<std::string> app_name_;
  std::optional<int> distance_;
  std::string raw_json_;
};

/// Normalizes a loosely keyed action record into the taxonomy.
///
/// Accepts "action" or "action_type" for the verb (case-insensitive) and the
/// fixed synonym table tap->click, type->input_text, press->long_press,
/// swipe->scroll. Coordinates come from "loc"/"coordinate" arrays or "x"/"y".
/// Fields that the kind does not carry are dropped.
GuiAction canonicalize_action(const nlohmann::json& raw, const Viewport& viewport);

/// Parses canonical (or loose) JSON text.
GuiAction parse_action(std::string_view json_text, const Viewport& viewport);

nlohmann::json action_to_json(const GuiAction& action);

}  // namespace renderworld
