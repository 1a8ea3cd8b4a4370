#include <algorithm>
#include <cctype>
#include <cmath>

#include "renderworld/error.hpp"
#include "renderworld/prompting.hpp"

namespace renderworld {

namespace {

constexpr Rgba kCueColor{255, 0, 0, 255};

void draw_circle(Image& image, Point c) {
  const int r2 = kCueRadius * kCueRadius;
  for (int y = std::max(0, c.y - kCueRadius); y <= std::min(image.height() - 1, c.y + kCueRadius); ++y)
    for (int x = std::max(0, c.x - kCueRadius); x <= std::min(image.width() - 1, c.x + kCueRadius); ++x) {
      const int dx = x - c.x, dy = y - c.y;
      if (dx * dx + dy * dy <= r2) image.blend(x, y, kCueColor, kCueAlpha);
    }
}

// Arrow along +u in a local frame where u runs tail->tip and v across it.
// Tail and tip sit kArrowLength/2 either side of the image midpoint.
void draw_arrow(Image& image, Direction direction) {
  int ux = 0, uy = 0;
  switch (direction) {
    case Direction::up: uy = -1; break;
    case Direction::down: uy = 1; break;
    case Direction::left: ux = -1; break;
    case Direction::right: ux = 1; break;
  }
  const int cx = image.width() / 2, cy = image.height() / 2;
  const int half = kArrowLength / 2;
  const int shaft_end = half - kArrowHeadLength;  // where the head's base sits, in u
  for (int y = std::max(0, cy - half); y <= std::min(image.height() - 1, cy + half); ++y)
    for (int x = std::max(0, cx - half); x <= std::min(image.width() - 1, cx + half); ++x) {
      const int u = (x - cx) * ux + (y - cy) * uy;
      const int v = std::abs((x - cx) * uy - (y - cy) * ux);
      bool inside = false;
      if (u >= -half && u < shaft_end) {
        inside = 2 * v <= kArrowShaftWidth;
      } else if (u >= shaft_end && u <= half) {
        // Head half-width shrinks linearly from kArrowHeadWidth/2 at the base to 0 at the tip.
        inside = 2 * v * kArrowHeadLength <= kArrowHeadWidth * (half - u);
      }
      if (inside) image.blend(x, y, kCueColor, kCueAlpha);
    }
}

std::string point_text(const GuiAction& action) {
  const Point p = action.point().value_or(Point{});
  return "(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")";
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

UiState annotate_action(const UiState& before, const GuiAction& action) {
  const ActionKind kind = action.kind();
  if (kind != ActionKind::click && kind != ActionKind::long_press && kind != ActionKind::scroll) return before;
  Image image = before.decode();
  if (kind == ActionKind::scroll) {
    draw_arrow(image, action.direction().value_or(Direction::down));
  } else {
    const Point p = action.point().value();
    if (p.x < 0 || p.y < 0 || p.x >= image.width() || p.y >= image.height())
      throw Error(ErrorCode::PointOutOfBounds, "action point " + point_text(action) + " lies outside the " +
                                                   std::to_string(image.width()) + "x" +
                                                   std::to_string(image.height()) + " screenshot");
    draw_circle(image, p);
  }
  return UiState::from_image(image, ImageOrigin::annotated);
}

std::string expand_instruction(const GuiAction& action) {
  switch (action.kind()) {
    case ActionKind::click:
      return "User performed a CLICK at coordinates " + point_text(action) +
             ". Expect the button at this location to trigger.";
    case ActionKind::long_press:
      return "User performed a LONG PRESS at coordinates " + point_text(action) +
             ". Expect the element at this location to show its press-and-hold response, such as a context menu or "
             "selection mode.";
    case ActionKind::scroll: {
      const std::string dir = upper(to_string(action.direction().value_or(Direction::down)));
      return "User performed a SCROLL " + dir + " gesture. The content should move, revealing new items in the " +
             "direction of the swipe while fixed bars stay in place.";
    }
    case ActionKind::input_text:
      return "User typed the text \"" + action.text().value_or("") +
             "\". The focused input field MUST now contain this text.";
    case ActionKind::open_app:
      return "User opened the app \"" + action.app_name().value_or("") +
             "\". The screen should switch to that app's launch screen.";
    case ActionKind::navigate_home:
      return "User pressed the HOME button. The screen should return to the device home screen.";
    case ActionKind::navigate_back:
      return "User pressed the BACK button. The screen should return to the previous view or close the top layer.";
    case ActionKind::wait:
      return "User waited without interacting. The screen should finish any loading in progress and otherwise stay "
             "the same.";
    case ActionKind::none:
      break;
  }
  return "No action was performed. The screen should stay the same.";
}

}  // namespace renderworld
