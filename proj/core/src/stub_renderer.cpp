// Deterministic in-process rasterizer.
//
// Understands just enough CSS to produce stable, meaningful pixels:
//   - the render-target background color (from #render-target rules or its
//     inline style) fills the canvas; without one, a color derived from the
//     document hash is used;
//   - every other element with an inline or #id style giving
//     position:absolute, left/top/width/height in px and a background color
//     is painted as a box, offsets taken relative to the render target, in
//     document order.

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <regex>

#include "html_scan.hpp"
#include "renderworld/digest.hpp"
#include "renderworld/image.hpp"
#include "renderworld/renderer.hpp"

namespace renderworld {

namespace {

struct Paint {
  Rgba color;
  double alpha = 1.0;
};

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

std::optional<Paint> parse_color(std::string value) {
  value = detail::to_lower(detail::collapse_ws(value));
  // "background" shorthand: take the first token that parses as a color.
  static const std::map<std::string, Rgba, std::less<>> kNamed = {
      {"white", {255, 255, 255}}, {"black", {0, 0, 0}},        {"red", {255, 0, 0}},
      {"green", {0, 128, 0}},     {"blue", {0, 0, 255}},       {"gray", {128, 128, 128}},
      {"grey", {128, 128, 128}},  {"lightgray", {211, 211, 211}}, {"lightgrey", {211, 211, 211}},
      {"darkgray", {169, 169, 169}}, {"yellow", {255, 255, 0}}, {"orange", {255, 165, 0}},
      {"purple", {128, 0, 128}},  {"silver", {192, 192, 192}}, {"navy", {0, 0, 128}},
      {"teal", {0, 128, 128}}};
  static const std::regex kRgb(R"(rgba?\(\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*(?:,\s*([0-9.]+)\s*)?\))");
  std::smatch m;
  if (std::regex_search(value, m, kRgb)) {
    Paint p;
    p.color = {static_cast<std::uint8_t>(std::min(255, std::stoi(m[1]))),
               static_cast<std::uint8_t>(std::min(255, std::stoi(m[2]))),
               static_cast<std::uint8_t>(std::min(255, std::stoi(m[3]))), 255};
    if (m[4].matched) p.alpha = std::clamp(std::stod(m[4]), 0.0, 1.0);
    if (p.alpha <= 0.0) return std::nullopt;
    return p;
  }
  std::size_t start = 0;
  while (start < value.size()) {
    std::size_t end = value.find(' ', start);
    if (end == std::string::npos) end = value.size();
    const std::string token = value.substr(start, end - start);
    if (token.size() == 4 || token.size() == 7) {
      if (token[0] == '#') {
        std::array<int, 3> rgb{};
        bool ok = true;
        for (int i = 0; i < 3 && ok; ++i) {
          if (token.size() == 4) {
            const int v = hex_value(token[1 + i]);
            ok = v >= 0;
            rgb[i] = v * 17;
          } else {
            const int hi = hex_value(token[1 + 2 * i]);
            const int lo = hex_value(token[2 + 2 * i]);
            ok = hi >= 0 && lo >= 0;
            rgb[i] = hi * 16 + lo;
          }
        }
        if (ok)
          return Paint{{static_cast<std::uint8_t>(rgb[0]), static_cast<std::uint8_t>(rgb[1]),
                        static_cast<std::uint8_t>(rgb[2]), 255}};
      }
    }
    if (auto it = kNamed.find(token); it != kNamed.end()) return Paint{it->second};
    start = end + 1;
  }
  return std::nullopt;
}

std::optional<int> parse_px(const std::string& value) {
  static const std::regex kPx(R"(^(-?\d+(?:\.\d+)?)(px)?$)");
  std::smatch m;
  const std::string v = detail::to_lower(value);
  if (!std::regex_match(v, m, kPx)) return std::nullopt;
  return static_cast<int>(std::lround(std::stod(m[1])));
}

using Style = std::map<std::string, std::string>;

void merge_into(Style& style, const std::vector<detail::CssDeclaration>& decls) {
  for (const auto& d : decls) style[d.property] = d.value;
}

std::optional<Paint> background_of(const Style& style) {
  std::optional<Paint> paint;
  for (const char* prop : {"background", "background-color"})
    if (auto it = style.find(prop); it != style.end())
      if (auto p = parse_color(it->second)) paint = p;
  return paint;
}

class StubRenderEndpoint final : public RenderEndpoint {
 public:
  std::vector<std::uint8_t> render_png(const RenderRequest& request) override {
    const auto scan = detail::scan_html(request.html);
    std::vector<detail::CssRule> rules;
    for (const auto& block : scan.raw_blocks)
      if (block.tag == "style") {
        auto parsed = detail::parse_css(block.content);
        rules.insert(rules.end(), parsed.begin(), parsed.end());
      }
    auto style_for = [&](const detail::Tag& tag) {
      Style style;
      if (const auto* id = tag.find("id"))
        for (const auto& rule : rules)
          for (const auto& sel : rule.selectors)
            if (sel == "#" + id->value || sel == tag.name + "#" + id->value) {
              merge_into(style, rule.declarations);
              break;
            }
      if (const auto* inline_style = tag.find("style")) merge_into(style, detail::parse_declarations(inline_style->value));
      return style;
    };

    Rgba base;
    std::optional<Paint> root_paint;
    for (const auto& tag : scan.tags)
      if (!tag.closing)
        if (const auto* id = tag.find("id"); id && id->value == "render-target") {
          root_paint = background_of(style_for(tag));
          break;
        }
    if (root_paint && root_paint->alpha >= 1.0) {
      base = root_paint->color;
    } else {
      const std::string h = sha256_hex(request.html);
      base = {static_cast<std::uint8_t>(std::stoi(h.substr(0, 2), nullptr, 16)),
              static_cast<std::uint8_t>(std::stoi(h.substr(2, 2), nullptr, 16)),
              static_cast<std::uint8_t>(std::stoi(h.substr(4, 2), nullptr, 16)), 255};
    }
    Image canvas(request.width, request.height, base);

    for (const auto& tag : scan.tags) {
      if (tag.closing || tag.name == "!doctype") continue;
      if (const auto* id = tag.find("id"); id && id->value == "render-target") continue;
      const Style style = style_for(tag);
      auto pos = style.find("position");
      if (pos == style.end() || detail::to_lower(pos->second) != "absolute") continue;
      const auto get = [&](const char* prop) -> std::optional<int> {
        auto it = style.find(prop);
        return it == style.end() ? std::nullopt : parse_px(it->second);
      };
      const auto left = get("left"), top = get("top"), width = get("width"), height = get("height");
      const auto paint = background_of(style);
      if (!left || !top || !width || !height || !paint) continue;
      const int x0 = std::max(0, *left), y0 = std::max(0, *top);
      const int x1 = std::min(request.width, *left + *width), y1 = std::min(request.height, *top + *height);
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
          if (paint->alpha >= 1.0) canvas.set(x, y, paint->color);
          else canvas.blend(x, y, paint->color, paint->alpha);
        }
    }
    return encode_png(canvas);
  }

  std::string version() const override { return "stub-1"; }
};

}  // namespace

std::unique_ptr<RenderEndpoint> make_stub_render_endpoint() { return std::make_unique<StubRenderEndpoint>(); }

}  // namespace renderworld
