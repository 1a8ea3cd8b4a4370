#pragma once

// Minimal HTML/CSS scanning used by the validator and the stub renderer.
// It tokenizes tags, text, and raw <style>/<script> blocks; it does not build
// a DOM and makes no attempt at error recovery beyond skipping stray '<'.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace renderworld::detail {

struct Attribute {
  std::string name;  // lowercase
  std::string value;
  std::size_t offset = 0;
};

struct Tag {
  std::string name;  // lowercase; "!doctype" for the declaration
  bool closing = false;
  bool self_closing = false;
  std::vector<Attribute> attributes;
  std::size_t offset = 0;
  std::size_t end = 0;  // one past '>'

  const Attribute* find(std::string_view attr) const;
};

struct TextRun {
  std::string text;
  std::size_t offset = 0;
};

struct RawBlock {
  std::string tag;  // "style" | "script"
  std::string content;
  std::size_t offset = 0;
};

struct HtmlScan {
  std::vector<Tag> tags;
  std::vector<TextRun> texts;
  std::vector<RawBlock> raw_blocks;
};

HtmlScan scan_html(std::string_view source);

struct CssDeclaration {
  std::string property;  // lowercase
  std::string value;     // trimmed, whitespace-collapsed, !important removed
};

struct CssRule {
  std::vector<std::string> selectors;  // trimmed, whitespace-collapsed
  std::vector<CssDeclaration> declarations;
};

/// Flattens @media/@supports blocks; other at-rule blocks are skipped.
std::vector<CssRule> parse_css(std::string_view css);
std::vector<CssDeclaration> parse_declarations(std::string_view block);

struct CssReference {
  std::string target;  // url() argument or @import target, unquoted
  std::size_t offset = 0;
};

/// Every url(...) and @import reference in a stylesheet or style attribute.
std::vector<CssReference> css_references(std::string_view css);

std::size_t line_of(std::string_view source, std::size_t offset);
std::string to_lower(std::string_view s);
std::string collapse_ws(std::string_view s);

}  // namespace renderworld::detail
