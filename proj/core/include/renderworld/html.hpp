#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "renderworld/types.hpp"

namespace renderworld {

/// LF newlines and per-line trailing whitespace removed; nothing else changes.
std::string canonicalize_html(std::string_view source);

class HtmlDocument {
 public:
  HtmlDocument(std::string_view source, Viewport viewport);

  const std::string& source() const noexcept { return source_; }
  const Viewport& viewport() const noexcept { return viewport_; }
  /// SHA-256 of the canonical source.
  const std::string& content_hash() const noexcept { return hash_; }

 private:
  std::string source_;
  Viewport viewport_;
  std::string hash_;
};

struct Violation {
  std::string rule_id;  // "R1".."R8"
  std::string message;
  std::size_t line = 0;  // 1-based; 0 when the rule is document-wide
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool valid() const noexcept { return violations.empty(); }
  std::vector<std::string> rule_ids() const;
};

/// Structural rules for synthesized documents:
///   R1 doctype declaration and closing html tag present
///   R2 exactly one element with id="render-target"
///   R3 render-target sized to the viewport, position:relative, overflow:hidden
///   R4 body margin and padding zero
///   R5 body background transparent
///   R6 no external asset references (src/srcset/poster, link href, url(), @import);
///      inline data URLs above kMaxDataUrlBytes also count
///   R7 image placeholders use the "[IMG: label]" form
///   R8 no markdown fences or text outside the document
ValidationReport validate_html(const HtmlDocument& doc);

inline constexpr std::size_t kMaxDataUrlBytes = 4096;

struct ExtractedHtml {
  HtmlDocument document;
  bool repaired = false;
};

/// Pulls the doctype..</html> span out of raw model output, dropping code
/// fences and surrounding prose. Throws NoDocumentFound.
ExtractedHtml extract_html(std::string_view model_output, Viewport viewport);

}  // namespace renderworld
