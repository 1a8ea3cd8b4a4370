#include "renderworld/html.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include "html_scan.hpp"
#include "renderworld/digest.hpp"
#include "renderworld/error.hpp"

namespace renderworld {

using detail::collapse_ws;
using detail::line_of;
using detail::to_lower;

std::string canonicalize_html(std::string_view source) {
  std::string out;
  out.reserve(source.size());
  std::string line;
  auto flush = [&](bool newline) {
    const auto end = line.find_last_not_of(" \t\f\v");
    out.append(line, 0, end == std::string::npos ? 0 : end + 1);
    if (newline) out.push_back('\n');
    line.clear();
  };
  for (std::size_t i = 0; i < source.size(); ++i) {
    const char c = source[i];
    if (c == '\r') {
      if (i + 1 < source.size() && source[i + 1] == '\n') ++i;
      flush(true);
    } else if (c == '\n') {
      flush(true);
    } else {
      line.push_back(c);
    }
  }
  flush(false);
  return out;
}

HtmlDocument::HtmlDocument(std::string_view source, Viewport viewport)
    : source_(canonicalize_html(source)), viewport_(viewport), hash_(sha256_hex(source_)) {}

std::vector<std::string> ValidationReport::rule_ids() const {
  std::vector<std::string> ids;
  for (const auto& v : violations)
    if (std::find(ids.begin(), ids.end(), v.rule_id) == ids.end()) ids.push_back(v.rule_id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

namespace {

std::size_t find_ci(std::string_view s, std::string_view needle, std::size_t from = 0) {
  const std::string hay = to_lower(s);
  return hay.find(to_lower(needle), from);
}

std::size_t rfind_ci(std::string_view s, std::string_view needle) { return to_lower(s).rfind(to_lower(needle)); }

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

bool zero_length(const std::string& value) {
  static const std::regex kZero(R"(^0(\.0+)?(px|em|rem|%|pt|vh|vw)?$)");
  std::size_t start = 0;
  bool any = false;
  while (start <= value.size()) {
    const std::size_t sp = value.find(' ', start);
    const std::string tok = value.substr(start, sp == std::string::npos ? std::string::npos : sp - start);
    if (!tok.empty()) {
      if (!std::regex_match(tok, kZero)) return false;
      any = true;
    }
    if (sp == std::string::npos) break;
    start = sp + 1;
  }
  return any;
}

bool selector_targets_body(const std::string& sel) { return sel == "body" || sel == "html body" || sel == "html > body"; }
bool selector_targets_root(const std::string& sel) { return sel == "#render-target" || sel == "div#render-target"; }

struct Cascade {
  std::vector<detail::CssDeclaration> decls;

  std::optional<std::string> get(std::string_view property) const {
    std::optional<std::string> v;
    for (const auto& d : decls)
      if (d.property == property) v = to_lower(d.value);
    return v;
  }
};

class Validator {
 public:
  Validator(const HtmlDocument& doc) : doc_(doc), src_(doc.source()), scan_(detail::scan_html(src_)) {
    for (const auto& block : scan_.raw_blocks)
      if (block.tag == "style") {
        auto rules = detail::parse_css(block.content);
        rules_.insert(rules_.end(), rules.begin(), rules.end());
      }
  }

  ValidationReport run() {
    check_document_frame();
    check_root();
    check_body();
    check_assets();
    check_placeholders();
    std::stable_sort(report_.violations.begin(), report_.violations.end(),
                     [](const Violation& a, const Violation& b) { return a.rule_id < b.rule_id; });
    return std::move(report_);
  }

 private:
  void add(const char* rule, std::string message, std::size_t offset = std::string::npos) {
    report_.violations.push_back(
        {rule, std::move(message), offset == std::string::npos ? 0 : line_of(src_, offset)});
  }

  // R1 + R8
  void check_document_frame() {
    const std::size_t doctype = find_ci(src_, "<!doctype html");
    const std::size_t close = rfind_ci(src_, "</html>");
    if (doctype == std::string::npos) add("R1", "missing <!DOCTYPE html> declaration");
    if (close == std::string::npos) add("R1", "missing closing </html> tag");
    if (doctype != std::string::npos && !blank(std::string_view(src_).substr(0, doctype)))
      add("R8", "text before the document type declaration", 0);
    if (close != std::string::npos && !blank(std::string_view(src_).substr(close + 7)))
      add("R8", "text after the closing </html> tag", close + 7);
    if (const std::size_t fence = src_.find("```"); fence != std::string::npos)
      add("R8", "markdown code fence inside the document", fence);
  }

  // R2 + R3
  void check_root() {
    std::vector<const detail::Tag*> roots;
    for (const auto& t : scan_.tags)
      if (!t.closing)
        if (const auto* id = t.find("id"); id && id->value == "render-target") roots.push_back(&t);
    if (roots.size() != 1) {
      add("R2", roots.empty() ? "no element with id=\"render-target\""
                              : std::to_string(roots.size()) + " elements with id=\"render-target\"",
          roots.empty() ? std::string::npos : roots[1]->offset);
      return;
    }
    Cascade c;
    for (const auto& rule : rules_)
      if (std::any_of(rule.selectors.begin(), rule.selectors.end(), selector_targets_root))
        c.decls.insert(c.decls.end(), rule.declarations.begin(), rule.declarations.end());
    if (const auto* style = roots[0]->find("style")) {
      auto inline_decls = detail::parse_declarations(style->value);
      c.decls.insert(c.decls.end(), inline_decls.begin(), inline_decls.end());
    }
    const std::string want_w = std::to_string(doc_.viewport().width) + "px";
    const std::string want_h = std::to_string(doc_.viewport().height) + "px";
    auto expect = [&](const char* prop, const std::string& want) {
      const auto v = c.get(prop);
      if (!v || *v != want)
        add("R3", std::string("#render-target ") + prop + " must be " + want + (v ? " (found " + *v + ")" : ""),
            roots[0]->offset);
    };
    expect("width", want_w);
    expect("height", want_h);
    expect("position", "relative");
    expect("overflow", "hidden");
  }

  // R4 + R5
  void check_body() {
    const detail::Tag* body = nullptr;
    for (const auto& t : scan_.tags)
      if (!t.closing && t.name == "body") {
        body = &t;
        break;
      }
    Cascade c;
    for (const auto& rule : rules_)
      for (const auto& sel : rule.selectors)
        if (selector_targets_body(sel) || sel == "*") {
          c.decls.insert(c.decls.end(), rule.declarations.begin(), rule.declarations.end());
          break;
        }
    if (body)
      if (const auto* style = body->find("style")) {
        auto inline_decls = detail::parse_declarations(style->value);
        c.decls.insert(c.decls.end(), inline_decls.begin(), inline_decls.end());
      }
    const std::size_t where = body ? body->offset : std::string::npos;

    auto box_is_zero = [&](const char* shorthand) {
      bool zero = false;
      for (const auto& d : c.decls) {
        if (d.property == shorthand) {
          zero = zero_length(to_lower(d.value));
        } else if (d.property.rfind(std::string(shorthand) + "-", 0) == 0 && !zero_length(to_lower(d.value))) {
          zero = false;
        }
      }
      if (!zero) {
        bool all = true;
        for (const char* side : {"-top", "-right", "-bottom", "-left"}) {
          const auto v = c.get(std::string(shorthand) + side);
          all = all && v && zero_length(*v);
        }
        zero = all;
      }
      return zero;
    };
    if (!box_is_zero("margin")) add("R4", "body margin must be 0", where);
    if (!box_is_zero("padding")) add("R4", "body padding must be 0", where);

    std::optional<bool> transparent;
    for (const auto& d : c.decls) {
      if (d.property != "background" && d.property != "background-color") continue;
      const std::string v = to_lower(d.value);
      transparent = v == "transparent" || v == "none transparent" || v == "transparent none" ||
                    v == "rgba(0,0,0,0)" || v == "rgba(0, 0, 0, 0)";
    }
    if (!transparent) add("R5", "body background must be declared transparent", where);
    else if (!*transparent) add("R5", "body background must be transparent", where);
  }

  void check_url(std::string_view target, std::size_t offset, const char* what) {
    const std::string t = to_lower(target);
    if (t.empty() || t.front() == '#') return;
    if (t.rfind("data:", 0) == 0) {
      if (target.size() > kMaxDataUrlBytes)
        add("R6", std::string(what) + " data URL exceeds " + std::to_string(kMaxDataUrlBytes) + " bytes", offset);
      return;
    }
    add("R6", std::string("external asset reference in ") + what + ": " + std::string(target.substr(0, 120)), offset);
  }

  // R6
  void check_assets() {
    for (const auto& t : scan_.tags) {
      if (t.closing) continue;
      for (const char* attr : {"src", "poster", "data"}) {
        if (t.name == "object" || std::string_view(attr) != "data")
          if (const auto* a = t.find(attr)) check_url(a->value, a->offset, attr);
      }
      if (const auto* a = t.find("srcset")) {
        // Candidates are "<url> <descriptor>" separated by commas; a data URL
        // may itself contain commas, so it swallows the remainder.
        std::string_view set = a->value;
        while (!set.empty()) {
          const std::size_t lead = set.find_first_not_of(" \t\n\r,");
          if (lead == std::string_view::npos) break;
          set.remove_prefix(lead);
          const bool data = to_lower(set.substr(0, 5)) == "data:";
          const std::size_t comma = data ? std::string_view::npos : set.find(',');
          const std::string cand = collapse_ws(set.substr(0, comma));
          check_url(data ? cand : cand.substr(0, cand.find(' ')), a->offset, "srcset");
          if (comma == std::string_view::npos) break;
          set.remove_prefix(comma + 1);
        }
      }
      if (t.name == "link" || t.name == "image" || t.name == "use" || t.name == "feimage") {
        for (const char* attr : {"href", "xlink:href"})
          if (const auto* a = t.find(attr)) check_url(a->value, a->offset, attr);
      }
      if (const auto* style = t.find("style"))
        for (const auto& ref : detail::css_references(style->value)) check_url(ref.target, style->offset, "style url()");
    }
    for (const auto& block : scan_.raw_blocks)
      if (block.tag == "style")
        for (const auto& ref : detail::css_references(block.content))
          check_url(ref.target, block.offset + ref.offset, "stylesheet url()");
  }

  // R7
  void check_placeholders() {
    static const std::regex kCandidate(R"(\[\s*(img|image)\b[^\]\n]*\]?)", std::regex::icase);
    static const std::regex kWellFormed(R"(\[IMG: [^\]\s][^\]\n]*\])");
    for (const auto& run : scan_.texts) {
      for (auto it = std::sregex_iterator(run.text.begin(), run.text.end(), kCandidate); it != std::sregex_iterator();
           ++it) {
        const std::string token = it->str();
        if (!std::regex_match(token, kWellFormed))
          add("R7", "malformed image placeholder '" + token + "' (expected [IMG: label])",
              run.offset + static_cast<std::size_t>(it->position()));
      }
    }
  }

  const HtmlDocument& doc_;
  const std::string& src_;
  detail::HtmlScan scan_;
  std::vector<detail::CssRule> rules_;
  ValidationReport report_;
};

}  // namespace

ValidationReport validate_html(const HtmlDocument& doc) { return Validator(doc).run(); }

ExtractedHtml extract_html(std::string_view model_output, Viewport viewport) {
  const std::size_t start = find_ci(model_output, "<!doctype html");
  if (start == std::string::npos) throw Error(ErrorCode::NoDocumentFound, "no <!DOCTYPE html> in model output");
  const std::string lowered = to_lower(model_output);
  const std::size_t close = lowered.rfind("</html>");
  if (close == std::string::npos || close < start)
    throw Error(ErrorCode::NoDocumentFound, "no closing </html> after the document type declaration");
  const std::size_t end = close + 7;
  const bool repaired = !blank(model_output.substr(0, start)) || !blank(model_output.substr(end));
  return {HtmlDocument(model_output.substr(start, end - start), viewport), repaired};
}

}  // namespace renderworld
