#include "html_scan.hpp"

#include <algorithm>
#include <cctype>

namespace renderworld::detail {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '-' || c == ':' || c == '_' || c == '.';
}

bool starts_with_ci(std::string_view s, std::size_t pos, std::string_view prefix) {
  if (pos + prefix.size() > s.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(s[pos + i])) != std::tolower(static_cast<unsigned char>(prefix[i])))
      return false;
  return true;
}

std::size_t find_ci(std::string_view s, std::string_view needle, std::size_t from) {
  for (std::size_t i = from; i + needle.size() <= s.size(); ++i)
    if (starts_with_ci(s, i, needle)) return i;
  return std::string_view::npos;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

// Parses the tag starting at src[pos] == '<'. Returns false if this is not a tag.
bool parse_tag(std::string_view src, std::size_t pos, Tag& tag) {
  std::size_t i = pos + 1;
  if (i < src.size() && src[i] == '/') {
    tag.closing = true;
    ++i;
  }
  if (i >= src.size() || !std::isalpha(static_cast<unsigned char>(src[i]))) return false;
  const std::size_t name_start = i;
  while (i < src.size() && is_name_char(src[i])) ++i;
  tag.name = to_lower(src.substr(name_start, i - name_start));
  tag.offset = pos;
  while (i < src.size()) {
    while (i < src.size() && is_space(src[i])) ++i;
    if (i >= src.size()) break;
    if (src[i] == '>') {
      tag.end = i + 1;
      return true;
    }
    if (src[i] == '/' && i + 1 < src.size() && src[i + 1] == '>') {
      tag.self_closing = true;
      tag.end = i + 2;
      return true;
    }
    const std::size_t attr_start = i;
    while (i < src.size() && !is_space(src[i]) && src[i] != '=' && src[i] != '>' &&
           !(src[i] == '/' && i + 1 < src.size() && src[i + 1] == '>'))
      ++i;
    Attribute attr;
    attr.name = to_lower(src.substr(attr_start, i - attr_start));
    attr.offset = attr_start;
    while (i < src.size() && is_space(src[i])) ++i;
    if (i < src.size() && src[i] == '=') {
      ++i;
      while (i < src.size() && is_space(src[i])) ++i;
      if (i < src.size() && (src[i] == '"' || src[i] == '\'')) {
        const char q = src[i++];
        const std::size_t v = i;
        while (i < src.size() && src[i] != q) ++i;
        attr.value = std::string(src.substr(v, i - v));
        if (i < src.size()) ++i;
      } else {
        const std::size_t v = i;
        while (i < src.size() && !is_space(src[i]) && src[i] != '>') ++i;
        attr.value = std::string(src.substr(v, i - v));
      }
    }
    if (attr.name.empty()) {
      ++i;  // stray character
      continue;
    }
    tag.attributes.push_back(std::move(attr));
  }
  tag.end = src.size();
  return true;
}

}  // namespace

const Attribute* Tag::find(std::string_view attr) const {
  for (const auto& a : attributes)
    if (a.name == attr) return &a;
  return nullptr;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string collapse_ws(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : trim(s)) {
    if (is_space(c)) {
      space = true;
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  return out;
}

std::size_t line_of(std::string_view source, std::size_t offset) {
  offset = std::min(offset, source.size());
  return 1 + static_cast<std::size_t>(std::count(source.begin(), source.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

HtmlScan scan_html(std::string_view src) {
  HtmlScan scan;
  std::size_t i = 0;
  std::size_t text_start = 0;
  auto flush_text = [&](std::size_t end) {
    if (end > text_start) scan.texts.push_back({std::string(src.substr(text_start, end - text_start)), text_start});
  };
  while (i < src.size()) {
    if (src[i] != '<') {
      ++i;
      continue;
    }
    if (src.compare(i, 4, "<!--") == 0) {
      flush_text(i);
      const std::size_t end = src.find("-->", i + 4);
      i = end == std::string_view::npos ? src.size() : end + 3;
      text_start = i;
      continue;
    }
    if (i + 1 < src.size() && src[i + 1] == '!') {
      flush_text(i);
      const std::size_t end = src.find('>', i);
      Tag decl;
      decl.name = "!" + to_lower(trim(src.substr(i + 2, std::min(end, src.size()) - i - 2)).substr(0, 7));
      decl.offset = i;
      decl.end = end == std::string_view::npos ? src.size() : end + 1;
      scan.tags.push_back(std::move(decl));
      i = scan.tags.back().end;
      text_start = i;
      continue;
    }
    Tag tag;
    if (!parse_tag(src, i, tag)) {
      ++i;
      continue;
    }
    flush_text(i);
    i = tag.end;
    text_start = i;
    const bool raw = !tag.closing && !tag.self_closing && (tag.name == "style" || tag.name == "script");
    const std::string name = tag.name;
    scan.tags.push_back(std::move(tag));
    if (raw) {
      const std::size_t close = find_ci(src, "</" + name, i);
      const std::size_t end = close == std::string_view::npos ? src.size() : close;
      scan.raw_blocks.push_back({name, std::string(src.substr(i, end - i)), i});
      i = end;
      text_start = i;
    }
  }
  flush_text(src.size());
  return scan;
}

std::vector<CssDeclaration> parse_declarations(std::string_view block) {
  std::vector<CssDeclaration> out;
  std::size_t start = 0;
  int depth = 0;
  char quote = 0;
  auto emit = [&](std::size_t end) {
    const std::string decl = trim(block.substr(start, end - start));
    const std::size_t colon = decl.find(':');
    if (colon == std::string::npos) return;
    CssDeclaration d;
    d.property = to_lower(trim(std::string_view(decl).substr(0, colon)));
    std::string value = collapse_ws(std::string_view(decl).substr(colon + 1));
    if (const std::size_t imp = to_lower(value).find("!important"); imp != std::string::npos)
      value = trim(std::string_view(value).substr(0, imp));
    d.value = std::move(value);
    if (!d.property.empty()) out.push_back(std::move(d));
  };
  for (std::size_t i = 0; i < block.size(); ++i) {
    const char c = block[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '(') {
      ++depth;
    } else if (c == ')') {
      depth = std::max(0, depth - 1);
    } else if (c == ';' && depth == 0) {
      emit(i);
      start = i + 1;
    }
  }
  emit(block.size());
  return out;
}

namespace {

std::string strip_comments(std::string_view css) {
  std::string out;
  std::size_t i = 0;
  while (i < css.size()) {
    if (css.compare(i, 2, "/*") == 0) {
      const std::size_t end = css.find("*/", i + 2);
      // Keep offsets stable by replacing the comment with spaces.
      const std::size_t stop = end == std::string_view::npos ? css.size() : end + 2;
      out.append(stop - i, ' ');
      i = stop;
    } else {
      out.push_back(css[i++]);
    }
  }
  return out;
}

std::size_t matching_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  char quote = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}' && --depth == 0) {
      return i;
    }
  }
  return s.size();
}

void parse_css_into(std::string_view css, std::vector<CssRule>& rules) {
  std::size_t i = 0;
  while (i < css.size()) {
    while (i < css.size() && is_space(css[i])) ++i;
    if (i >= css.size()) break;
    if (css[i] == '@') {
      const std::size_t brace = css.find('{', i);
      const std::size_t semi = css.find(';', i);
      if (semi != std::string_view::npos && (brace == std::string_view::npos || semi < brace)) {
        i = semi + 1;
        continue;
      }
      if (brace == std::string_view::npos) break;
      const std::size_t close = matching_brace(css, brace);
      const std::string at = to_lower(css.substr(i, brace - i));
      if (at.rfind("@media", 0) == 0 || at.rfind("@supports", 0) == 0)
        parse_css_into(css.substr(brace + 1, close - brace - 1), rules);
      i = close + 1;
      continue;
    }
    const std::size_t brace = css.find('{', i);
    if (brace == std::string_view::npos) break;
    const std::size_t close = matching_brace(css, brace);
    CssRule rule;
    std::string_view selectors = css.substr(i, brace - i);
    std::size_t s = 0;
    while (s <= selectors.size()) {
      const std::size_t comma = selectors.find(',', s);
      const std::size_t end = comma == std::string_view::npos ? selectors.size() : comma;
      std::string sel = collapse_ws(selectors.substr(s, end - s));
      if (!sel.empty()) rule.selectors.push_back(std::move(sel));
      s = end + 1;
    }
    rule.declarations = parse_declarations(css.substr(brace + 1, std::min(close, css.size()) - brace - 1));
    rules.push_back(std::move(rule));
    i = close + 1;
  }
}

std::string unquote(std::string_view s) {
  std::string t = trim(s);
  if (t.size() >= 2 && (t.front() == '"' || t.front() == '\'') && t.back() == t.front())
    t = t.substr(1, t.size() - 2);
  return trim(t);
}

}  // namespace

std::vector<CssRule> parse_css(std::string_view css) {
  std::vector<CssRule> rules;
  const std::string clean = strip_comments(css);
  parse_css_into(clean, rules);
  return rules;
}

std::vector<CssReference> css_references(std::string_view css) {
  std::vector<CssReference> refs;
  const std::string clean = strip_comments(css);
  std::string_view s = clean;
  for (std::size_t pos = find_ci(s, "url(", 0); pos != std::string_view::npos; pos = find_ci(s, "url(", pos + 4)) {
    const std::size_t start = pos + 4;
    std::size_t end = start;
    char quote = 0;
    while (end < s.size()) {
      const char c = s[end];
      if (quote) {
        if (c == quote) quote = 0;
      } else if (c == '"' || c == '\'') {
        quote = c;
      } else if (c == ')') {
        break;
      }
      ++end;
    }
    refs.push_back({unquote(s.substr(start, end - start)), pos});
  }
  for (std::size_t pos = find_ci(s, "@import", 0); pos != std::string_view::npos; pos = find_ci(s, "@import", pos + 7)) {
    const std::size_t semi = s.find(';', pos);
    std::string target = trim(s.substr(pos + 7, (semi == std::string_view::npos ? s.size() : semi) - pos - 7));
    if (to_lower(target).rfind("url(", 0) == 0) continue;  // already reported as url()
    refs.push_back({unquote(target), pos});
  }
  return refs;
}

}  // namespace renderworld::detail
