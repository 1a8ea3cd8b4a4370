#include "renderworld/judge.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <spdlog/spdlog.h>

#include "renderworld/error.hpp"

namespace renderworld {

using nlohmann::json;

namespace {

std::optional<double> number_of(const json& value) {
  if (value.is_number()) {
    const double d = value.get<double>();
    if (std::isfinite(d)) return d;
    return std::nullopt;
  }
  if (value.is_string()) {
    const std::string& s = value.get_ref<const std::string&>();
    double d = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    while (begin < end && *begin == ' ') ++begin;
    while (end > begin && end[-1] == ' ') --end;
    auto [ptr, ec] = std::from_chars(begin, end, d);
    if (ec == std::errc() && ptr == end && std::isfinite(d)) return d;
  }
  return std::nullopt;
}

std::string snippet(const std::string& text) {
  return text.size() <= 200 ? text : text.substr(0, 200) + "...";
}

}  // namespace

std::optional<json> extract_json_object(std::string_view text) {
  auto parsed = json::parse(text, nullptr, false);
  if (!parsed.is_discarded() && parsed.is_object()) return parsed;
  const std::size_t open = text.find('{');
  const std::size_t close = text.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) return std::nullopt;
  parsed = json::parse(text.substr(open, close - open + 1), nullptr, false);
  if (!parsed.is_discarded() && parsed.is_object()) return parsed;
  return std::nullopt;
}

bool has_number(const json& reply, std::string_view field) {
  const auto it = reply.find(field);
  return it != reply.end() && number_of(*it).has_value();
}

json ask_structured(ChatBackend& backend, const AssembledPrompt& prompt, const std::function<bool(const json&)>& accept,
                    ErrorCode failure) {
  const std::string first = backend.chat(prompt);
  if (auto j = extract_json_object(first); j && accept(*j)) return *j;
  spdlog::debug("{}: unparseable reply, re-asking", to_string(prompt.template_id));
  ChatOptions retry;
  retry.suffix = std::string(kJsonOnlySuffix);
  const std::string second = backend.chat(prompt, retry);
  if (auto j = extract_json_object(second); j && accept(*j)) return *j;
  throw Error(failure, std::string(to_string(prompt.template_id)) + ": reply did not match the schema after re-ask: " +
                           snippet(second));
}

JudgeVerdict read_score(const json& reply, std::string_view field, double lo, double hi) {
  const auto it = reply.find(field);
  const auto value = it == reply.end() ? std::nullopt : number_of(*it);
  if (!value) throw Error(ErrorCode::JudgeUnparseable, "judge reply lacks numeric field " + std::string(field));
  JudgeVerdict verdict;
  verdict.raw_score = *value;
  verdict.score = std::clamp(*value, lo, hi);
  verdict.clamped = verdict.score != *value;
  if (verdict.clamped) spdlog::warn("judge {} {} outside [{}, {}]; clamped to {}", field, *value, lo, hi, verdict.score);
  if (auto r = reply.find("reasoning"); r != reply.end() && r->is_string()) verdict.reasoning = r->get<std::string>();
  return verdict;
}

JudgeVerdict ask_score(ChatBackend& backend, const AssembledPrompt& prompt, double lo, double hi) {
  const json reply = ask_structured(backend, prompt, [](const json& j) { return has_number(j, "score"); });
  return read_score(reply, "score", lo, hi);
}

}  // namespace renderworld
