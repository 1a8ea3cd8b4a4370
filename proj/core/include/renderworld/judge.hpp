#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "renderworld/backends.hpp"
#include "renderworld/error.hpp"

namespace renderworld {

inline constexpr std::string_view kJsonOnlySuffix = "Respond with JSON only.";

/// Strict parse of the whole text, then the outermost {...} span.
std::optional<nlohmann::json> extract_json_object(std::string_view text);

/// True when reply[field] is a finite number (or a string holding one).
bool has_number(const nlohmann::json& reply, std::string_view field);

/// Sends the prompt, parses the reply with `parse`, re-asks once with a
/// JSON-only suffix, and throws JudgeUnparseable (or the given code) if both
/// replies fail to parse.
nlohmann::json ask_structured(ChatBackend& backend, const AssembledPrompt& prompt,
                              const std::function<bool(const nlohmann::json&)>& accept,
                              ErrorCode failure = ErrorCode::JudgeUnparseable);

struct JudgeVerdict {
  double score = 0.0;
  std::string reasoning;
  bool clamped = false;
  double raw_score = 0.0;
};

/// Reads a numeric field and clamps it to [lo, hi]; a clamp is logged.
JudgeVerdict read_score(const nlohmann::json& reply, std::string_view field, double lo, double hi);

/// ask_structured + read_score for the {"score", "reasoning"} schema.
JudgeVerdict ask_score(ChatBackend& backend, const AssembledPrompt& prompt, double lo = 0.0, double hi = 10.0);

}  // namespace renderworld
