#include "renderworld/synthesis.hpp"

#include <mutex>

#include <spdlog/spdlog.h>

#include "renderworld/error.hpp"
#include "renderworld/parallel.hpp"
#include "renderworld/prompting.hpp"
#include "renderworld/similarity.hpp"

namespace renderworld {

std::string_view to_string(SynthesisStatus status) noexcept {
  return status == SynthesisStatus::retained ? "retained" : "discarded";
}

double EmbeddingGate::score(const UiState& rendered, const UiState& ground_truth) {
  return embedding_similarity(rendered, ground_truth, provider_);
}

int SynthesisOutcome::revision_count() const noexcept {
  int n = 0;
  for (const auto& a : attempts) n += a.revised ? 1 : 0;
  return n;
}

Synthesizer::Synthesizer(ChatBackend& coder, Renderer& renderer, SimilarityGate& gate, SynthesisConfig config,
                         Viewport viewport)
    : coder_(coder), renderer_(renderer), gate_(gate), config_(config), viewport_(viewport) {
  if (config_.tau < 0.0 || config_.tau > 1.0) throw Error(ErrorCode::ConfigInvalid, "tau must lie in [0,1]");
  if (config_.n_max < 0) throw Error(ErrorCode::ConfigInvalid, "n_max must be non-negative");
}

SynthesisOutcome Synthesizer::synthesize_one(const UiState& ground_truth) {
  if (ground_truth.viewport() != viewport_)
    throw Error(ErrorCode::DimensionMismatch, "input screenshot is " + std::to_string(ground_truth.width()) + "x" +
                                                  std::to_string(ground_truth.height()) + ", viewport is " +
                                                  std::to_string(viewport_.width) + "x" +
                                                  std::to_string(viewport_.height));
  const SlotMap size_slots = {{"width", std::to_string(viewport_.width)}, {"height", std::to_string(viewport_.height)}};

  SynthesisOutcome out;
  std::string current_code;            // what the coder last produced (canonical when extractable)
  std::optional<UiState> last_render;  // most recent successful render

  for (int n = 0;; ++n) {
    AssembledPrompt prompt;
    if (n == 0) {
      prompt = assemble(TemplateId::initial_synthesis, size_slots, std::span(&ground_truth, 1));
    } else {
      SlotMap slots = size_slots;
      slots["CURRENT_HTML"] = current_code;
      const UiState rendered =
          last_render ? *last_render : UiState::from_image(Image(viewport_.width, viewport_.height), ImageOrigin::rendered);
      const UiState images[] = {ground_truth, rendered};
      prompt = assemble(TemplateId::revision, slots, images);
    }
    const std::string reply = coder_.chat(prompt);
    ++out.coder_calls;

    SynthesisAttempt attempt;
    attempt.revised = n > 0;
    out.html.reset();
    out.rendered.reset();
    try {
      auto extracted = extract_html(reply, viewport_);
      attempt.html_hash = extracted.document.content_hash();
      current_code = extracted.document.source();
      out.html = extracted.document;
      auto result = renderer_.render(extracted.document);
      out.rendered = result.image;
      last_render = result.image;
      attempt.gate_score = gate_.score(result.image, ground_truth);
      ++out.gate_evaluations;
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::NoDocumentFound:
          current_code = reply;
          [[fallthrough]];
        case ErrorCode::InvalidDocument:
        case ErrorCode::RendererUnavailable:
        case ErrorCode::RenderTimeout:
        case ErrorCode::DimensionMismatch:
          attempt.gate_score = 0.0;
          attempt.error = std::string(to_string(e.code()));
          break;
        default:
          throw;
      }
    }
    out.attempts.push_back(attempt);

    if (attempt.error.empty() && attempt.gate_score >= config_.tau) {
      out.status = SynthesisStatus::retained;
      break;
    }
    if (n >= config_.n_max) {
      out.status = SynthesisStatus::discarded;
      break;
    }
  }
  return out;
}

CorpusSummary Synthesizer::synthesize_corpus(std::span<const UiState> inputs,
                                             const std::function<void(std::size_t, const SynthesisOutcome&)>& commit) {
  std::vector<SynthesisOutcome> outcomes(inputs.size());
  std::vector<bool> done(inputs.size(), false);
  std::size_t next = 0;
  std::mutex mutex;

  parallel_for(inputs.size(), config_.max_concurrency, [&](std::size_t i) {
    SynthesisOutcome outcome;
    try {
      outcome = synthesize_one(inputs[i]);
    } catch (const std::exception& e) {
      spdlog::warn("synthesis item {} failed: {}", i, e.what());
      outcome.status = SynthesisStatus::discarded;
      if (const auto* err = dynamic_cast<const Error*>(&e))
        outcome.failure = std::string(to_string(err->code())) + ": " + e.what();
      else
        outcome.failure = e.what();
    }
    std::lock_guard lock(mutex);
    outcomes[i] = std::move(outcome);
    done[i] = true;
    while (next < outcomes.size() && done[next]) {
      if (commit) commit(next, outcomes[next]);
      ++next;
    }
  });
  return summarize(std::move(outcomes), config_);
}

CorpusSummary summarize(std::vector<SynthesisOutcome> outcomes, const SynthesisConfig& config) {
  CorpusSummary summary;
  double total = 0.0;
  std::size_t revised = 0;
  for (const auto& o : outcomes) {
    if (o.status == SynthesisStatus::retained) ++summary.retained;
    else ++summary.discarded;
    total += o.final_score();
    if (o.revision_count() > 0) ++revised;
  }
  if (!outcomes.empty()) {
    summary.mean_final_score = total / static_cast<double>(outcomes.size());
    if (config.n_max > 0) summary.revision_rate = static_cast<double>(revised) / static_cast<double>(outcomes.size());
  }
  summary.items = std::move(outcomes);
  return summary;
}

}  // namespace renderworld
