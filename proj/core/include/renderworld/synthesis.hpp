#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "renderworld/backends.hpp"
#include "renderworld/html.hpp"
#include "renderworld/renderer.hpp"

namespace renderworld {

struct SynthesisConfig {
  double tau = 0.9;
  int n_max = 1;
  int max_concurrency = 4;
};

/// Similarity between a render and its ground truth, in [0,1].
class SimilarityGate {
 public:
  virtual ~SimilarityGate() = default;
  virtual double score(const UiState& rendered, const UiState& ground_truth) = 0;
};

/// Gate backed by an embedding provider (cosine, mapped to [0,1]).
class EmbeddingGate final : public SimilarityGate {
 public:
  explicit EmbeddingGate(EmbeddingBackend& provider) : provider_(provider) {}
  double score(const UiState& rendered, const UiState& ground_truth) override;

 private:
  EmbeddingBackend& provider_;
};

enum class SynthesisStatus { retained, discarded };

std::string_view to_string(SynthesisStatus status) noexcept;

struct SynthesisAttempt {
  std::string html_hash;  // empty when no document could be extracted
  double gate_score = 0.0;
  bool revised = false;
  std::string error;  // why the attempt scored 0 without a gate evaluation
};

struct SynthesisOutcome {
  SynthesisStatus status = SynthesisStatus::discarded;
  std::vector<SynthesisAttempt> attempts;
  std::optional<HtmlDocument> html;   // code of the final attempt
  std::optional<UiState> rendered;    // render of the final attempt
  std::string failure;                // set when the item aborted (backend failure)
  int coder_calls = 0;
  int gate_evaluations = 0;

  double final_score() const noexcept { return attempts.empty() ? 0.0 : attempts.back().gate_score; }
  int revision_count() const noexcept;
};

struct CorpusSummary {
  std::size_t retained = 0;
  std::size_t discarded = 0;
  double mean_final_score = 0.0;
  /// Items that went through at least one revision / items processed
  /// (0 when revisions are disabled).
  double revision_rate = 0.0;
  std::vector<SynthesisOutcome> items;  // by input index
};

/// Constrained synthesis with a similarity gate and bounded visual-feedback revision.
class Synthesizer {
 public:
  Synthesizer(ChatBackend& coder, Renderer& renderer, SimilarityGate& gate, SynthesisConfig config,
              Viewport viewport);

  SynthesisOutcome synthesize_one(const UiState& ground_truth);

  /// Processes inputs concurrently; `commit` is called in input order,
  /// each item as soon as it and all earlier items are done.
  CorpusSummary synthesize_corpus(std::span<const UiState> inputs,
                                  const std::function<void(std::size_t, const SynthesisOutcome&)>& commit = {});

  const SynthesisConfig& config() const noexcept { return config_; }

 private:
  ChatBackend& coder_;
  Renderer& renderer_;
  SimilarityGate& gate_;
  SynthesisConfig config_;
  Viewport viewport_;
};

/// Summary statistics over finished outcomes.
CorpusSummary summarize(std::vector<SynthesisOutcome> outcomes, const SynthesisConfig& config);

}  // namespace renderworld
