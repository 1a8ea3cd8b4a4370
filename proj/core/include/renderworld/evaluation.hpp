#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "renderworld/backends.hpp"
#include "renderworld/judge.hpp"
#include "renderworld/types.hpp"

namespace renderworld {

struct EvalCase {
  std::string case_id;
  InteractionStep step;  // step.after is the ground truth
  UiState pred;
};

struct InverseVerdict {
  ActionKind inferred = ActionKind::none;
  bool correct = false;
  std::string reasoning;
};

struct VisualPairVerdict {
  double s_ele = 0.0;
  double s_lay = 0.0;
  std::string reasoning;
};

/// Per-case raw scores on the judges' own scales (0-10, 1-10, 0/1, 0-1).
struct CaseRow {
  std::string case_id;
  std::string action_kind;
  std::optional<double> adherence;
  std::optional<std::string> inferred_action;
  std::optional<bool> inverse_correct;
  std::optional<double> element_alignment;
  std::optional<double> layout_integrity;
  std::optional<double> sim_a;
  std::optional<double> sim_b;
  std::vector<std::string> failures;  // "metric: reason"

  nlohmann::json to_json() const;
};

struct MetricFailures {
  std::size_t adherence = 0;
  std::size_t inverse = 0;
  std::size_t visual_pair = 0;
  std::size_t sim_a = 0;
  std::size_t sim_b = 0;

  std::size_t total() const noexcept { return adherence + inverse + visual_pair + sim_a + sim_b; }
};

/// Dataset-level numbers on a 0-100 scale; nullopt when no case produced the metric.
struct MetricReport {
  std::optional<double> s_ad;
  std::optional<double> s_id;
  std::optional<double> s_ele;
  std::optional<double> s_lay;
  std::optional<double> sim_a;
  std::optional<double> sim_b;
  std::size_t n = 0;
  MetricFailures failures;
  std::vector<CaseRow> per_case;  // sorted by case_id

  nlohmann::json summary_json() const;
  std::string to_text() const;
};

/// Sorts rows by case id and folds them into the report. Throws EmptyDataset.
MetricReport aggregate(std::vector<CaseRow> rows);

struct EvalConfig {
  int max_concurrency = 4;
};

class Evaluator {
 public:
  /// sim_a / sim_b are optional embedding providers (e.g. SigLIP- and DINO-style).
  Evaluator(ChatBackend& judge, EmbeddingBackend* sim_a, EmbeddingBackend* sim_b, EvalConfig config = {});

  JudgeVerdict eval_adherence(const EvalCase& c);
  InverseVerdict eval_inverse(const EvalCase& c);
  VisualPairVerdict eval_visual_pair(const EvalCase& c);

  CaseRow evaluate_case(const EvalCase& c);
  MetricReport evaluate_dataset(std::span<const EvalCase> cases);

 private:
  ChatBackend& judge_;
  EmbeddingBackend* sim_a_;
  EmbeddingBackend* sim_b_;
  EvalConfig config_;
};

}  // namespace renderworld
