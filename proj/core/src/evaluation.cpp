#include "renderworld/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>

#include "renderworld/error.hpp"
#include "renderworld/parallel.hpp"
#include "renderworld/prompting.hpp"
#include "renderworld/reward.hpp"
#include "renderworld/similarity.hpp"

namespace renderworld {

using nlohmann::json;

namespace {

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json();
}

std::optional<ActionKind> inferred_label(const json& reply) {
  const auto it = reply.find("inferred_action");
  if (it == reply.end() || !it->is_string()) return std::nullopt;
  std::string label = it->get<std::string>();
  label.erase(0, label.find_first_not_of(" \t\n"));
  label.erase(label.find_last_not_of(" \t\n") + 1);
  for (char& c : label) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  // Only the nine taxonomy labels are accepted; synonyms are not.
  for (ActionKind k : kAllActionKinds)
    if (to_string(k) == label) return k;
  return std::nullopt;
}

std::string describe(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return std::string(to_string(err->code())) + ": " + e.what();
  return e.what();
}

struct Mean {
  double sum = 0.0;
  std::size_t n = 0;

  void add(double v) {
    sum += v;
    ++n;
  }
  std::optional<double> scaled(double factor) const {
    return n == 0 ? std::nullopt : std::optional<double>(sum / static_cast<double>(n) * factor);
  }
};

bool failed(const CaseRow& row, std::string_view metric) {
  return std::any_of(row.failures.begin(), row.failures.end(),
                     [&](const std::string& f) { return f.rfind(std::string(metric) + ":", 0) == 0; });
}

}  // namespace

json CaseRow::to_json() const {
  return {{"case_id", case_id},
          {"action_kind", action_kind},
          {"adherence", opt(adherence)},
          {"inferred_action", opt(inferred_action)},
          {"inverse_correct", opt(inverse_correct)},
          {"element_alignment", opt(element_alignment)},
          {"layout_integrity", opt(layout_integrity)},
          {"sim_a", opt(sim_a)},
          {"sim_b", opt(sim_b)},
          {"failures", failures}};
}

json MetricReport::summary_json() const {
  return {{"s_ad", opt(s_ad)},
          {"s_id", opt(s_id)},
          {"s_ele", opt(s_ele)},
          {"s_lay", opt(s_lay)},
          {"sim_a", opt(sim_a)},
          {"sim_b", opt(sim_b)},
          {"n", n},
          {"failures",
           {{"adherence", failures.adherence},
            {"inverse", failures.inverse},
            {"visual_pair", failures.visual_pair},
            {"sim_a", failures.sim_a},
            {"sim_b", failures.sim_b}}}};
}

std::string MetricReport::to_text() const {
  auto cell = [](const std::optional<double>& v) {
    char buf[32];
    if (!v) return std::string("-");
    std::snprintf(buf, sizeof buf, "%.2f", *v);
    return std::string(buf);
  };
  const std::vector<std::pair<std::string, std::string>> cols = {
      {"S_ad", cell(s_ad)},   {"S_id", cell(s_id)},   {"S_ele", cell(s_ele)},           {"S_lay", cell(s_lay)},
      {"SimA", cell(sim_a)},  {"SimB", cell(sim_b)},  {"n", std::to_string(n)}, {"failed", std::to_string(failures.total())}};
  std::string header, values;
  for (const auto& [name, value] : cols) {
    const std::size_t width = std::max(name.size(), value.size()) + 2;
    header += std::string(width - name.size(), ' ') + name;
    values += std::string(width - value.size(), ' ') + value;
  }
  return header + "\n" + values + "\n";
}

MetricReport aggregate(std::vector<CaseRow> rows) {
  if (rows.empty()) throw Error(ErrorCode::EmptyDataset, "no evaluation cases");
  std::sort(rows.begin(), rows.end(), [](const CaseRow& a, const CaseRow& b) { return a.case_id < b.case_id; });
  Mean ad, id, ele, lay, sa, sb;
  MetricReport report;
  for (const auto& row : rows) {
    if (row.adherence) ad.add(*row.adherence);
    if (row.inverse_correct) id.add(*row.inverse_correct ? 1.0 : 0.0);
    if (row.element_alignment) ele.add(*row.element_alignment);
    if (row.layout_integrity) lay.add(*row.layout_integrity);
    if (row.sim_a) sa.add(*row.sim_a);
    if (row.sim_b) sb.add(*row.sim_b);
    report.failures.adherence += failed(row, "adherence") ? 1 : 0;
    report.failures.inverse += failed(row, "inverse") ? 1 : 0;
    report.failures.visual_pair += failed(row, "visual_pair") ? 1 : 0;
    report.failures.sim_a += failed(row, "sim_a") ? 1 : 0;
    report.failures.sim_b += failed(row, "sim_b") ? 1 : 0;
  }
  report.s_ad = ad.scaled(10.0);
  report.s_id = id.scaled(100.0);
  report.s_ele = ele.scaled(10.0);
  report.s_lay = lay.scaled(10.0);
  report.sim_a = sa.scaled(100.0);
  report.sim_b = sb.scaled(100.0);
  report.n = rows.size();
  report.per_case = std::move(rows);
  return report;
}

Evaluator::Evaluator(ChatBackend& judge, EmbeddingBackend* sim_a, EmbeddingBackend* sim_b, EvalConfig config)
    : judge_(judge), sim_a_(sim_a), sim_b_(sim_b), config_(config) {}

JudgeVerdict Evaluator::eval_adherence(const EvalCase& c) {
  const SlotMap slots = {{"instruction", c.step.goal.text()},
                         {"semantic_description", action_description(c.step)},
                         {"action_json", c.step.action.raw_json()}};
  const UiState images[] = {c.step.before, c.pred};
  return ask_score(judge_, assemble(TemplateId::eval_adherence, slots, images));
}

InverseVerdict Evaluator::eval_inverse(const EvalCase& c) {
  const UiState images[] = {c.step.before, c.pred};
  const json reply = ask_structured(judge_, assemble(TemplateId::eval_inverse, {}, images),
                                    [](const json& j) { return inferred_label(j).has_value(); });
  InverseVerdict v;
  v.inferred = *inferred_label(reply);
  v.correct = v.inferred != ActionKind::none && v.inferred == c.step.action.kind();
  if (auto r = reply.find("reasoning"); r != reply.end() && r->is_string()) v.reasoning = r->get<std::string>();
  return v;
}

VisualPairVerdict Evaluator::eval_visual_pair(const EvalCase& c) {
  if (!c.step.after) throw Error(ErrorCode::InvalidArgument, "case " + c.case_id + " has no ground-truth next screen");
  const UiState images[] = {*c.step.after, c.pred};
  const json reply = ask_structured(judge_, assemble(TemplateId::eval_visual_pair, {}, images), [](const json& j) {
    return has_number(j, "element_alignment_score") && has_number(j, "structural_fidelity_score");
  });
  VisualPairVerdict v;
  const auto ele = read_score(reply, "element_alignment_score", 1.0, 10.0);
  const auto lay = read_score(reply, "structural_fidelity_score", 1.0, 10.0);
  v.s_ele = ele.score;
  v.s_lay = lay.score;
  v.reasoning = ele.reasoning;
  return v;
}

CaseRow Evaluator::evaluate_case(const EvalCase& c) {
  CaseRow row;
  row.case_id = c.case_id;
  row.action_kind = std::string(to_string(c.step.action.kind()));
  auto guarded = [&](const char* metric, const std::function<void()>& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      row.failures.push_back(std::string(metric) + ": " + describe(e));
    }
  };
  guarded("adherence", [&] { row.adherence = eval_adherence(c).score; });
  guarded("inverse", [&] {
    const auto v = eval_inverse(c);
    row.inferred_action = std::string(to_string(v.inferred));
    row.inverse_correct = v.correct;
  });
  guarded("visual_pair", [&] {
    const auto v = eval_visual_pair(c);
    row.element_alignment = v.s_ele;
    row.layout_integrity = v.s_lay;
  });
  if (sim_a_)
    guarded("sim_a", [&] {
      if (!c.step.after) throw Error(ErrorCode::InvalidArgument, "no ground-truth next screen");
      row.sim_a = embedding_similarity(c.pred, *c.step.after, *sim_a_);
    });
  if (sim_b_)
    guarded("sim_b", [&] {
      if (!c.step.after) throw Error(ErrorCode::InvalidArgument, "no ground-truth next screen");
      row.sim_b = embedding_similarity(c.pred, *c.step.after, *sim_b_);
    });
  return row;
}

MetricReport Evaluator::evaluate_dataset(std::span<const EvalCase> cases) {
  if (cases.empty()) throw Error(ErrorCode::EmptyDataset, "no evaluation cases");
  std::vector<CaseRow> rows(cases.size());
  parallel_for(cases.size(), config_.max_concurrency, [&](std::size_t i) { rows[i] = evaluate_case(cases[i]); });
  return aggregate(std::move(rows));
}

}  // namespace renderworld
