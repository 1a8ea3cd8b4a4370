#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <mutex>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <renderworld/corpus.hpp>
#include <renderworld/error.hpp>
#include <renderworld/evaluation.hpp>
#include <renderworld/grpo.hpp>
#include <renderworld/html.hpp>
#include <renderworld/parallel.hpp>
#include <renderworld/prompting.hpp>
#include <renderworld/reward.hpp>
#include <renderworld/select.hpp>
#include <renderworld/synthesis.hpp>
#include <renderworld/world_model.hpp>

#include "runtime.hpp"

namespace renderworld::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Context {
  const std::vector<std::string>& args;  // after the subcommand name
  std::ostream& out;
  std::ostream& err;
};

fs::path require_out(const CommonOptions& common) {
  if (common.out.empty()) throw Error(ErrorCode::ConfigInvalid, "--out is required");
  return common.out;
}

void write_jsonl(const fs::path& path, const std::vector<json>& rows) {
  std::string text;
  for (const auto& row : rows) text += row.dump() + "\n";
  write_file_atomic(path, text);
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

json error_json(std::string_view code, const std::string& message, int exit_code) {
  return {{"error", code}, {"message", message}, {"exit_code", exit_code}};
}

StepInput load_step_file(const fs::path& path, const Viewport& viewport) {
  try {
    return parse_step(json::parse(read_file_text(path)), path.has_parent_path() ? path.parent_path() : ".", viewport);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorpusCorrupt, path.string() + ": " + e.what());
  }
}

std::vector<CorpusRecord> retained_with_after(const CorpusStore& store, bool strict) {
  std::vector<CorpusRecord> out;
  for (auto& r : store.filter(SynthesisStatus::retained, strict))
    if (!r.after_image.empty()) out.push_back(std::move(r));
  return out;
}

std::string code_of(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return std::string(to_string(err->code()));
  return "Exception";
}

// --- synthesize ---------------------------------------------------------------

int cmd_synthesize(const CommonOptions& common, const std::string& input, Context& ctx) {
  Runtime rt(common);
  auto manifest = rt.start_manifest("synthesize", ctx.args);
  const Config& cfg = rt.config();
  const Viewport vp = cfg.pipeline.viewport;
  const fs::path out = require_out(common);
  CorpusStore store(out, vp);
  if (fs::exists(store.jsonl_path()))
    throw Error(ErrorCode::IoError, out.string() + " already holds a corpus; choose a fresh --out");

  const auto steps = load_steps(input, vp);
  std::vector<UiState> targets;
  for (const auto& s : steps) targets.push_back(s.step.after ? *s.step.after : s.step.before);

  EmbeddingGate gate(rt.embedding(cfg.synthesis.gate));
  SynthesisConfig sc{cfg.synthesis.tau, cfg.synthesis.n_max, rt.concurrency()};
  Synthesizer synth(rt.chat(cfg.synthesis.coder), rt.renderer(), gate, sc, vp);
  const Provenance provenance{cfg.synthesis.coder, rt.renderer().version(), cfg.digest(), cfg.synthesis.tau};

  std::vector<json> items(steps.size());
  auto commit = [&](std::size_t i, const SynthesisOutcome& o) {
    const auto& in = steps[i];
    CorpusRecord r;
    r.id = record_id(in.episode_id, in.step_index, in.step.before.content_hash());
    r.episode_id = in.episode_id;
    r.step_index = in.step_index;
    r.goal = in.step.goal.text();
    r.action = in.step.action;
    r.semantic_description = in.step.semantic_description;
    r.before_image = store.write_asset("images/" + r.id + "_before.png", in.step.before.png());
    r.before_annotated =
        store.write_asset("images/" + r.id + "_before_annotated.png", annotate_action(in.step.before, in.step.action).png());
    if (in.step.after) r.after_image = store.write_asset("images/" + r.id + "_after.png", in.step.after->png());
    if (o.html) r.html = store.write_asset("html/" + r.id + ".html", o.html->source());
    r.gate_score = o.final_score();
    r.revision_count = o.revision_count();
    r.status = o.status;
    r.provenance = provenance;
    store.append(r);

    json attempts = json::array();
    for (const auto& a : o.attempts)
      attempts.push_back({{"html_hash", a.html_hash}, {"gate_score", a.gate_score}, {"revised", a.revised},
                          {"error", a.error}});
    items[i] = {{"index", i}, {"id", r.id}, {"status", to_string(o.status)}, {"attempts", attempts},
                {"coder_calls", o.coder_calls}, {"gate_evaluations", o.gate_evaluations}, {"failure", o.failure}};
  };
  const auto summary = synth.synthesize_corpus(targets, commit);

  const json counts = {{"inputs", steps.size()},
                       {"retained", summary.retained},
                       {"discarded", summary.discarded},
                       {"mean_final_score", summary.mean_final_score},
                       {"revision_rate", summary.revision_rate}};
  json summary_json = counts;
  summary_json["items"] = items;
  write_json(out / "summary.json", summary_json);
  manifest.counts = counts;
  rt.finish(out, manifest);
  ctx.out << counts.dump() << "\n";
  return 0;
}

// --- validate-html ------------------------------------------------------------

int cmd_validate(const CommonOptions& common, const std::string& file, Context& ctx) {
  Runtime rt(common);
  auto manifest = rt.start_manifest("validate-html", ctx.args);
  const HtmlDocument doc(read_file_text(file), rt.config().pipeline.viewport);
  const auto report = validate_html(doc);
  json violations = json::array();
  for (const auto& v : report.violations)
    violations.push_back({{"rule_id", v.rule_id}, {"message", v.message}, {"line", v.line}});
  const json result = {{"valid", report.valid()}, {"html_hash", doc.content_hash()}, {"violations", violations}};
  if (!common.out.empty()) {
    write_json(fs::path(common.out) / "report.json", result);
    manifest.counts = {{"violations", report.violations.size()}};
    rt.finish(common.out, manifest);
  }
  if (report.valid()) {
    ctx.out << "valid\n";
    return 0;
  }
  for (const auto& v : report.violations) ctx.out << v.rule_id << " line " << v.line << ": " << v.message << "\n";
  ctx.err << error_json("InvalidDocument", std::to_string(report.violations.size()) + " violation(s)",
                        exit_code_for(ErrorCode::InvalidDocument))
                 .dump()
          << "\n";
  return exit_code_for(ErrorCode::InvalidDocument);
}

// --- render -------------------------------------------------------------------

int cmd_render(const CommonOptions& common, const std::string& file, bool force, Context& ctx) {
  Runtime rt(common);
  auto manifest = rt.start_manifest("render", ctx.args);
  const fs::path out = require_out(common);
  const HtmlDocument doc(read_file_text(file), rt.config().pipeline.viewport);
  RenderOptions options;
  options.force = force;
  const auto result = rt.renderer().render(doc, options);
  write_file_atomic(out / "render.png", result.image.png());
  const json info = {{"html_hash", result.html_hash},      {"image_hash", result.image.content_hash()},
                     {"renderer_version", result.renderer_version}, {"forced", result.forced},
                     {"width", result.image.width()},      {"height", result.image.height()}};
  write_json(out / "render.json", info);
  manifest.counts = {{"renders", 1}, {"from_cache", result.from_cache}};
  rt.finish(out, manifest);
  ctx.out << info.dump() << "\n";
  return 0;
}

// --- evaluate -----------------------------------------------------------------

CaseRow failed_row(const std::string& id, const GuiAction& action, const std::string& reason, bool sim_a, bool sim_b) {
  CaseRow row;
  row.case_id = id;
  row.action_kind = std::string(to_string(action.kind()));
  for (const char* metric : {"adherence", "inverse", "visual_pair"}) row.failures.push_back(std::string(metric) + ": " + reason);
  if (sim_a) row.failures.push_back("sim_a: " + reason);
  if (sim_b) row.failures.push_back("sim_b: " + reason);
  return row;
}

int cmd_evaluate(const CommonOptions& common, const std::string& corpus, const std::string& pred, Context& ctx) {
  Runtime rt(common);
  auto manifest = rt.start_manifest("evaluate", ctx.args);
  const Config& cfg = rt.config();
  const Viewport vp = cfg.pipeline.viewport;
  const fs::path out = require_out(common);
  const CorpusStore store(corpus, vp);
  const auto records = retained_with_after(store, rt.strict());
  if (records.empty()) throw Error(ErrorCode::EmptyDataset, "corpus " + corpus + " has no retained records with a next screen");

  const bool from_dir = !pred.empty() && fs::is_directory(pred);
  EmbeddingBackend* sim_a = cfg.eval.sim_a.empty() ? nullptr : &rt.embedding(cfg.eval.sim_a);
  EmbeddingBackend* sim_b = cfg.eval.sim_b.empty() ? nullptr : &rt.embedding(cfg.eval.sim_b);
  Evaluator evaluator(rt.chat(cfg.eval.judge), sim_a, sim_b, {rt.concurrency()});
  std::optional<WorldModel> world;
  if (!from_dir) world.emplace(rt.chat(pred.empty() ? cfg.select.world : pred), rt.renderer(), vp);
  Renderer& renderer = rt.renderer();

  std::vector<CaseRow> rows(records.size());
  parallel_for(records.size(), rt.concurrency(), [&](std::size_t i) {
    const auto& rec = records[i];
    const InteractionStep step = record_step(store, rec);
    std::optional<UiState> image;
    std::string reason;
    try {
      if (from_dir) {
        const fs::path file = fs::path(pred) / (rec.id + ".html");
        if (!fs::exists(file)) throw Error(ErrorCode::IoError, "no prediction " + file.string());
        image = renderer.render(HtmlDocument(read_file_text(file), vp)).image;
      } else {
        const auto state = world->predict(step, step.action);
        if (state.html) write_file_atomic(out / "predictions" / (rec.id + ".html"), state.html->source());
        if (state.ok()) image = state.image;
        else reason = state.error;
      }
    } catch (const std::exception& e) {
      reason = code_of(e) + ": " + e.what();
    }
    rows[i] = image ? evaluator.evaluate_case({rec.id, step, *image})
                    : failed_row(rec.id, step.action, "prediction failed: " + reason, sim_a, sim_b);
  });

  const MetricReport report = aggregate(std::move(rows));
  std::vector<json> lines;
  for (const auto& row : report.per_case) lines.push_back(row.to_json());
  write_jsonl(out / "report.jsonl", lines);
  write_file_atomic(out / "report.txt", report.to_text());
  write_json(out / "summary.json", report.summary_json());
  manifest.counts = {{"cases", report.n}, {"failures", report.failures.total()}};
  rt.finish(out, manifest);
  ctx.out << report.to_text();
  if (rt.strict() && report.failures.total() > 0) {
    ctx.err << error_json("StrictFailures", std::to_string(report.failures.total()) + " metric failure(s) in strict mode", 4)
                   .dump()
            << "\n";
    return 4;
  }
  return 0;
}

// --- reward -------------------------------------------------------------------

json breakdown_json(const RewardBreakdown& b) {
  return {{"r_sem", b.r_sem},
          {"r_act", b.r_act},
          {"lambda_sem", b.lambda_sem},
          {"lambda_act", b.lambda_act},
          {"r_total", b.r_total},
          {"reasoning", {b.judge_reasoning.first, b.judge_reasoning.second}}};
}

int cmd_reward(const CommonOptions& common, const std::string& step_file, const std::string& corpus,
               const std::string& pred, std::optional<int> group, Context& ctx) {
  Runtime rt(common);
  auto manifest = rt.start_manifest("reward", ctx.args);
  const Config& cfg = rt.config();
  const Viewport vp = cfg.pipeline.viewport;
  const fs::path out = require_out(common);
  const RewardWeights weights{cfg.reward.lambda_sem, cfg.reward.lambda_act};
  RewardJudge judge(rt.chat(cfg.reward.judge));
  Renderer& renderer = rt.renderer();

  if (!step_file.empty()) {
    if (pred.empty() || fs::is_directory(pred)) throw Error(ErrorCode::ConfigInvalid, "--step needs --pred <file.html>");
    const auto in = load_step_file(step_file, vp);
    const auto image = renderer.render(HtmlDocument(read_file_text(pred), vp)).image;
    const json result = breakdown_json(judge.score(in.step, image, weights));
    write_json(out / "reward.json", result);
    manifest.counts = {{"pairs", 1}};
    rt.finish(out, manifest);
    ctx.out << result.dump() << "\n";
    return 0;
  }
  if (corpus.empty()) throw Error(ErrorCode::ConfigInvalid, "reward needs --step or --corpus");
  const CorpusStore store(corpus, vp);
  const auto records = retained_with_after(store, rt.strict());
  if (records.empty()) throw Error(ErrorCode::EmptyDataset, "corpus " + corpus + " has no retained records with a next screen");

  std::vector<json> lines(records.size());
  if (!pred.empty()) {
    // One given prediction per record.
    parallel_for(records.size(), rt.concurrency(), [&](std::size_t i) {
      const auto& rec = records[i];
      json line = {{"id", rec.id}};
      try {
        const auto step = record_step(store, rec);
        const auto image = renderer.render(HtmlDocument(read_file_text(fs::path(pred) / (rec.id + ".html")), vp)).image;
        line["reward"] = breakdown_json(judge.score(step, image, weights));
      } catch (const std::exception& e) {
        line["error"] = code_of(e) + ": " + e.what();
      }
      lines[i] = line;
    });
  } else {
    // Group rollouts from the world model, scored and normalized per record.
    const int g = group.value_or(cfg.reward.group_size);
    if (g < 2) throw Error(ErrorCode::GroupTooSmall, "--group must be at least 2");
    WorldModel world(rt.chat(cfg.select.world), renderer, vp);
    const std::size_t total = records.size() * static_cast<std::size_t>(g);
    std::vector<json> rollouts(total);
    std::vector<double> rewards(total, 0.0);
    parallel_for(total, rt.concurrency(), [&](std::size_t k) {
      const auto& rec = records[k / static_cast<std::size_t>(g)];
      const int sample = static_cast<int>(k % static_cast<std::size_t>(g));
      json r = {{"sample", sample}};
      try {
        const auto step = record_step(store, rec);
        const auto state = world.predict(step, step.action, sample);
        if (state.html) {
          r["html_hash"] = state.html->content_hash();
          write_file_atomic(out / "rollouts" / (rec.id + "_s" + std::to_string(sample) + ".html"), state.html->source());
        }
        if (!state.ok()) throw Error(ErrorCode::InvalidDocument, state.error);
        const auto b = judge.score(step, *state.image, weights);
        r["reward"] = breakdown_json(b);
        rewards[k] = b.r_total;
      } catch (const std::exception& e) {
        r["error"] = code_of(e) + ": " + e.what();
      }
      rollouts[k] = r;
    });
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto first = rewards.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(g));
      const std::vector<double> group_rewards(first, first + g);
      json rs = json::array();
      for (int s = 0; s < g; ++s) rs.push_back(rollouts[i * static_cast<std::size_t>(g) + static_cast<std::size_t>(s)]);
      lines[i] = {{"id", records[i].id},
                  {"rollouts", rs},
                  {"rewards", group_rewards},
                  {"advantages", grpo_advantages(group_rewards, cfg.reward.eps_std)}};
    }
  }
  write_jsonl(out / "rewards.jsonl", lines);
  manifest.counts = {{"records", records.size()}};
  rt.finish(out, manifest);
  ctx.out << "scored " << records.size() << " record(s)\n";
  return 0;
}

// --- select -------------------------------------------------------------------

int cmd_select(const CommonOptions& common, const std::string& step_file, const std::string& corpus,
               std::optional<int> k, std::string agent_id, std::string world_id, Context& ctx) {
  Runtime rt(common);
  auto manifest = rt.start_manifest("select", ctx.args);
  const Config& cfg = rt.config();
  const Viewport vp = cfg.pipeline.viewport;
  const fs::path out = require_out(common);
  SelectConfig sc{k.value_or(cfg.select.k), cfg.select.include_history, rt.concurrency()};
  if (sc.k < 1) throw Error(ErrorCode::ConfigInvalid, "--k must be at least 1");
  ChatBackend& agent = rt.chat(agent_id.empty() ? cfg.select.agent : agent_id);
  WorldModel world(rt.chat(world_id.empty() ? cfg.select.world : world_id), rt.renderer(), vp);
  Selector selector(rt.chat(cfg.select.verifier), sc);

  auto decide = [&](const std::string& name, const InteractionStep& step) {
    const Decision d = propose_simulate_select(agent, world, selector, step, sc, vp);
    for (const auto& f : d.futures)
      if (f.html)
        write_file_atomic(out / "futures" / (name + "_" + std::to_string(f.proposal_index) + ".html"), f.html->source());
    json j = d.to_json();
    j["case"] = name;
    return j;
  };

  if (!step_file.empty()) {
    const auto in = load_step_file(step_file, vp);
    const json decision = decide("step", in.step);
    write_json(out / "decision.json", decision);
    manifest.counts = {{"decisions", 1}};
    rt.finish(out, manifest);
    ctx.out << decision.at("chosen_action").dump() << "\n";
    return 0;
  }
  if (corpus.empty()) throw Error(ErrorCode::ConfigInvalid, "select needs --step or --corpus");
  const CorpusStore store(corpus, vp);
  const auto records = store.filter(SynthesisStatus::retained, rt.strict());
  if (records.empty()) throw Error(ErrorCode::EmptyDataset, "corpus " + corpus + " has no retained records");
  std::vector<json> lines;
  std::size_t fallbacks = 0, errors = 0;
  for (const auto& rec : records) {
    try {
      lines.push_back(decide(rec.id, record_step(store, rec)));
      fallbacks += lines.back().at("fallback").get<bool>() ? 1 : 0;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AgentUnparseable && e.code() != ErrorCode::EmptyProposalSet) throw;
      lines.push_back({{"case", rec.id}, {"error", std::string(to_string(e.code())) + ": " + e.what()}});
      ++errors;
    }
  }
  write_jsonl(out / "decisions.jsonl", lines);
  manifest.counts = {{"decisions", lines.size()}, {"fallbacks", fallbacks}, {"errors", errors}};
  rt.finish(out, manifest);
  ctx.out << "decided " << lines.size() << " step(s)\n";
  return 0;
}

// --- replay -------------------------------------------------------------------

int cmd_replay(const CommonOptions& common, const std::string& run_dir, Context& ctx) {
  if (common.replay.empty()) throw Error(ErrorCode::ConfigInvalid, "replay needs --replay <script>");
  const fs::path manifest_path = fs::is_directory(run_dir) ? fs::path(run_dir) / "manifest.json" : fs::path(run_dir);
  const RunManifest m = RunManifest::load(manifest_path);
  if (m.command == "replay") throw Error(ErrorCode::ConfigInvalid, "cannot replay a replay");
  std::vector<std::string> args{m.command};
  args.insert(args.end(), m.args.begin(), m.args.end());
  args.insert(args.end(), {"--out", require_out(common).string(), "--replay", common.replay});
  return run(args, ctx.out, ctx.err);
}

void add_common(CLI::App* app, CommonOptions& c) {
  app->add_option("--config", c.config, "Configuration file (INI sections)");
  app->add_option("--out", c.out, "Output directory");
  app->add_option("--max-concurrency", c.max_concurrency, "Upper bound on concurrent work items");
  app->add_flag("--strict", c.strict, "Treat corrupt records and metric failures as errors");
  app->add_option("--record", c.record, "Record backend responses into this stub script");
  app->add_option("--replay", c.replay, "Serve backend responses from this stub script");
  app->add_flag("--timing", c.timing, "Include call durations in calls.jsonl");
}

void setup_logging(bool verbose) {
  static const auto logger = [] {
    auto l = spdlog::stderr_logger_mt("renderworld");
    spdlog::set_default_logger(l);
    return l;
  }();
  logger->set_level(verbose ? spdlog::level::debug : spdlog::level::warn);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Render-aware GUI world-model toolkit", "renderworld"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging on stderr");

  CommonOptions common;
  std::string input, file, corpus, pred, step, agent, world, run_dir;
  std::optional<int> group, k;
  bool force = false;

  auto* synth = app.add_subcommand("synthesize", "Synthesize HTML for screenshots into a corpus");
  synth->add_option("--input", input, "steps.jsonl")->required();
  add_common(synth, common);

  auto* validate = app.add_subcommand("validate-html", "Check a document against the structural rules");
  validate->add_option("file", file, "HTML file")->required();
  add_common(validate, common);

  auto* render = app.add_subcommand("render", "Render a document to PNG");
  render->add_option("file", file, "HTML file")->required();
  render->add_flag("--force", force, "Render even if validation fails");
  add_common(render, common);

  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against a corpus");
  evaluate->add_option("--corpus", corpus, "Corpus directory")->required();
  evaluate->add_option("--pred", pred, "Directory of <id>.html predictions, or a chat backend id");
  add_common(evaluate, common);

  auto* reward = app.add_subcommand("reward", "Judge rewards for predictions or world-model rollouts");
  reward->add_option("--step", step, "Single step JSON file");
  reward->add_option("--corpus", corpus, "Corpus directory");
  reward->add_option("--pred", pred, "Prediction HTML file (with --step) or directory (with --corpus)");
  reward->add_option("--group", group, "Rollouts per record when sampling from the world model");
  add_common(reward, common);

  auto* select = app.add_subcommand("select", "Propose, simulate and select an action");
  select->add_option("--step", step, "Single step JSON file");
  select->add_option("--corpus", corpus, "Corpus directory (one decision per retained record)");
  select->add_option("--k", k, "Number of proposals");
  select->add_option("--agent", agent, "Agent chat backend id");
  select->add_option("--world", world, "World-model chat backend id");
  add_common(select, common);

  auto* replay = app.add_subcommand("replay", "Re-run a recorded command against a stub script");
  replay->add_option("run", run_dir, "Run directory or manifest.json")->required();
  add_common(replay, common);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << error_json("UsageError", e.what(), 2).dump() << "\n";
    return 2;
  }
  setup_logging(verbose);

  const std::vector<std::string> sub_args(args.begin() + 1, args.end());
  Context ctx{sub_args, out, err};
  try {
    if (synth->parsed()) return cmd_synthesize(common, input, ctx);
    if (validate->parsed()) return cmd_validate(common, file, ctx);
    if (render->parsed()) return cmd_render(common, file, force, ctx);
    if (evaluate->parsed()) return cmd_evaluate(common, corpus, pred, ctx);
    if (reward->parsed()) return cmd_reward(common, step, corpus, pred, group, ctx);
    if (select->parsed()) return cmd_select(common, step, corpus, k, agent, world, ctx);
    if (replay->parsed()) return cmd_replay(common, run_dir, ctx);
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    err << error_json(to_string(e.code()), e.what(), code).dump() << "\n";
    return code;
  } catch (const std::exception& e) {
    err << error_json("InternalError", e.what(), 4).dump() << "\n";
    return 4;
  }
  return 2;
}

}  // namespace renderworld::cli
