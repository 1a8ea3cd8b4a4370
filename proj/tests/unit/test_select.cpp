#include <doctest.h>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>
#include <renderworld/error.hpp>
#include <renderworld/select.hpp>

#include "fakes.hpp"
#include "fixtures.hpp"

using namespace renderworld;
using nlohmann::json;

namespace {

const Viewport kVp{};

std::vector<Proposal> proposals(const std::vector<double>& confidences) {
  std::vector<Proposal> out;
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    Proposal p;
    p.index = static_cast<int>(i);
    p.action = parse_action(R"({"action":"click","x":)" + std::to_string(10 + i) + R"(,"y":10})", kVp);
    p.confidence = confidences[i];
    out.push_back(p);
  }
  return out;
}

std::vector<SimulatedFuture> futures(const std::vector<double>& scores, const std::vector<bool>& errored = {}) {
  std::vector<SimulatedFuture> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    SimulatedFuture f;
    f.proposal_index = static_cast<int>(i);
    f.verifier_score = scores[i];
    if (i < errored.size() && errored[i]) {
      f.error = "InvalidDocument";
      f.verifier_score = 0.0;
    }
    out.push_back(f);
  }
  return out;
}

InteractionStep step() { return {TaskGoal("Turn on dark mode"), rwtest::solid_state(), parse_action(R"({"action":"wait"})", kVp), "", std::nullopt, {}}; }

}  // namespace

TEST_CASE("parse proposals") {
  SUBCASE("three distinct") {
    const auto p = parse_proposals(R"({"proposals":[
      {"rationale":"a","action":{"action":"click","x":1,"y":2},"confidence":0.5},
      {"rationale":"b","action":{"action":"scroll","direction":"down"},"confidence":0.3},
      {"rationale":"c","action":{"action":"navigate_back"},"confidence":0.2}]})", 3, kVp);
    REQUIRE(p.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(p[static_cast<std::size_t>(i)].index == i);
    CHECK(p[1].action.kind() == ActionKind::scroll);
  }
  SUBCASE("duplicates keep the higher confidence") {
    const auto p = parse_proposals(R"([
      {"rationale":"a","action":{"action":"click","x":200,"y":300},"confidence":0.6},
      {"rationale":"b","action":{"action":"tap","loc":[200,300]},"confidence":0.9}])", 3, kVp);
    REQUIRE(p.size() == 1);
    CHECK(p[0].confidence == 0.9);
    CHECK(p[0].index == 0);
  }
  SUBCASE("truncation and invalid entries") {
    const auto p = parse_proposals(R"([
      {"action":{"action":"fly"},"confidence":0.9},
      {"action":{"action":"wait"},"confidence":0.1},
      {"action":{"action":"navigate_home"},"confidence":0.2},
      {"action":{"action":"navigate_back"},"confidence":0.3}])", 2, kVp);
    REQUIRE(p.size() == 2);
    CHECK(p[0].action.kind() == ActionKind::wait);
    CHECK(p[1].index == 1);
  }
  SUBCASE("prose only") {
    try {
      parse_proposals("I would click the settings icon.", 3, kVp);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::AgentUnparseable);
    }
  }
  SUBCASE("nothing valid") {
    try {
      parse_proposals(R"({"proposals":[{"action":{"action":"fly"}}]})", 3, kVp);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyProposalSet);
    }
  }
}

TEST_CASE("ranking fixtures") {
  CHECK(rank_and_choose(proposals({0.1, 0.1, 0.1}), futures({6.0, 9.0, 3.0})).chosen.index == 1);
  CHECK(rank_and_choose(proposals({0.4, 0.8}), futures({7.0, 7.0})).chosen.index == 1);
  CHECK(rank_and_choose(proposals({0.5, 0.5}), futures({7.0, 7.0})).chosen.index == 0);
  const auto all_err = rank_and_choose(proposals({0.2, 0.7, 0.5}), futures({0, 0, 0}, {true, true, true}));
  CHECK(all_err.fallback);
  CHECK(all_err.chosen.index == 1);
  const auto some_err = rank_and_choose(proposals({0.2, 0.9}), futures({0.0, 0.0}, {false, true}));
  CHECK_FALSE(some_err.fallback);
  CHECK(some_err.chosen.index == 0);
  CHECK(some_err.ranking.back().errored);
}

TEST_CASE("argmax is invariant under increasing transforms") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::uniform_int_distribution<int> size(1, 6);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = size(rng);
    std::vector<double> s, conf;
    for (int i = 0; i < k; ++i) s.push_back(std::round(u(rng) * 2) / 2), conf.push_back(std::round(u(rng)) / 10);
    std::vector<double> affine, cube;
    for (double x : s) affine.push_back(2 * x + 1), cube.push_back(x * x * x);
    const auto p = proposals(conf);
    const int base = rank_and_choose(p, futures(s)).chosen.index;
    CHECK(rank_and_choose(p, futures(affine)).chosen.index == base);
    CHECK(rank_and_choose(p, futures(cube)).chosen.index == base);
  }
}

TEST_CASE("simulate records document and render problems") {
  rwtest::Backends b;
  auto renderer = rwtest::stub_renderer();
  const auto p = proposals({0.5});
  SUBCASE("valid document") {
    auto chat = b.chat(rwtest::ScriptedChat::replies({rwtest::solid_html("#123456")}),
                       rwtest::chat_profile("w", false, DecodeClass::generator));
    WorldModel wm(*chat, *renderer, kVp);
    const auto f = simulate(wm, step(), p[0]);
    CHECK_FALSE(f.errored());
    CHECK(f.image->width() == 1080);
  }
  SUBCASE("fenced document") {
    auto chat = b.chat(rwtest::ScriptedChat::replies({"```html\n" + rwtest::solid_html("#123456") + "```"}),
                       rwtest::chat_profile("w", false, DecodeClass::generator));
    WorldModel wm(*chat, *renderer, kVp);
    CHECK_FALSE(simulate(wm, step(), p[0]).errored());
  }
  SUBCASE("no document") {
    auto chat = b.chat(rwtest::ScriptedChat::replies({"I can't."}), rwtest::chat_profile("w", false, DecodeClass::generator));
    WorldModel wm(*chat, *renderer, kVp);
    const auto f = simulate(wm, step(), p[0]);
    CHECK(f.errored());
    CHECK(f.verifier_score == 0.0);
    CHECK(f.error.find("NoDocumentFound") != std::string::npos);
  }
}

TEST_CASE("world model prompt carries the annotated screen and the expansion") {
  rwtest::Backends b;
  auto renderer = rwtest::stub_renderer();
  auto chat = b.chat(rwtest::ScriptedChat::replies({"x"}), rwtest::chat_profile("w", false, DecodeClass::generator));
  WorldModel wm(*chat, *renderer, kVp);
  const auto s = step();
  const auto click = parse_action(R"({"action":"click","x":200,"y":300})", kVp);
  const auto prompt = wm.build_prompt(s, click);
  std::string text;
  std::vector<std::string> images;
  for (const auto& m : prompt.messages)
    for (const auto& part : m.parts) {
      if (part.is_text()) text += part.text();
      else images.push_back(part.image().content_hash());
    }
  CHECK(images == std::vector<std::string>{annotate_action(s.before, click).content_hash()});
  CHECK(text.find(expand_instruction(click)) != std::string::npos);
  CHECK(text.find(click.raw_json()) != std::string::npos);
  CHECK(text.find("\"Turn on dark mode\"") != std::string::npos);
  CHECK(prompt.decode == kGeneratorDecode);
}

TEST_CASE("end to end decision") {
  rwtest::Backends b;
  auto renderer = rwtest::stub_renderer();
  auto agent = b.chat(rwtest::ScriptedChat::replies({R"({"proposals":[
      {"rationale":"a","action":{"action":"click","x":1,"y":2},"confidence":0.5},
      {"rationale":"b","action":{"action":"scroll","direction":"down"},"confidence":0.3},
      {"rationale":"c","action":{"action":"navigate_back"},"confidence":0.9}]})"}),
                      rwtest::chat_profile("agent", false, DecodeClass::generator));
  auto world = b.chat(std::make_shared<rwtest::ScriptedChat>([](const ChatRequest& r, int) {
                        const std::string text = r.messages.back().parts.back().text();
                        return text.find("scroll") != std::string::npos ? rwtest::solid_html("#00ff00")
                                                                         : rwtest::solid_html("#ff0000");
                      }),
                      rwtest::chat_profile("world", false, DecodeClass::generator));
  auto verifier = b.chat(std::make_shared<rwtest::ScriptedChat>([](const ChatRequest& r, int) {
    std::string text;
    for (const auto& m : r.messages)
      for (const auto& p : m.parts)
        if (p.is_text()) text += p.text();
    return rwtest::score_reply(text.find("\"scroll\"") != std::string::npos ? 9.0 : 4.0);
  }));
  WorldModel wm(*world, *renderer, kVp);
  SelectConfig cfg{3, false, 3};
  Selector selector(*verifier, cfg);
  const auto d = propose_simulate_select(*agent, wm, selector, step(), cfg, kVp);
  REQUIRE(d.proposals.size() == 3);
  CHECK(d.selection.chosen.index == 1);
  CHECK_FALSE(d.selection.fallback);
  const json j = d.to_json();
  CHECK(j.at("chosen_index") == 1);
  CHECK(j.at("futures").size() == 3);

  const auto vp = selector.verifier_prompt(step(), d.proposals[0], rwtest::solid_state());
  std::string text;
  for (const auto& m : vp.messages)
    for (const auto& p : m.parts)
      if (p.is_text()) text += p.text();
  CHECK(text.find("Interaction History: not provided") != std::string::npos);
}
