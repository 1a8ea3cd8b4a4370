#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <renderworld/backends.hpp>
#include <renderworld/error.hpp>
#include <renderworld/similarity.hpp>

#include "fakes.hpp"
#include "fixtures.hpp"

using namespace renderworld;
using nlohmann::json;

namespace {

AssembledPrompt judge_prompt(const UiState& a, const UiState& b) {
  const std::vector<UiState> imgs{a, b};
  return assemble(TemplateId::reward_visual, {}, imgs);
}

AssembledPrompt generator_prompt(const UiState& gt) {
  return assemble(TemplateId::initial_synthesis, {{"width", "1080"}, {"height", "2400"}}, std::span(&gt, 1));
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("stub chat echoes the scripted fixture") {
  rwtest::Backends b;
  auto t = rwtest::ScriptedChat::replies({"fixture text"});
  auto chat = b.chat(t);
  const auto img = rwtest::solid_state();
  CHECK(chat->chat(judge_prompt(img, img)) == "fixture text");
  REQUIRE(t->requests().size() == 1);
  const auto req = t->requests()[0];
  CHECK(req.template_name == "reward_visual");
  CHECK(req.decode == kJudgeDecode);
  CHECK(req.match_key.rfind("reward_visual:", 0) == 0);
  CHECK(req.match_key.size() == std::string("reward_visual:").size() + 16);
}

TEST_CASE("transport error then success is retried") {
  rwtest::Backends b;
  auto t = std::make_shared<rwtest::ScriptedChat>([](const ChatRequest&, int call) -> std::string {
    if (call == 0) throw Error(ErrorCode::TransportError, "connection reset");
    return "ok";
  });
  auto chat = b.chat(t);
  const auto img = rwtest::solid_state();
  CHECK(chat->chat(judge_prompt(img, img)) == "ok");
  const auto records = b.log->records();
  REQUIRE(records.size() == 1);
  CHECK(records[0].retries == 1);
  CHECK(records[0].ok);
  CHECK_FALSE(records[0].cache_hit);
}

TEST_CASE("retry policy") {
  const auto img = rwtest::solid_state();
  SUBCASE("exhausted retries become BackendFailure") {
    rwtest::Backends b;
    auto t = std::make_shared<rwtest::ScriptedChat>(
        [](const ChatRequest&, int) -> std::string { throw HttpStatusError(503, "busy"); });
    auto chat = b.chat(t);
    CHECK(code_of([&] { chat->chat(judge_prompt(img, img)); }) == ErrorCode::BackendFailure);
    CHECK(t->calls() == 3);
    CHECK_FALSE(b.log->records().at(0).ok);
  }
  SUBCASE("client errors are not retried") {
    rwtest::Backends b;
    auto t = std::make_shared<rwtest::ScriptedChat>(
        [](const ChatRequest&, int) -> std::string { throw HttpStatusError(400, "bad"); });
    auto chat = b.chat(t);
    CHECK(code_of([&] { chat->chat(judge_prompt(img, img)); }) == ErrorCode::HttpStatus);
    CHECK(t->calls() == 1);
  }
  SUBCASE("429 is retried") {
    rwtest::Backends b;
    auto t = std::make_shared<rwtest::ScriptedChat>([](const ChatRequest&, int call) -> std::string {
      if (call < 2) throw HttpStatusError(429, "slow down");
      return "fine";
    });
    auto chat = b.chat(t);
    CHECK(chat->chat(judge_prompt(img, img)) == "fine");
    CHECK(b.log->records().at(0).retries == 2);
  }
}

TEST_CASE("caching follows the temperature threshold") {
  rwtest::Backends b;
  auto t = rwtest::ScriptedChat::replies({"a", "b", "c", "d"});
  auto chat = b.chat(t, rwtest::chat_profile("cached", true));
  const auto img = rwtest::solid_state();
  SUBCASE("judge decode is cached") {
    CHECK(chat->chat(judge_prompt(img, img)) == "a");
    CHECK(chat->chat(judge_prompt(img, img)) == "a");
    CHECK(t->calls() == 1);
    CHECK(b.log->backend_calls() == 1);
    CHECK(b.log->records().size() == 2);
  }
  SUBCASE("temperature 0.7 bypasses the cache") {
    CHECK(chat->chat(generator_prompt(img)) == "a");
    CHECK(chat->chat(generator_prompt(img)) == "b");
    CHECK(t->calls() == 2);
  }
  SUBCASE("explicit decode at the threshold is cached") {
    ChatOptions o;
    o.decode = DecodeParams{kCacheTemperatureThreshold, 100};
    chat->chat(generator_prompt(img), o);
    chat->chat(generator_prompt(img), o);
    CHECK(t->calls() == 1);
  }
  SUBCASE("suffix and sample index change the key") {
    chat->chat(judge_prompt(img, img));
    ChatOptions retry;
    retry.suffix = "Respond with JSON only.";
    chat->chat(judge_prompt(img, img), retry);
    ChatOptions sample;
    sample.sample_index = 2;
    chat->chat(judge_prompt(img, img), sample);
    CHECK(t->calls() == 3);
    const auto reqs = t->requests();
    CHECK(reqs[1].match_key.size() > reqs[0].match_key.size());
    CHECK(reqs[1].match_key.substr(reqs[1].match_key.size() - 6) == "/retry");
    CHECK(reqs[2].match_key.substr(reqs[2].match_key.size() - 3) == "/s2");
    const auto& last_user = reqs[1].messages.back();
    CHECK(last_user.parts.back().text() == "Respond with JSON only.");
  }
}

TEST_CASE("concurrent identical calls share one transport call") {
  rwtest::Backends b;
  auto t = std::make_shared<rwtest::ScriptedChat>([](const ChatRequest&, int) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    return std::string("same");
  });
  auto chat = b.chat(t, rwtest::chat_profile("cached", true));
  const auto img = rwtest::solid_state();
  const auto prompt = judge_prompt(img, img);
  std::vector<std::thread> threads;
  for (int i = 0; i < 6; ++i) threads.emplace_back([&] { CHECK(chat->chat(prompt) == "same"); });
  for (auto& th : threads) th.join();
  CHECK(t->calls() == 1);
  CHECK(b.log->backend_calls() == 1);
}

TEST_CASE("disk cache survives a new backend and detects collisions") {
  const auto dir = rwtest::scratch_dir("response-cache");
  const auto img = rwtest::solid_state();
  {
    rwtest::Backends b;
    b.cache = std::make_shared<ResponseCache>(dir);
    auto chat = b.chat(rwtest::ScriptedChat::replies({"stored"}), rwtest::chat_profile("p", true));
    chat->chat(judge_prompt(img, img));
  }
  rwtest::Backends b;
  b.cache = std::make_shared<ResponseCache>(dir);
  auto t = rwtest::ScriptedChat::replies({"fresh"});
  auto chat = b.chat(t, rwtest::chat_profile("p", true));
  CHECK(chat->chat(judge_prompt(img, img)) == "stored");
  CHECK(t->calls() == 0);
  CHECK(b.log->backend_calls() == 0);

  ResponseCache raw(dir);
  CHECK(raw.get_or_compute("k1", "request-a", [] { return std::string("A"); }).response == "A");
  ResponseCache again(dir);
  const auto hit = again.get_or_compute("k1", "request-a", [] { return std::string("X"); });
  CHECK(hit.hit);
  CHECK(hit.response == "A");
  ResponseCache collide(dir);
  const auto miss = collide.get_or_compute("k1", "request-b", [] { return std::string("B"); });
  CHECK_FALSE(miss.hit);
  CHECK(miss.response == "B");
}

TEST_CASE("wire body follows the chat-completions schema") {
  const auto img = rwtest::solid_state();
  const auto profile = rwtest::chat_profile();
  rwtest::Backends b;
  auto chat = b.chat(rwtest::ScriptedChat::replies({"x"}));
  const auto req = chat->build_request(judge_prompt(img, img), {});
  const json wire = json::parse(chat_wire_body(profile, req));
  CHECK(wire.at("model") == "test-model");
  CHECK(wire.at("temperature") == 0.1);
  CHECK(wire.at("max_tokens") == 1024);
  const auto& user = wire.at("messages").back();
  CHECK(user.at("role") == "user");
  int images = 0;
  for (const auto& part : user.at("content"))
    if (part.at("type") == "image_url") {
      ++images;
      CHECK(part.at("image_url").at("url").get<std::string>().rfind("data:image/png;base64,", 0) == 0);
    }
  CHECK(images == 2);
  const json canonical = json::parse(chat_canonical_body(profile, req));
  CHECK(canonical.dump().find("sha256:" + img.content_hash()) != std::string::npos);
}

TEST_CASE("embedding backend caches and checks dimensions") {
  rwtest::Backends b;
  auto t = std::make_shared<rwtest::ScriptedEmbedding>([](const UiState& s) { return seeded_embedding(s.content_hash(), 8); });
  auto emb = b.embedding(t, rwtest::embedding_profile("e", 8));
  const auto img = rwtest::solid_state();
  const auto v1 = emb->embed(img);
  const auto v2 = emb->embed(img);
  CHECK(v1 == v2);
  CHECK(t->calls() == 1);
  CHECK(b.log->records().at(1).cache_hit);

  auto wrong = b.embedding(t, rwtest::embedding_profile("wrong", 16));
  CHECK(code_of([&] { wrong->embed(rwtest::solid_state({1, 1, 1, 255})); }) == ErrorCode::DimensionMismatchEmbedding);
}

TEST_CASE("seeded embeddings are reproducible unit vectors") {
  const auto a = seeded_embedding("abc", 64);
  const auto b = seeded_embedding("abc", 64);
  const auto c = seeded_embedding("abd", 64);
  CHECK(a == b);
  CHECK(a != c);
  double norm = 0;
  for (double x : a) norm += x * x;
  CHECK(std::abs(norm - 1.0) < 1e-12);
  CHECK(cosine_similarity(a, b) == doctest::Approx(1.0));
  // Cosine of two seeded vectors, checked against a direct dot product.
  double dot = 0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * c[i];
  CHECK(cosine_similarity(a, c) == doctest::Approx(dot).epsilon(1e-12));
}

TEST_CASE("thumbnail embedding is the 8x16 grid of mean colors") {
  Image img(1080, 2400, {0, 0, 0, 255});
  img.fill_rect(0, 0, 1080, 150, {255, 0, 0, 255});  // first grid row is 150 px tall
  const auto v = thumbnail_embedding(UiState::from_image(img, ImageOrigin::ground_truth));
  REQUIRE(v.size() == 8 * 16 * 3);
  CHECK(v[0] == doctest::Approx(1.0));
  CHECK(v[1] == doctest::Approx(0.0));
  CHECK(v[3 * 8] == doctest::Approx(0.0));
}

TEST_CASE("stub transports") {
  auto script = std::make_shared<StubScript>();
  script->put_chat("reward_visual:*", R"({"score":7,"reasoning":"wild"})");
  rwtest::Backends b;
  const auto img = rwtest::solid_state();
  SUBCASE("wildcard match") {
    auto chat = b.chat(make_stub_chat_transport(script, ChatFallback::none));
    CHECK(chat->chat(judge_prompt(img, img)) == R"({"score":7,"reasoning":"wild"})");
  }
  SUBCASE("unmatched key names the key") {
    auto chat = b.chat(make_stub_chat_transport(script, ChatFallback::none));
    try {
      chat->chat(generator_prompt(img));
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::StubMiss);
      CHECK(std::string(e.what()).find("initial_synthesis:") != std::string::npos);
    }
  }
  SUBCASE("record then replay") {
    auto sink = std::make_shared<StubScript>();
    auto live = rwtest::ScriptedChat::replies({"live answer"});
    auto recording = b.chat(make_recording_chat_transport(live, sink));
    CHECK(recording->chat(generator_prompt(img)) == "live answer");
    CHECK(sink->size() == 1);
    const auto path = rwtest::scratch_dir("stub-script") / "script.json";
    sink->save(path);
    auto loaded = std::make_shared<const StubScript>(StubScript::load(path));
    rwtest::Backends b2;
    auto replay = b2.chat(make_stub_chat_transport(loaded, ChatFallback::none));
    CHECK(replay->chat(generator_prompt(img)) == "live answer");
    StubScript reloaded = StubScript::load(path);
    const auto path2 = path.parent_path() / "script2.json";
    reloaded.save(path2);
    CHECK(rwtest::read_text(path) == rwtest::read_text(path2));
  }
  SUBCASE("embedding script and fallback") {
    script->put_embedding(img.content_hash(), {1.0, 0.0});
    auto emb = b.embedding(make_stub_embedding_transport(script, EmbedFallback::none, 2), rwtest::embedding_profile("e", 2));
    CHECK(emb->embed(img) == std::vector<double>{1.0, 0.0});
    CHECK(code_of([&] { emb->embed(rwtest::solid_state({9, 9, 9, 255})); }) == ErrorCode::StubMiss);
    auto seeded = b.embedding(make_stub_embedding_transport(nullptr, EmbedFallback::seeded, 32),
                              rwtest::embedding_profile("s", 32));
    const auto other = rwtest::solid_state({9, 9, 9, 255});
    CHECK(seeded->embed(other) == seeded_embedding(other.content_hash(), 32));
  }
}

TEST_CASE("call log is written sorted and without timing by default") {
  CallLog log;
  log.add({"b", "chat", "k2", false, 0, 5.0, true, ""});
  log.add({"a", "chat", "k1", true, 0, 7.0, true, ""});
  const auto dir = rwtest::scratch_dir("call-log");
  log.write_jsonl(dir / "calls.jsonl", false);
  const std::string text = rwtest::read_text(dir / "calls.jsonl");
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  CHECK(lines.size() == 2);
  CHECK(std::is_sorted(lines.begin(), lines.end()));
  CHECK(text.find("duration") == std::string::npos);
  log.write_jsonl(dir / "timed.jsonl", true);
  CHECK(rwtest::read_text(dir / "timed.jsonl").find("duration_ms") != std::string::npos);
  CHECK(log.backend_calls() == 1);
}

TEST_CASE("similarity") {
  const auto img = rwtest::solid_state();
  CHECK(cosine_similarity(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) == doctest::Approx(1.0));
  CHECK(map_similarity(0.0, true) == 0.5);
  CHECK(map_similarity(0.3, false) == 0.3);
  CHECK(map_similarity(-0.2, false) == 0.0);
  CHECK(code_of([] { cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 0}); }) ==
        ErrorCode::DegenerateEmbedding);

  rwtest::Backends b;
  SUBCASE("identical images give 1") {
    auto emb = b.embedding(make_stub_embedding_transport(nullptr, EmbedFallback::seeded, 16), rwtest::embedding_profile("s", 16));
    CHECK(embedding_similarity(img, img, *emb) == doctest::Approx(1.0));
  }
  SUBCASE("orthogonal fixtures map to 0.5") {
    const auto other = rwtest::solid_state({0, 0, 0, 255});
    auto t = std::make_shared<rwtest::ScriptedEmbedding>([&](const UiState& s) {
      return s.content_hash() == img.content_hash() ? std::vector<double>{1, 0, 0} : std::vector<double>{0, 1, 0};
    });
    auto emb = b.embedding(t, rwtest::embedding_profile("o", 3, true));
    CHECK(embedding_similarity(img, other, *emb) == 0.5);
  }
  SUBCASE("zero vector is degenerate") {
    auto t = std::make_shared<rwtest::ScriptedEmbedding>([](const UiState&) { return std::vector<double>{0, 0}; });
    auto emb = b.embedding(t, rwtest::embedding_profile("z", 2));
    CHECK(code_of([&] { embedding_similarity(img, img, *emb); }) == ErrorCode::DegenerateEmbedding);
  }
}
