#include <doctest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = renderworld::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path config_in(const fs::path& dir) {
  rwtest::write_text(dir / "run.ini", "[pipeline]\ncache_dir = cache\nmax_concurrency = 2\n");
  return dir / "run.ini";
}

}  // namespace

TEST_CASE("validate-html") {
  const auto dir = rwtest::scratch_dir("cli-validate");
  rwtest::write_text(dir / "ok.html", rwtest::conforming_html());
  rwtest::write_text(dir / "bad.html", "<div>hi</div>");
  const auto ok = cli({"validate-html", (dir / "ok.html").string()});
  CHECK(ok.code == 0);
  CHECK(ok.out == "valid\n");
  const auto bad = cli({"validate-html", (dir / "bad.html").string(), "--out", (dir / "report").string()});
  CHECK(bad.code == 4);
  CHECK(json::parse(bad.err).at("error") == "InvalidDocument");
  CHECK(fs::exists(dir / "report" / "report.json"));
  CHECK(fs::exists(dir / "report" / "manifest.json"));
}

TEST_CASE("usage errors exit 2") {
  const auto r = cli({"synthesize"});
  CHECK(r.code == 2);
  CHECK(json::parse(r.err).at("exit_code") == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("render writes a PNG and reuses the cache") {
  const auto dir = rwtest::scratch_dir("cli-render");
  const auto cfg = config_in(dir);
  rwtest::write_text(dir / "ok.html", rwtest::conforming_html());
  const auto first = cli({"render", (dir / "ok.html").string(), "--config", cfg.string(), "--out", (dir / "a").string()});
  REQUIRE(first.code == 0);
  const auto second = cli({"render", (dir / "ok.html").string(), "--config", cfg.string(), "--out", (dir / "b").string()});
  REQUIRE(second.code == 0);
  CHECK(rwtest::read_text(dir / "a" / "render.png") == rwtest::read_text(dir / "b" / "render.png"));
  CHECK(json::parse(rwtest::read_text(dir / "a" / "manifest.json")).at("counts").at("from_cache") == false);
  CHECK(json::parse(rwtest::read_text(dir / "b" / "manifest.json")).at("counts").at("from_cache") == true);
}

TEST_CASE("evaluate on an empty corpus fails with EmptyDataset") {
  const auto dir = rwtest::scratch_dir("cli-empty");
  fs::create_directories(dir / "corpus");
  rwtest::write_text(dir / "corpus" / "corpus.jsonl", "");
  const auto r = cli({"evaluate", "--corpus", (dir / "corpus").string(), "--config", config_in(dir).string(), "--out",
                      (dir / "ev").string()});
  CHECK(r.code != 0);
  CHECK(json::parse(r.err).at("error") == "EmptyDataset");
}

TEST_CASE("synthesize refuses to overwrite and replays byte-identically") {
  const auto dir = rwtest::scratch_dir("cli-replay");
  const auto steps = rwtest::write_steps(dir / "in", 3);
  const auto cfg = config_in(dir);
  const auto recorded = cli({"synthesize", "--input", steps.string(), "--config", cfg.string(), "--out",
                             (dir / "run").string(), "--record", (dir / "script.json").string()});
  REQUIRE_MESSAGE(recorded.code == 0, recorded.err);
  CHECK(fs::exists(dir / "script.json"));
  const auto again = cli({"synthesize", "--input", steps.string(), "--config", cfg.string(), "--out", (dir / "run").string()});
  CHECK(again.code == 4);
  const auto replayed = cli({"replay", (dir / "run").string(), "--replay", (dir / "script.json").string(), "--out",
                             (dir / "replayed").string()});
  REQUIRE_MESSAGE(replayed.code == 0, replayed.err);
  CHECK(rwtest::directory_digest(dir / "run") == rwtest::directory_digest(dir / "replayed"));
}
