#include <random>

#include <benchmark/benchmark.h>
#include <renderworld/evaluation.hpp>
#include <renderworld/grpo.hpp>
#include <renderworld/html.hpp>
#include <renderworld/image.hpp>
#include <renderworld/prompting.hpp>

using namespace renderworld;

namespace {

const char* const kDocument = R"(<!DOCTYPE html>
<html>
<head>
<style>
  html, body { margin: 0; padding: 0; background: transparent; }
  #render-target { width: 1080px; height: 2400px; position: relative; overflow: hidden; background: #ffffff; }
  .row { height: 160px; border-bottom: 1px solid #dddddd; font-size: 42px; padding: 24px; }
</style>
</head>
<body>
<div id="render-target">
  <div class="row"><p>Wi-Fi</p></div>
  <div class="row"><p>Bluetooth</p></div>
  <div class="row">[IMG: Profile avatar of a smiling person]</div>
</div>
</body>
</html>
)";

Image screen() {
  Image img(1080, 2400, {245, 245, 245, 255});
  img.fill_rect(0, 0, 1080, 180, {33, 150, 243, 255});
  for (int i = 0; i < 6; ++i) img.fill_rect(40, 240 + i * 320, 1000, 280, {255, 255, 255, 255});
  return img;
}

void BM_GrpoAdvantages(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<double> rewards(static_cast<std::size_t>(state.range(0)));
  for (auto& r : rewards) r = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(grpo_advantages(rewards));
}
BENCHMARK(BM_GrpoAdvantages)->Arg(2)->Arg(8)->Arg(64);

void BM_ValidateHtml(benchmark::State& state) {
  const HtmlDocument doc(kDocument, Viewport{});
  for (auto _ : state) benchmark::DoNotOptimize(validate_html(doc));
}
BENCHMARK(BM_ValidateHtml);

void BM_EncodePng(benchmark::State& state) {
  const Image img = screen();
  for (auto _ : state) benchmark::DoNotOptimize(encode_png(img));
}
BENCHMARK(BM_EncodePng)->Unit(benchmark::kMillisecond);

void BM_AnnotateClick(benchmark::State& state) {
  const UiState before = UiState::from_image(screen(), ImageOrigin::ground_truth);
  const GuiAction click = parse_action(R"({"action":"click","x":540,"y":1200})", Viewport{});
  for (auto _ : state) benchmark::DoNotOptimize(annotate_action(before, click));
}
BENCHMARK(BM_AnnotateClick)->Unit(benchmark::kMillisecond);

void BM_Aggregate(benchmark::State& state) {
  std::vector<CaseRow> rows(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].case_id = "c" + std::to_string(i);
    rows[i].adherence = static_cast<double>(i % 11);
    rows[i].inverse_correct = i % 3 != 0;
    rows[i].element_alignment = 7.0;
    rows[i].layout_integrity = 8.0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(aggregate(rows));
}
BENCHMARK(BM_Aggregate)->Arg(50)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
