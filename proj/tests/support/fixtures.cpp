#include "fixtures.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>
#include <renderworld/digest.hpp>

namespace rwtest {

namespace fs = std::filesystem;
using renderworld::Image;
using renderworld::Rgba;

namespace {

Rgba color(std::mt19937& rng, int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  return {static_cast<std::uint8_t>(d(rng)), static_cast<std::uint8_t>(d(rng)), static_cast<std::uint8_t>(d(rng)), 255};
}

}  // namespace

Image make_screen(std::uint32_t seed, int width, int height) {
  std::mt19937 rng(seed);
  Image img(width, height, color(rng, 200, 255));
  img.fill_rect(0, 0, width, height / 12, color(rng, 20, 120));
  const int cards = 3 + static_cast<int>(rng() % 4);
  const int top = height / 12 + 40;
  const int card_h = (height * 3 / 4) / cards - 30;
  for (int i = 0; i < cards; ++i) img.fill_rect(40, top + i * (card_h + 30), width - 80, card_h, color(rng, 60, 230));
  img.fill_rect(0, height - height / 14, width, height / 14, color(rng, 30, 90));
  return img;
}

fs::path write_steps(const fs::path& dir, int count, std::uint32_t seed) {
  fs::create_directories(dir / "screens");
  std::ofstream out(dir / "steps.jsonl", std::ios::binary | std::ios::trunc);
  static const char* const kGoals[] = {"Open the settings page", "Find the weather for tomorrow",
                                       "Send a message to Alex", "Turn on dark mode"};
  for (int i = 0; i < count; ++i) {
    const std::uint32_t s = seed * 1000u + static_cast<std::uint32_t>(i);
    const std::string before = "screens/" + std::to_string(i) + "_before.png";
    const std::string after = "screens/" + std::to_string(i) + "_after.png";
    const auto before_png = renderworld::encode_png(make_screen(s));
    const auto after_png = renderworld::encode_png(make_screen(s + 500));
    std::ofstream(dir / before, std::ios::binary).write(reinterpret_cast<const char*>(before_png.data()),
                                                        static_cast<std::streamsize>(before_png.size()));
    std::ofstream(dir / after, std::ios::binary).write(reinterpret_cast<const char*>(after_png.data()),
                                                       static_cast<std::streamsize>(after_png.size()));
    nlohmann::json action;
    switch (i % 6) {
      case 0: action = {{"action", "click"}, {"x", 200 + 60 * i}, {"y", 300 + 90 * i}}; break;
      case 1: action = {{"action", "scroll"}, {"direction", i % 4 == 1 ? "up" : "down"}}; break;
      case 2: action = {{"action", "input_text"}, {"text", "hello " + std::to_string(i)}}; break;
      case 3: action = {{"action", "open_app"}, {"app_name", "Clock"}}; break;
      case 4: action = {{"action", "navigate_back"}}; break;
      default: action = {{"action", "long_press"}, {"x", 540}, {"y", 1200}}; break;
    }
    nlohmann::json step = {{"episode_id", "ep" + std::to_string(i / 4)},
                           {"step_index", i % 4},
                           {"goal", kGoals[i % 4]},
                           {"before", before},
                           {"after", after},
                           {"action", action}};
    out << step.dump() << "\n";
  }
  return dir / "steps.jsonl";
}

std::string conforming_html(int width, int height) {
  std::ostringstream s;
  s << "<!DOCTYPE html>\n"
       "<html>\n"
       "<head>\n"
       "<meta charset=\"utf-8\">\n"
       "<style>\n"
       "body { margin: 0; padding: 0; background: transparent; }\n"
       "#render-target { width: "
    << width << "px; height: " << height
    << "px; position: relative; overflow: hidden; background: #ffffff; }\n"
       ".bar { position: absolute; left: 0px; top: 0px; width: "
    << width
    << "px; height: 200px; background: #1a73e8; }\n"
       "</style>\n"
       "</head>\n"
       "<body>\n"
       "<div id=\"render-target\">\n"
       "  <div class=\"bar\">Settings</div>\n"
       "  <p>Wi-Fi</p>\n"
       "  [IMG: Profile avatar of a smiling person]\n"
       "</div>\n"
       "</body>\n"
       "</html>\n";
  return s.str();
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary | std::ios::trunc) << text;
}

std::map<std::string, std::string> directory_digest(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), dir).generic_string();
    std::string text = read_text(entry.path());
    if (entry.path().filename() == "manifest.json") {
      auto j = nlohmann::json::parse(text);
      j.erase("started_at");
      j.erase("finished_at");
      j.erase("args");
      text = j.dump();
    }
    out[rel] = renderworld::sha256_hex(text);
  }
  return out;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "renderworld-tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace rwtest
