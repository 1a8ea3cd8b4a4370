#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <regex>

#include <nlohmann/json.hpp>

#include "renderworld/backends.hpp"
#include "renderworld/corpus.hpp"
#include "renderworld/digest.hpp"
#include "renderworld/error.hpp"

namespace renderworld {

namespace fs = std::filesystem;
using nlohmann::json;

// --- StubScript ---------------------------------------------------------------

StubScript StubScript::load(const fs::path& path) {
  StubScript script;
  json j;
  try {
    j = json::parse(read_file_text(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, "stub script " + path.string() + " is not valid JSON: " + e.what());
  }
  if (j.contains("chat")) script.chat_ = j.at("chat").get<std::map<std::string, std::string>>();
  if (j.contains("embedding")) script.embed_ = j.at("embedding").get<std::map<std::string, std::vector<double>>>();
  return script;
}

void StubScript::save(const fs::path& path) const {
  json j;
  {
    std::lock_guard lock(mutex_);
    j = {{"chat", chat_}, {"embedding", embed_}};
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_atomic(path, j.dump(2) + "\n");
}

std::optional<std::string> StubScript::find_chat(const std::string& match_key, const std::string& template_name) const {
  std::lock_guard lock(mutex_);
  if (auto it = chat_.find(match_key); it != chat_.end()) return it->second;
  if (auto it = chat_.find(template_name + ":*"); it != chat_.end()) return it->second;
  return std::nullopt;
}

std::optional<std::vector<double>> StubScript::find_embedding(const std::string& image_hash) const {
  std::lock_guard lock(mutex_);
  if (auto it = embed_.find(image_hash); it != embed_.end()) return it->second;
  return std::nullopt;
}

void StubScript::put_chat(const std::string& match_key, std::string response) {
  std::lock_guard lock(mutex_);
  chat_[match_key] = std::move(response);
}

void StubScript::put_embedding(const std::string& image_hash, std::vector<double> vector) {
  std::lock_guard lock(mutex_);
  embed_[image_hash] = std::move(vector);
}

std::size_t StubScript::size() const {
  std::lock_guard lock(mutex_);
  return chat_.size() + embed_.size();
}

// --- synthetic responses --------------------------------------------------------

namespace {

constexpr int kGridCols = 8;
constexpr int kGridRows = 16;

std::uint64_t seed_of(const std::string& hex) { return std::stoull(hex.substr(0, 16), nullptr, 16); }

std::vector<UiState> images_of(const ChatRequest& request) {
  std::vector<UiState> out;
  for (const auto& m : request.messages)
    for (const auto& p : m.parts)
      if (!p.is_text()) out.push_back(p.image());
  return out;
}

std::string text_of(const ChatRequest& request) {
  std::string out;
  for (const auto& m : request.messages)
    for (const auto& p : m.parts)
      if (p.is_text()) out += p.text() + "\n";
  return out;
}

// Mean color of each cell of a cols x rows grid.
std::vector<Rgba> grid_means(const Image& image, int cols, int rows) {
  std::vector<Rgba> cells;
  cells.reserve(static_cast<std::size_t>(cols * rows));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int x0 = c * image.width() / cols, x1 = (c + 1) * image.width() / cols;
      const int y0 = r * image.height() / rows, y1 = (r + 1) * image.height() / rows;
      double sum[3] = {0, 0, 0};
      const double n = std::max(1, (x1 - x0) * (y1 - y0));
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
          const Rgba p = image.at(x, y);
          sum[0] += p.r;
          sum[1] += p.g;
          sum[2] += p.b;
        }
      cells.push_back({static_cast<std::uint8_t>(std::lround(sum[0] / n)),
                       static_cast<std::uint8_t>(std::lround(sum[1] / n)),
                       static_cast<std::uint8_t>(std::lround(sum[2] / n)), 255});
    }
  return cells;
}

// Grid means of a screenshot, memoized by content hash.
std::vector<Rgba> screen_grid(const UiState& state) {
  static std::mutex mutex;
  static std::map<std::string, std::vector<Rgba>> memo;
  {
    std::lock_guard lock(mutex);
    if (auto it = memo.find(state.content_hash()); it != memo.end()) return it->second;
  }
  auto cells = grid_means(state.decode(), kGridCols, kGridRows);
  std::lock_guard lock(mutex);
  if (memo.size() > 4096) memo.clear();
  memo.emplace(state.content_hash(), cells);
  return cells;
}

std::string hex_color(Rgba c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

// A conforming document that paints the reference screenshot as a grid of
// absolutely positioned blocks, so the stub renderer reproduces its layout.
std::string grid_document(const UiState& reference) {
  const int w = reference.width(), h = reference.height();
  const auto cells = screen_grid(reference);
  std::string html =
      "<!DOCTYPE html>\n<html>\n<head>\n<style>\n"
      "body { margin: 0; padding: 0; background: transparent; }\n"
      "#render-target { width: " + std::to_string(w) + "px; height: " + std::to_string(h) +
      "px; position: relative; overflow: hidden; background: " + hex_color(cells.front()) +
      "; }\n</style>\n</head>\n<body>\n<div id=\"render-target\">\n";
  for (int r = 0; r < kGridRows; ++r)
    for (int c = 0; c < kGridCols; ++c) {
      const int x0 = c * w / kGridCols, x1 = (c + 1) * w / kGridCols;
      const int y0 = r * h / kGridRows, y1 = (r + 1) * h / kGridRows;
      html += "  <div style=\"position: absolute; left: " + std::to_string(x0) + "px; top: " + std::to_string(y0) +
              "px; width: " + std::to_string(x1 - x0) + "px; height: " + std::to_string(y1 - y0) +
              "px; background: " + hex_color(cells[static_cast<std::size_t>(r * kGridCols + c)]) + ";\"></div>\n";
    }
  html += "</div>\n</body>\n</html>\n";
  return html;
}

// Similarity of two screenshots in [0,1] from their grid means.
double grid_similarity(const UiState& a, const UiState& b) {
  const auto ga = screen_grid(a);
  const auto gb = screen_grid(b);
  double diff = 0.0;
  for (std::size_t i = 0; i < ga.size(); ++i)
    diff += std::abs(ga[i].r - gb[i].r) + std::abs(ga[i].g - gb[i].g) + std::abs(ga[i].b - gb[i].b);
  return 1.0 - diff / (255.0 * 3.0 * static_cast<double>(ga.size()));
}

double one_decimal(double x) { return std::round(x * 10.0) / 10.0; }

}  // namespace

std::string synthetic_chat_response(const ChatRequest& request) {
  const std::string digest = sha256_hex(request.match_key + "\n" + text_of(request));
  const auto images = images_of(request);
  const std::string& t = request.template_name;

  if (t == "initial_synthesis" || t == "revision" || t == "world_model_user") {
    if (images.empty()) throw Error(ErrorCode::StubMiss, "synthetic " + t + " needs a reference image");
    return grid_document(images.front());
  }
  if (t == "agent_propose") {
    const auto& shot = images.at(0);
    int k = 3;
    std::smatch m;
    const std::string text = text_of(request);
    static const std::regex kCount(R"(propose up to (\d+))");
    if (std::regex_search(text, m, kCount)) k = std::stoi(m[1]);
    std::mt19937_64 rng(seed_of(digest));
    json proposals = json::array();
    for (int i = 0; i < k; ++i) {
      json action;
      switch (i % 3) {
        case 0:
          action = {{"action", "click"},
                    {"x", static_cast<int>(rng() % static_cast<std::uint64_t>(shot.width()))},
                    {"y", static_cast<int>(rng() % static_cast<std::uint64_t>(shot.height()))}};
          break;
        case 1: action = {{"action", "scroll"}, {"direction", (rng() & 1) ? "down" : "up"}}; break;
        default: action = {{"action", "navigate_back"}}; break;
      }
      proposals.push_back({{"rationale", "candidate " + std::to_string(i + 1)},
                           {"action", action},
                           {"confidence", one_decimal(static_cast<double>(rng() % 1000) / 1000.0)}});
    }
    return json{{"proposals", proposals}}.dump();
  }
  if (images.size() < 2) throw Error(ErrorCode::StubMiss, "synthetic " + t + " needs two images");
  const double sim = grid_similarity(images[0], images[1]);
  if (t == "eval_inverse") {
    const std::string label = sim >= 0.999 ? "wait" : "click";
    return json{{"inferred_action", label}, {"reasoning", "synthetic: grid difference"}}.dump();
  }
  if (t == "eval_visual_pair") {
    const double s = one_decimal(1.0 + 9.0 * sim);
    return json{{"reasoning", "synthetic: grid similarity"},
                {"element_alignment_score", s},
                {"structural_fidelity_score", one_decimal(std::min(10.0, s + 0.2))}}
        .dump();
  }
  return json{{"score", one_decimal(10.0 * sim)}, {"reasoning", "synthetic: grid similarity"}}.dump();
}

std::vector<double> seeded_embedding(const std::string& image_hash, int dimension) {
  if (dimension <= 0) throw Error(ErrorCode::InvalidArgument, "seeded embedding needs a positive dimension");
  std::mt19937_64 rng(seed_of(image_hash));
  std::normal_distribution<double> normal;
  std::vector<double> v(static_cast<std::size_t>(dimension));
  double norm = 0.0;
  for (auto& x : v) {
    x = normal(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

std::vector<double> thumbnail_embedding(const UiState& image) {
  std::vector<double> v;
  for (const Rgba c : screen_grid(image)) {
    v.push_back(c.r / 255.0);
    v.push_back(c.g / 255.0);
    v.push_back(c.b / 255.0);
  }
  return v;
}

// --- transports -----------------------------------------------------------------

namespace {

class StubChatTransport final : public ChatTransport {
 public:
  StubChatTransport(std::shared_ptr<const StubScript> script, ChatFallback fallback)
      : script_(std::move(script)), fallback_(fallback) {}

  std::string complete(const BackendProfile& profile, const ChatRequest& request) override {
    if (script_)
      if (auto hit = script_->find_chat(request.match_key, request.template_name)) return *hit;
    if (fallback_ == ChatFallback::synthetic) return synthetic_chat_response(request);
    throw Error(ErrorCode::StubMiss, profile.id + ": no scripted response for " + request.match_key);
  }

 private:
  std::shared_ptr<const StubScript> script_;
  ChatFallback fallback_;
};

class StubEmbeddingTransport final : public EmbeddingTransport {
 public:
  StubEmbeddingTransport(std::shared_ptr<const StubScript> script, EmbedFallback fallback, int dimension)
      : script_(std::move(script)), fallback_(fallback), dimension_(dimension) {}

  std::vector<double> embed(const BackendProfile& profile, const UiState& image) override {
    if (script_)
      if (auto hit = script_->find_embedding(image.content_hash())) return *hit;
    switch (fallback_) {
      case EmbedFallback::seeded: return seeded_embedding(image.content_hash(), dimension_);
      case EmbedFallback::thumbnail: return thumbnail_embedding(image);
      case EmbedFallback::none: break;
    }
    throw Error(ErrorCode::StubMiss, profile.id + ": no scripted embedding for image " + image.content_hash());
  }

 private:
  std::shared_ptr<const StubScript> script_;
  EmbedFallback fallback_;
  int dimension_;
};

class RecordingChatTransport final : public ChatTransport {
 public:
  RecordingChatTransport(std::shared_ptr<ChatTransport> inner, std::shared_ptr<StubScript> sink)
      : inner_(std::move(inner)), sink_(std::move(sink)) {}

  std::string complete(const BackendProfile& profile, const ChatRequest& request) override {
    std::string response = inner_->complete(profile, request);
    sink_->put_chat(request.match_key, response);
    return response;
  }

 private:
  std::shared_ptr<ChatTransport> inner_;
  std::shared_ptr<StubScript> sink_;
};

class RecordingEmbeddingTransport final : public EmbeddingTransport {
 public:
  RecordingEmbeddingTransport(std::shared_ptr<EmbeddingTransport> inner, std::shared_ptr<StubScript> sink)
      : inner_(std::move(inner)), sink_(std::move(sink)) {}

  std::vector<double> embed(const BackendProfile& profile, const UiState& image) override {
    auto v = inner_->embed(profile, image);
    sink_->put_embedding(image.content_hash(), v);
    return v;
  }

 private:
  std::shared_ptr<EmbeddingTransport> inner_;
  std::shared_ptr<StubScript> sink_;
};

}  // namespace

std::shared_ptr<ChatTransport> make_stub_chat_transport(std::shared_ptr<const StubScript> script,
                                                        ChatFallback fallback) {
  return std::make_shared<StubChatTransport>(std::move(script), fallback);
}

std::shared_ptr<EmbeddingTransport> make_stub_embedding_transport(std::shared_ptr<const StubScript> script,
                                                                  EmbedFallback fallback, int dimension) {
  return std::make_shared<StubEmbeddingTransport>(std::move(script), fallback, dimension);
}

std::shared_ptr<ChatTransport> make_recording_chat_transport(std::shared_ptr<ChatTransport> inner,
                                                             std::shared_ptr<StubScript> sink) {
  return std::make_shared<RecordingChatTransport>(std::move(inner), std::move(sink));
}

std::shared_ptr<EmbeddingTransport> make_recording_embedding_transport(std::shared_ptr<EmbeddingTransport> inner,
                                                                       std::shared_ptr<StubScript> sink) {
  return std::make_shared<RecordingEmbeddingTransport>(std::move(inner), std::move(sink));
}

}  // namespace renderworld
