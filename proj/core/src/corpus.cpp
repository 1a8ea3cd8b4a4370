#include "renderworld/corpus.hpp"

#include <atomic>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fcntl.h>
#include <unistd.h>

#include <spdlog/spdlog.h>

#include "renderworld/digest.hpp"
#include "renderworld/error.hpp"

namespace renderworld {

namespace fs = std::filesystem;
using nlohmann::json;

// --- files --------------------------------------------------------------------

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_file_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
  static std::atomic<unsigned> counter{0};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::IoError, "cannot move " + tmp.string() + " into place");
  }
}

void write_file_atomic(const fs::path& path, std::string_view text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// --- records ------------------------------------------------------------------

std::string record_id(const std::string& episode_id, int step_index, const std::string& before_hash) {
  return sha256_hex(episode_id + "\n" + std::to_string(step_index) + "\n" + before_hash).substr(0, 16);
}

json CorpusRecord::to_json() const {
  return {{"id", id},
          {"episode_id", episode_id},
          {"step_index", step_index},
          {"goal", goal},
          {"action", action_to_json(action)},
          {"semantic_description", semantic_description},
          {"before_image", before_image},
          {"before_annotated", before_annotated},
          {"after_image", after_image},
          {"html", html},
          {"gate_score", gate_score},
          {"revision_count", revision_count},
          {"status", to_string(status)},
          {"provenance",
           {{"coder_profile", provenance.coder_profile},
            {"renderer_version", provenance.renderer_version},
            {"config_digest", provenance.config_digest},
            {"tau", provenance.tau}}}};
}

CorpusRecord CorpusRecord::from_json(const json& j, const Viewport& viewport) {
  CorpusRecord r;
  r.id = j.at("id").get<std::string>();
  r.episode_id = j.at("episode_id").get<std::string>();
  r.step_index = j.at("step_index").get<int>();
  r.goal = j.at("goal").get<std::string>();
  r.action = canonicalize_action(j.at("action"), viewport);
  r.semantic_description = j.value("semantic_description", "");
  r.before_image = j.at("before_image").get<std::string>();
  r.before_annotated = j.value("before_annotated", "");
  r.after_image = j.value("after_image", "");
  r.html = j.value("html", "");
  r.gate_score = j.at("gate_score").get<double>();
  r.revision_count = j.value("revision_count", 0);
  const std::string status = j.at("status").get<std::string>();
  if (status == "retained") r.status = SynthesisStatus::retained;
  else if (status == "discarded") r.status = SynthesisStatus::discarded;
  else throw Error(ErrorCode::CorpusCorrupt, "unknown status '" + status + "'");
  const json& p = j.at("provenance");
  r.provenance.coder_profile = p.value("coder_profile", "");
  r.provenance.renderer_version = p.value("renderer_version", "");
  r.provenance.config_digest = p.value("config_digest", "");
  r.provenance.tau = p.value("tau", 0.9);
  return r;
}

// --- store --------------------------------------------------------------------

CorpusStore::CorpusStore(fs::path root, Viewport viewport) : root_(std::move(root)), viewport_(viewport) {}

std::string CorpusStore::write_asset(const std::string& relative, std::span<const std::uint8_t> bytes) const {
  write_file_atomic(root_ / relative, bytes);
  return relative;
}

std::string CorpusStore::write_asset(const std::string& relative, std::string_view text) const {
  write_file_atomic(root_ / relative, text);
  return relative;
}

void CorpusStore::append(const CorpusRecord& record) {
  const std::string line = record.to_json().dump() + "\n";
  std::lock_guard lock(mutex_);
  fs::create_directories(root_);
  const int fd = ::open(jsonl_path().c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorCode::IoError, "cannot open " + jsonl_path().string() + ": " + std::strerror(errno));
  const ssize_t written = ::write(fd, line.data(), line.size());
  const int err = errno;
  ::close(fd);
  if (written != static_cast<ssize_t>(line.size()))
    throw Error(ErrorCode::IoError, "short append to " + jsonl_path().string() + ": " + std::strerror(err));
}

ScanResult CorpusStore::scan(bool strict) const {
  ScanResult result;
  std::error_code ec;
  if (!fs::exists(jsonl_path(), ec)) return result;
  std::ifstream in(jsonl_path(), std::ios::binary);
  std::string line;
  std::size_t lineno = 0;
  auto reject = [&](const std::string& why) {
    const std::string msg = "corpus line " + std::to_string(lineno) + ": " + why;
    if (strict) throw Error(ErrorCode::CorpusCorrupt, msg);
    spdlog::warn("{}", msg);
    result.warnings.push_back(msg);
    ++result.corrupt_lines;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    CorpusRecord record;
    try {
      record = CorpusRecord::from_json(json::parse(line), viewport_);
    } catch (const std::exception& e) {
      reject(std::string("unreadable record (") + e.what() + ")");
      continue;
    }
    if (record.status == SynthesisStatus::retained && record.gate_score < record.provenance.tau) {
      reject("retained record " + record.id + " scores below its threshold");
      continue;
    }
    bool missing = false;
    for (const std::string* rel : {&record.before_image, &record.before_annotated, &record.after_image, &record.html})
      if (!rel->empty() && !fs::exists(root_ / *rel, ec)) {
        reject("record " + record.id + " references missing file " + *rel);
        missing = true;
        break;
      }
    if (missing) continue;
    if (record.status == SynthesisStatus::retained && record.html.empty()) {
      reject("retained record " + record.id + " has no html");
      continue;
    }
    try {
      const std::string before_hash = sha256_hex(read_file_bytes(root_ / record.before_image));
      if (record_id(record.episode_id, record.step_index, before_hash) != record.id) {
        reject("record id " + record.id + " does not match its content");
        continue;
      }
    } catch (const Error& e) {
      reject(e.what());
      continue;
    }
    result.records.push_back(std::move(record));
  }
  return result;
}

std::vector<CorpusRecord> CorpusStore::filter(SynthesisStatus status, bool strict) const {
  std::vector<CorpusRecord> out;
  for (auto& r : scan(strict).records)
    if (r.status == status) out.push_back(std::move(r));
  return out;
}

UiState CorpusStore::load_image(const std::string& relative, ImageOrigin origin) const {
  return UiState::from_png(read_file_bytes(root_ / relative), origin);
}

std::string CorpusStore::load_text(const std::string& relative) const { return read_file_text(root_ / relative); }

// --- steps --------------------------------------------------------------------

StepInput parse_step(const json& j, const fs::path& base_dir, const Viewport& viewport) {
  auto image = [&](const std::string& rel) {
    auto state = UiState::from_png(read_file_bytes(base_dir / rel), ImageOrigin::ground_truth);
    if (state.viewport() != viewport)
      throw Error(ErrorCode::DimensionMismatch, rel + " is " + std::to_string(state.width()) + "x" +
                                                    std::to_string(state.height()) + ", viewport is " +
                                                    std::to_string(viewport.width) + "x" +
                                                    std::to_string(viewport.height));
    return state;
  };
  std::vector<HistoryEntry> history;
  if (auto h = j.find("history"); h != j.end())
    for (const auto& entry : *h)
      history.push_back({canonicalize_action(entry.at("action"), viewport), entry.value("description", "")});
  std::optional<UiState> after;
  if (j.contains("after") && !j.at("after").is_null()) after = image(j.at("after").get<std::string>());
  return StepInput{j.value("episode_id", "episode"), j.value("step_index", 0),
                   InteractionStep{TaskGoal(j.at("goal").get<std::string>()),
                                   image(j.at("before").get<std::string>()),
                                   canonicalize_action(j.at("action"), viewport),
                                   j.value("semantic_description", ""), std::move(after), std::move(history)}};
}

std::vector<StepInput> load_steps(const fs::path& path, const Viewport& viewport) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::vector<StepInput> steps;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      steps.push_back(parse_step(json::parse(line), base, viewport));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::CorpusCorrupt, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return steps;
}

InteractionStep record_step(const CorpusStore& store, const CorpusRecord& record) {
  std::optional<UiState> after;
  if (!record.after_image.empty()) after = store.load_image(record.after_image, ImageOrigin::ground_truth);
  return InteractionStep{TaskGoal(record.goal), store.load_image(record.before_image, ImageOrigin::ground_truth),
                         record.action, record.semantic_description, std::move(after), {}};
}

}  // namespace renderworld
