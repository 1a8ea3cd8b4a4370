#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "renderworld/synthesis.hpp"
#include "renderworld/types.hpp"

namespace renderworld {

struct Provenance {
  std::string coder_profile;
  std::string renderer_version;
  std::string config_digest;
  double tau = 0.9;
};

/// One screen-action sample of a synthesized corpus. Paths are relative to the corpus root.
struct CorpusRecord {
  std::string id;
  std::string episode_id;
  int step_index = 0;
  std::string goal;
  GuiAction action;
  std::string semantic_description;
  std::string before_image;
  std::string before_annotated;
  std::string after_image;
  std::string html;
  double gate_score = 0.0;
  int revision_count = 0;
  SynthesisStatus status = SynthesisStatus::discarded;
  Provenance provenance;

  nlohmann::json to_json() const;
  static CorpusRecord from_json(const nlohmann::json& j, const Viewport& viewport);
};

/// Stable id: SHA-256 of (episode, step, before-image hash), first 16 hex digits.
std::string record_id(const std::string& episode_id, int step_index, const std::string& before_hash);

struct ScanResult {
  std::vector<CorpusRecord> records;
  std::size_t corrupt_lines = 0;
  std::vector<std::string> warnings;
};

/// Directory-backed corpus: corpus.jsonl plus images/ and html/.
/// One writer, many readers; each record line is written with a single append.
class CorpusStore {
 public:
  explicit CorpusStore(std::filesystem::path root, Viewport viewport = {});

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path jsonl_path() const { return root_ / "corpus.jsonl"; }

  /// Writes an asset via temp file + rename; returns the relative path.
  std::string write_asset(const std::string& relative, std::span<const std::uint8_t> bytes) const;
  std::string write_asset(const std::string& relative, std::string_view text) const;

  void append(const CorpusRecord& record);

  /// Reads every line; corrupt lines and broken invariants are skipped with a
  /// warning, or raise CorpusCorrupt in strict mode.
  ScanResult scan(bool strict = false) const;

  std::vector<CorpusRecord> filter(SynthesisStatus status, bool strict = false) const;

  UiState load_image(const std::string& relative, ImageOrigin origin) const;
  std::string load_text(const std::string& relative) const;

 private:
  std::filesystem::path root_;
  Viewport viewport_;
  std::mutex mutex_;
};

/// A step as stored in an input steps.jsonl file.
struct StepInput {
  std::string episode_id;
  int step_index = 0;
  InteractionStep step;
};

/// Each line: {"episode_id","step_index","goal","action",{...},
/// "semantic_description","before":"x.png","after":"y.png","history":[...]}.
/// Image paths are relative to the file's directory.
std::vector<StepInput> load_steps(const std::filesystem::path& path, const Viewport& viewport);
StepInput parse_step(const nlohmann::json& j, const std::filesystem::path& base_dir, const Viewport& viewport);

/// Rebuilds the interaction step of a corpus record.
InteractionStep record_step(const CorpusStore& store, const CorpusRecord& record);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace renderworld
