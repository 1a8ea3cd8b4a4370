#include "renderworld/manifest.hpp"

#include <chrono>
#include <ctime>

#include "renderworld/corpus.hpp"
#include "renderworld/error.hpp"
#include "renderworld/prompting.hpp"

namespace renderworld {

using nlohmann::json;

json RunManifest::to_json() const {
  return {{"command", command},
          {"args", args},
          {"config_digest", config_digest},
          {"template_checksums", template_checksums},
          {"backend_profiles", backend_profiles},
          {"renderer_version", renderer_version},
          {"started_at", started_at},
          {"finished_at", finished_at},
          {"counts", counts}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.args = j.value("args", std::vector<std::string>{});
  m.config_digest = j.value("config_digest", "");
  m.template_checksums = j.value("template_checksums", std::map<std::string, std::string>{});
  m.backend_profiles = j.value("backend_profiles", json::object());
  m.renderer_version = j.value("renderer_version", "");
  m.started_at = j.value("started_at", "");
  m.finished_at = j.value("finished_at", "");
  m.counts = j.value("counts", json::object());
  return m;
}

void RunManifest::write(const std::filesystem::path& dir) const {
  write_file_atomic(dir / "manifest.json", to_json().dump(2) + "\n");
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(read_file_text(path)));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorpusCorrupt, "unreadable manifest " + path.string() + ": " + e.what());
  }
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::map<std::string, std::string> template_checksums() {
  std::map<std::string, std::string> out;
  for (TemplateId id : kAllTemplateIds) out[std::string(to_string(id))] = prompt_template(id).checksum;
  return out;
}

}  // namespace renderworld
