#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace renderworld {

/// Attribution record written once per output directory.
struct RunManifest {
  std::string command;
  std::vector<std::string> args;  // argv after the subcommand, minus --out/--record/--replay
  std::string config_digest;
  std::map<std::string, std::string> template_checksums;
  nlohmann::json backend_profiles = nlohmann::json::object();
  std::string renderer_version;
  std::string started_at;
  std::string finished_at;
  nlohmann::json counts = nlohmann::json::object();

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);

  void write(const std::filesystem::path& dir) const;
  static RunManifest load(const std::filesystem::path& path);
};

std::string utc_timestamp();
std::map<std::string, std::string> template_checksums();

}  // namespace renderworld
