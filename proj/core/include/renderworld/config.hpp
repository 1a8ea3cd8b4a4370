#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "renderworld/backends.hpp"
#include "renderworld/types.hpp"

namespace renderworld {

struct PipelineSection {
  int max_concurrency = 4;
  std::filesystem::path cache_dir = "cache";
  Viewport viewport;
  bool strict = false;
};

struct RendererSection {
  std::string backend = "stub";  // "stub" | "http"
  std::string url;
  std::string version;  // defaults to the endpoint's own version string
  int timeout_ms = 15000;
  int settle_ms = 200;
};

struct SynthesisSection {
  double tau = 0.9;
  int n_max = 1;
  std::string coder = "coder";
  std::string gate = "siglip";
};

struct RewardSection {
  double lambda_sem = 0.5;
  double lambda_act = 0.5;
  double eps_std = 1e-6;
  double clip_eps = 0.2;
  double kl_beta = 0.01;
  int group_size = 4;
  std::string judge = "judge";
};

struct EvalSection {
  std::string judge = "judge";
  std::string sim_a = "siglip";  // empty disables the column
  std::string sim_b = "dino";
};

struct SelectSection {
  int k = 3;
  bool include_history = false;
  std::string agent = "agent";
  std::string world = "world";
  std::string verifier = "judge";
};

/// Run configuration loaded from an INI-style file with sections
/// [pipeline] [renderer] [synthesis] [reward] [eval] [select] [backends.<id>].
/// Credentials never live here; profiles name an environment variable.
struct Config {
  PipelineSection pipeline;
  RendererSection renderer;
  SynthesisSection synthesis;
  RewardSection reward;
  EvalSection eval;
  SelectSection select;
  std::map<std::string, BackendProfile> backends;
  std::filesystem::path base_dir = ".";

  /// Built-in stub profiles for coder, world, agent, judge, siglip, dino.
  static Config defaults();
  /// Defaults overlaid with the file's values. Throws ConfigInvalid.
  static Config load(const std::filesystem::path& path);
  static Config parse(const std::string& text, const std::filesystem::path& base_dir);

  /// Throws MissingBackend when the id is unknown or of the wrong kind.
  const BackendProfile& backend(const std::string& id, BackendKind kind) const;

  nlohmann::json to_json() const;
  /// SHA-256 over the configuration, leaving out execution knobs
  /// (concurrency limits, strict mode) that cannot change any output.
  std::string digest() const;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

/// JSON view of a backend profile as recorded in run manifests.
nlohmann::json profile_json(const BackendProfile& profile);

}  // namespace renderworld
