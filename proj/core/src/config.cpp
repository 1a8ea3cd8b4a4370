#include "renderworld/config.hpp"

#include <charconv>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "renderworld/corpus.hpp"
#include "renderworld/digest.hpp"
#include "renderworld/error.hpp"

namespace renderworld {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;
using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ConfigInvalid, where + ": " + what);
}

int to_int(const std::string& where, const std::string& v) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) invalid(where, "expected an integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& where, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) invalid(where, "expected a number, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& where, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  invalid(where, "expected a boolean, got '" + v + "'");
}

Viewport to_size(const std::string& where, const std::string& v) {
  const auto x = v.find('x');
  if (x == std::string::npos) invalid(where, "expected WIDTHxHEIGHT, got '" + v + "'");
  Viewport size{to_int(where, v.substr(0, x)), to_int(where, v.substr(x + 1))};
  if (size.width <= 0 || size.height <= 0) invalid(where, "sizes must be positive");
  return size;
}

std::vector<int> to_int_list(const std::string& where, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    if (!item.empty()) out.push_back(to_int(where, item));
  }
  return out;
}

void apply_backend(BackendProfile& b, const std::string& key, const std::string& value, const std::string& where) {
  if (key == "kind") {
    if (value == "chat") b.kind = BackendKind::chat;
    else if (value == "embedding") b.kind = BackendKind::embedding;
    else invalid(where, "kind must be chat or embedding");
  } else if (key == "transport") {
    if (value != "stub" && value != "http") invalid(where, "transport must be stub or http");
    b.transport = value;
  } else if (key == "endpoint") {
    b.endpoint = value;
  } else if (key == "model") {
    b.model_name = value;
  } else if (key == "decode_class") {
    if (value == "judge") b.decode_class = DecodeClass::judge;
    else if (value == "generator") b.decode_class = DecodeClass::generator;
    else invalid(where, "decode_class must be judge or generator");
  } else if (key == "temperature") {
    auto d = b.decode_override.value_or(decode_profile(b.decode_class));
    d.temperature = to_double(where, value);
    b.decode_override = d;
  } else if (key == "max_tokens") {
    auto d = b.decode_override.value_or(decode_profile(b.decode_class));
    d.max_tokens = to_int(where, value);
    b.decode_override = d;
  } else if (key == "auth_env") {
    b.auth_env = value;
  } else if (key == "timeout_ms") {
    b.timeout_ms = to_int(where, value);
  } else if (key == "retries") {
    b.retries = to_int(where, value);
  } else if (key == "backoff_ms") {
    b.backoff_ms = to_int_list(where, value);
  } else if (key == "concurrency") {
    b.concurrency = to_int(where, value);
  } else if (key == "cache") {
    b.cache = to_bool(where, value);
  } else if (key == "dimension") {
    b.dimension = to_int(where, value);
  } else if (key == "signed_output") {
    b.signed_output = to_bool(where, value);
  } else if (key == "input_size") {
    b.input_size = to_size(where, value);
  } else if (key == "script") {
    b.script = value;
  } else if (key == "fallback") {
    b.fallback = value;
  } else if (key == "api_key" || key == "key" || key == "token" || key == "secret" || key == "password") {
    invalid(where, "credentials may not appear in config files; name an environment variable with auth_env");
  } else {
    invalid(where, "unknown key");
  }
}

void check_backend(const BackendProfile& b) {
  const std::string where = "backends." + b.id;
  if (b.retries < 0) invalid(where, "retries must be non-negative");
  if (b.concurrency < 1) invalid(where, "concurrency must be at least 1");
  if (b.timeout_ms <= 0) invalid(where, "timeout_ms must be positive");
  if (b.transport == "http" && b.endpoint.empty()) invalid(where, "http transport needs an endpoint");
  if (b.kind == BackendKind::chat && b.fallback != "none" && b.fallback != "synthetic")
    invalid(where, "chat fallback must be none or synthetic");
  if (b.kind == BackendKind::embedding && b.fallback != "none" && b.fallback != "seeded" && b.fallback != "thumbnail")
    invalid(where, "embedding fallback must be none, seeded or thumbnail");
  if (b.kind == BackendKind::embedding && b.fallback == "seeded" && b.dimension <= 0)
    invalid(where, "seeded embeddings need a dimension");
}

BackendProfile stub_chat(const std::string& id, DecodeClass cls) {
  BackendProfile b;
  b.id = id;
  b.kind = BackendKind::chat;
  b.model_name = "stub-" + id;
  b.decode_class = cls;
  b.fallback = "synthetic";
  return b;
}

BackendProfile stub_embedding(const std::string& id, const std::string& fallback, int dimension, bool signed_output) {
  BackendProfile b;
  b.id = id;
  b.kind = BackendKind::embedding;
  b.model_name = "stub-" + id;
  b.fallback = fallback;
  b.dimension = dimension;
  b.signed_output = signed_output;
  return b;
}

}  // namespace

json profile_json(const BackendProfile& b) {
  const auto d = b.decode_defaults();
  json j = {{"id", b.id},
            {"kind", to_string(b.kind)},
            {"transport", b.transport},
            {"endpoint", b.endpoint},
            {"model", b.model_name},
            {"decode_class", b.decode_class == DecodeClass::judge ? "judge" : "generator"},
            {"temperature", d.temperature},
            {"max_tokens", d.max_tokens},
            {"auth_env", b.auth_env},
            {"timeout_ms", b.timeout_ms},
            {"retries", b.retries},
            {"backoff_ms", b.backoff_ms},
            {"concurrency", b.concurrency},
            {"cache", b.cache},
            {"script", b.script},
            {"fallback", b.fallback}};
  if (b.kind == BackendKind::embedding) {
    j["dimension"] = b.dimension;
    j["signed_output"] = b.signed_output;
    j["input_size"] = b.input_size ? json::array({b.input_size->width, b.input_size->height}) : json();
  }
  return j;
}

Config Config::defaults() {
  Config c;
  c.backends["coder"] = stub_chat("coder", DecodeClass::generator);
  c.backends["world"] = stub_chat("world", DecodeClass::generator);
  c.backends["agent"] = stub_chat("agent", DecodeClass::generator);
  c.backends["judge"] = stub_chat("judge", DecodeClass::judge);
  c.backends["siglip"] = stub_embedding("siglip", "thumbnail", 384, false);
  c.backends["dino"] = stub_embedding("dino", "seeded", 64, true);
  return c;
}

Config Config::load(const fs::path& path) {
  std::string text;
  try {
    text = read_file_text(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigInvalid, "cannot read config " + path.string() + ": " + e.what());
  }
  return parse(text, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

Config Config::parse(const std::string& text, const fs::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("config syntax: ") + e.what());
  }
  Config c = defaults();
  c.base_dir = base_dir;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) invalid(section, "keys must appear inside a section");
    for (const auto& [key, node] : body) {
      const std::string value = node.get_value<std::string>();
      const std::string where = section + "." + key;
      if (section == "pipeline") {
        if (key == "max_concurrency") c.pipeline.max_concurrency = to_int(where, value);
        else if (key == "cache_dir") c.pipeline.cache_dir = value;
        else if (key == "viewport") c.pipeline.viewport = to_size(where, value);
        else if (key == "strict") c.pipeline.strict = to_bool(where, value);
        else invalid(where, "unknown key");
      } else if (section == "renderer") {
        if (key == "backend") c.renderer.backend = value;
        else if (key == "url") c.renderer.url = value;
        else if (key == "version") c.renderer.version = value;
        else if (key == "timeout_ms") c.renderer.timeout_ms = to_int(where, value);
        else if (key == "settle_ms") c.renderer.settle_ms = to_int(where, value);
        else invalid(where, "unknown key");
      } else if (section == "synthesis") {
        if (key == "tau") c.synthesis.tau = to_double(where, value);
        else if (key == "n_max") c.synthesis.n_max = to_int(where, value);
        else if (key == "coder") c.synthesis.coder = value;
        else if (key == "gate") c.synthesis.gate = value;
        else invalid(where, "unknown key");
      } else if (section == "reward") {
        if (key == "lambda_sem") c.reward.lambda_sem = to_double(where, value);
        else if (key == "lambda_act") c.reward.lambda_act = to_double(where, value);
        else if (key == "eps_std") c.reward.eps_std = to_double(where, value);
        else if (key == "clip_eps") c.reward.clip_eps = to_double(where, value);
        else if (key == "kl_beta") c.reward.kl_beta = to_double(where, value);
        else if (key == "group_size") c.reward.group_size = to_int(where, value);
        else if (key == "judge") c.reward.judge = value;
        else invalid(where, "unknown key");
      } else if (section == "eval") {
        if (key == "judge") c.eval.judge = value;
        else if (key == "sim_a") c.eval.sim_a = value;
        else if (key == "sim_b") c.eval.sim_b = value;
        else invalid(where, "unknown key");
      } else if (section == "select") {
        if (key == "k") c.select.k = to_int(where, value);
        else if (key == "include_history") c.select.include_history = to_bool(where, value);
        else if (key == "agent") c.select.agent = value;
        else if (key == "world") c.select.world = value;
        else if (key == "verifier") c.select.verifier = value;
        else invalid(where, "unknown key");
      } else if (section.rfind("backends.", 0) == 0) {
        const std::string id = section.substr(9);
        if (id.empty()) invalid(section, "backend id missing");
        auto [it, inserted] = c.backends.try_emplace(id);
        if (inserted) it->second.id = id;
        apply_backend(it->second, key, value, where);
      } else {
        invalid(section, "unknown section");
      }
    }
  }

  if (c.pipeline.max_concurrency < 1) invalid("pipeline.max_concurrency", "must be at least 1");
  if (c.pipeline.viewport.width <= 0 || c.pipeline.viewport.height <= 0) invalid("pipeline.viewport", "must be positive");
  if (c.renderer.backend != "stub" && c.renderer.backend != "http") invalid("renderer.backend", "must be stub or http");
  if (c.renderer.backend == "http" && c.renderer.url.empty()) invalid("renderer.url", "required for the http renderer");
  if (c.synthesis.tau < 0.0 || c.synthesis.tau > 1.0) invalid("synthesis.tau", "must lie in [0,1]");
  if (c.synthesis.n_max < 0) invalid("synthesis.n_max", "must be non-negative");
  if (c.reward.lambda_sem < 0.0 || c.reward.lambda_act < 0.0) invalid("reward", "weights must be non-negative");
  if (c.reward.group_size < 2) invalid("reward.group_size", "must be at least 2");
  if (c.select.k < 1) invalid("select.k", "must be at least 1");
  for (const auto& [id, b] : c.backends) check_backend(b);
  return c;
}

const BackendProfile& Config::backend(const std::string& id, BackendKind kind) const {
  const auto it = backends.find(id);
  if (it == backends.end()) throw Error(ErrorCode::MissingBackend, "no backend profile named '" + id + "'");
  if (it->second.kind != kind)
    throw Error(ErrorCode::MissingBackend, "backend '" + id + "' is " + std::string(to_string(it->second.kind)) +
                                               ", expected " + std::string(to_string(kind)));
  return it->second;
}

json Config::to_json() const {
  json backs = json::object();
  for (const auto& [id, b] : backends) backs[id] = profile_json(b);
  return {{"pipeline",
           {{"max_concurrency", pipeline.max_concurrency},
            {"cache_dir", pipeline.cache_dir.generic_string()},
            {"viewport", json::array({pipeline.viewport.width, pipeline.viewport.height})},
            {"strict", pipeline.strict}}},
          {"renderer",
           {{"backend", renderer.backend},
            {"url", renderer.url},
            {"version", renderer.version},
            {"timeout_ms", renderer.timeout_ms},
            {"settle_ms", renderer.settle_ms}}},
          {"synthesis", {{"tau", synthesis.tau}, {"n_max", synthesis.n_max}, {"coder", synthesis.coder}, {"gate", synthesis.gate}}},
          {"reward",
           {{"lambda_sem", reward.lambda_sem},
            {"lambda_act", reward.lambda_act},
            {"eps_std", reward.eps_std},
            {"clip_eps", reward.clip_eps},
            {"kl_beta", reward.kl_beta},
            {"group_size", reward.group_size},
            {"judge", reward.judge}}},
          {"eval", {{"judge", eval.judge}, {"sim_a", eval.sim_a}, {"sim_b", eval.sim_b}}},
          {"select",
           {{"k", select.k},
            {"include_history", select.include_history},
            {"agent", select.agent},
            {"world", select.world},
            {"verifier", select.verifier}}},
          {"backends", backs}};
}

std::string Config::digest() const {
  json j = to_json();
  j["pipeline"].erase("max_concurrency");
  j["pipeline"].erase("strict");
  for (auto& [id, b] : j["backends"].items()) b.erase("concurrency");
  return sha256_hex(j.dump());
}

fs::path Config::resolve(const fs::path& p) const { return p.is_absolute() ? p : base_dir / p; }

}  // namespace renderworld
