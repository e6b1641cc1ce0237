#include "teforge/run_config.hpp"

namespace teforge {

json BackendConfig::to_json() const {
  return {{"type", type},
          {"script", script},
          {"endpoint", remote.endpoint},
          {"path", remote.path},
          {"model", remote.model},
          {"api_key_env", remote.api_key_env},
          {"temperature", remote.temperature},
          {"max_tokens", remote.max_tokens},
          {"timeout_s", remote.timeout_s}};
}

BackendConfig BackendConfig::from_json(const json& j) {
  BackendConfig c;
  c.type = j.value("type", c.type);
  c.script = j.value("script", c.script);
  c.remote.endpoint = j.value("endpoint", c.remote.endpoint);
  c.remote.path = j.value("path", c.remote.path);
  c.remote.model = j.value("model", c.remote.model);
  c.remote.api_key_env = j.value("api_key_env", c.remote.api_key_env);
  c.remote.temperature = j.value("temperature", c.remote.temperature);
  c.remote.max_tokens = j.value("max_tokens", c.remote.max_tokens);
  c.remote.timeout_s = j.value("timeout_s", c.remote.timeout_s);
  return c;
}

void RunConfig::validate() const {
  if (topology_path.empty()) throw ConfigError("config: topology path is required");
  if (!file_exists(topology_path))
    throw ConfigError("config: topology file does not exist: " + topology_path);
  if (space.pairs.empty()) throw ConfigError("config: demand_space.pairs is empty");
  space.validate();
  if (base_threshold < 0.0) throw ConfigError("config: base_threshold must be >= 0");
  if (path_k < 1) throw ConfigError("config: path_k must be >= 1");
  if (analyzer.budget < 1) throw ConfigError("config: analyzer.budget must be >= 1");
  if (analyzer.max_regions < 1) throw ConfigError("config: analyzer.max_regions must be >= 1");
  if (analyzer.normal_samples < 1)
    throw ConfigError("config: analyzer.normal_samples must be >= 1");
  if (backend.type != "mock" && backend.type != "remote")
    throw ConfigError("config: backend.type must be mock or remote");
  if (backend.type == "mock") {
    if (backend.script.empty()) throw ConfigError("config: mock backend needs a script path");
    if (!file_exists(backend.script))
      throw ConfigError("config: backend script does not exist: " + backend.script);
  }
  if (backend.type == "remote" && backend.remote.endpoint.empty())
    throw ConfigError("config: remote backend needs an endpoint");
  if (suggester.n_suggestions < 1)
    throw ConfigError("config: suggester.n_suggestions must be >= 1");
  if (suggester.batch_per_class < 1)
    throw ConfigError("config: suggester.batch_per_class must be >= 1");
  writer.validate();
  if (heldout.size < 1) throw ConfigError("config: heldout.size must be >= 1");
  if (heldout.adversarial_budget < 1)
    throw ConfigError("config: heldout.adversarial_budget must be >= 1");
  if (out_dir.empty()) throw ConfigError("config: out_dir is required");
}

json RunConfig::to_json() const {
  return {{"topology", topology_path},
          {"demand_space", space.to_json()},
          {"base_threshold", base_threshold},
          {"path_k", path_k},
          {"analyzer",
           {{"budget", analyzer.budget},
            {"seed", analyzer.seed},
            {"max_regions", analyzer.max_regions},
            {"normal_samples", analyzer.normal_samples}}},
          {"backend", backend.to_json()},
          {"suggester",
           {{"n_suggestions", suggester.n_suggestions},
            {"batch_per_class", suggester.batch_per_class}}},
          {"writer", writer.to_json()},
          {"heldout",
           {{"size", heldout.size},
            {"seed", heldout.seed},
            {"adversarial_budget", heldout.adversarial_budget}}},
          {"out_dir", out_dir}};
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  c.topology_path = j.value("topology", std::string{});
  if (j.contains("demand_space")) c.space = DemandSpace::from_json(j.at("demand_space"));
  c.base_threshold = j.value("base_threshold", c.base_threshold);
  c.path_k = j.value("path_k", c.path_k);
  if (j.contains("analyzer")) {
    const json& a = j.at("analyzer");
    c.analyzer.budget = a.value("budget", c.analyzer.budget);
    c.analyzer.seed = a.value("seed", c.analyzer.seed);
    c.analyzer.max_regions = a.value("max_regions", c.analyzer.max_regions);
    c.analyzer.normal_samples = a.value("normal_samples", c.analyzer.normal_samples);
  }
  if (j.contains("backend")) c.backend = BackendConfig::from_json(j.at("backend"));
  if (j.contains("suggester")) {
    const json& s = j.at("suggester");
    c.suggester.n_suggestions = s.value("n_suggestions", c.suggester.n_suggestions);
    c.suggester.batch_per_class = s.value("batch_per_class", c.suggester.batch_per_class);
  }
  if (j.contains("writer")) c.writer = WriterConfig::from_json(j.at("writer"));
  if (j.contains("heldout")) {
    const json& h = j.at("heldout");
    c.heldout.size = h.value("size", c.heldout.size);
    c.heldout.seed = h.value("seed", c.heldout.seed);
    c.heldout.adversarial_budget = h.value("adversarial_budget", c.heldout.adversarial_budget);
  }
  c.out_dir = j.value("out_dir", c.out_dir);
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  if (!file_exists(path)) throw ConfigError("config file does not exist: " + path);
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw ConfigError("config file is not valid JSON: " + path);
  return from_json(j);
}

std::string RunConfig::config_hash() const {
  // The output directory is an execution detail: identical semantic configs
  // hash identically so artifacts stay comparable across run directories.
  json j = to_json();
  j.erase("out_dir");
  return hex64(fnv1a64(j.dump()));
}

std::unique_ptr<LlmBackend> make_backend(const BackendConfig& config) {
  if (config.type == "mock")
    return std::make_unique<ScriptedBackend>(Script::from_file(config.script));
  if (config.type == "remote") return std::make_unique<RemoteBackend>(config.remote);
  throw ConfigError("unknown backend type: " + config.type);
}

}  // namespace teforge
