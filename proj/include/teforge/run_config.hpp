#pragma once

#include "teforge/analyzer.hpp"
#include "teforge/backend.hpp"
#include "teforge/writer.hpp"

namespace teforge {

struct BackendConfig {
  std::string type = "mock";  // mock | remote
  std::string script;         // mock: path to a script fixture
  RemoteConfig remote;

  json to_json() const;
  static BackendConfig from_json(const json& j);
};

/// One file drives the whole pipeline; the effective config (after CLI
/// overrides) is hashed into every artifact.
struct RunConfig {
  std::string topology_path;
  DemandSpace space;
  double base_threshold = 60.0;
  int path_k = 8;

  struct Analyzer {
    int budget = 2000;
    std::uint64_t seed = 1;
    int max_regions = 5;
    int normal_samples = 50;
  } analyzer;

  BackendConfig backend;

  struct Suggester {
    int n_suggestions = 3;
    int batch_per_class = 5;
  } suggester;

  WriterConfig writer;

  struct Heldout {
    int size = 100;
    std::uint64_t seed = 4242;
    int adversarial_budget = 500;
  } heldout;

  std::string out_dir = "out";

  void validate() const;
  json to_json() const;
  static RunConfig from_json(const json& j);
  static RunConfig load(const std::string& path);

  /// FNV-1a over the canonical dump; stamped into every artifact.
  std::string config_hash() const;
};

std::unique_ptr<LlmBackend> make_backend(const BackendConfig& config);

}  // namespace teforge
