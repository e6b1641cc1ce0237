#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace teforge {

using json = nlohmann::json;

// Tolerances shared across the library. Capacity/conservation checks use an
// absolute tolerance; LP objective comparisons a relative one.
inline constexpr double kEpsCap = 1e-6;
inline constexpr double kEpsLp = 1e-6;
// Numerical floor for simplex pivots and flow bookkeeping.
inline constexpr double kEpsNum = 1e-9;
// Demand-volume grid used to deduplicate adversarial samples.
inline constexpr double kGridGranularity = 1.0;

struct InstanceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProgramError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BackendError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// FNV-1a over a string; used for config hashes embedded in artifacts.
inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t value);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
void ensure_dir(const std::string& path);
bool file_exists(const std::string& path);

// Parses with a contextual error message instead of nlohmann's raw throw.
json parse_json(const std::string& text, const std::string& what);
json load_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& value);

}  // namespace teforge
