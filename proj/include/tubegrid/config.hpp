#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "tubegrid/control.hpp"
#include "tubegrid/gains.hpp"
#include "tubegrid/network.hpp"
#include "tubegrid/sim.hpp"

namespace tubegrid {

/// Raised on malformed input; the message carries a JSON-pointer style
/// path to the offending key.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kSchemaVersion = 1;

enum class GainMode { automatic, explicit_values };

struct RunConfig {
  NetworkModel network;
  GainMode gain_mode = GainMode::automatic;
  AutoDesignSpec auto_spec;   // meaningful in automatic mode
  GainSet gains;              // meaningful in explicit mode
  ReferenceSchedule references;
  DisturbanceProfile disturbance;
  SimOptions sim;
  std::string out_dir = "out";
};

/// Strict parse: unknown keys anywhere are an error, as are missing
/// required keys, wrong types, or a schema_version mismatch.  Scalar
/// entries for per-node / per-edge fields broadcast.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

/// Explicit mode returns the configured gains; automatic mode runs the
/// designer.  An infeasible design comes back with no gains and the
/// failing design certificates, so callers can report margins.
struct ResolvedGains {
  std::optional<GainSet> gains;
  std::vector<Certificate> design_certificates;
};
ResolvedGains resolve_gains(const Network& net, const RunConfig& cfg);

}  // namespace tubegrid
