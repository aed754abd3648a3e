#include "tubegrid/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace tubegrid {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config error at " + (path.empty() ? "/" : path) + ": " +
                    what);
}

const json& member(const json& obj, const std::string& path,
                   const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + "/" + key, "missing required key");
  return *it;
}

void reject_unknown(const json& obj, const std::string& path,
                    const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) fail(path + "/" + key, "unknown key");
}

double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

double get_number(const json& obj, const std::string& path, const char* key) {
  return number_at(member(obj, path, key), path + "/" + key);
}

double opt_number(const json& obj, const std::string& path, const char* key,
                  double fallback) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : number_at(*it, path + "/" + key);
}

bool opt_bool(const json& obj, const std::string& path, const char* key,
              bool fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_boolean()) fail(path + "/" + key, "expected true or false");
  return it->get<bool>();
}

// Scalar broadcasts to a constant vector; an array must match the count.
Eigen::VectorXd vector_at(const json& j, const std::string& path, int count) {
  if (j.is_number()) return Eigen::VectorXd::Constant(count, j.get<double>());
  if (!j.is_array()) fail(path, "expected a number or an array of numbers");
  if (static_cast<int>(j.size()) != count)
    fail(path, "expected " + std::to_string(count) + " entries, got " +
                   std::to_string(j.size()));
  Eigen::VectorXd out(count);
  for (int i = 0; i < count; ++i)
    out(i) = number_at(j[i], path + "/" + std::to_string(i));
  return out;
}

Eigen::VectorXd get_vector(const json& obj, const std::string& path,
                           const char* key, int count) {
  return vector_at(member(obj, path, key), path + "/" + key, count);
}

NetworkModel parse_network(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  reject_unknown(j, path,
                 {"nodes", "edges", "capacitance", "line_resistance",
                  "line_inductance", "grid_frequency", "rated_voltage",
                  "nominal_load", "disturbance_bounds", "voltage_limit"});
  NetworkModel model;
  const json& nodes = member(j, path, "nodes");
  if (!nodes.is_number_integer() || nodes.get<int>() <= 0)
    fail(path + "/nodes", "expected a positive integer");
  model.nodes = nodes.get<int>();

  const json& edges = member(j, path, "edges");
  if (!edges.is_array()) fail(path + "/edges", "expected an array of pairs");
  for (size_t e = 0; e < edges.size(); ++e) {
    const std::string epath = path + "/edges/" + std::to_string(e);
    const json& pair = edges[e];
    if (!pair.is_array() || pair.size() != 2 ||
        !pair[0].is_number_integer() || !pair[1].is_number_integer())
      fail(epath, "expected a pair of node ids");
    const int a = pair[0].get<int>(), b = pair[1].get<int>();
    // Node ids are 1-based in configs; 0 flags an off-by-one mistake.
    if (a < 1 || a > model.nodes || b < 1 || b > model.nodes)
      fail(epath, "node id out of range 1.." + std::to_string(model.nodes));
    model.edges.emplace_back(a - 1, b - 1);
  }
  const int m = static_cast<int>(model.edges.size());

  model.capacitance = get_vector(j, path, "capacitance", model.nodes);
  model.line_resistance = get_vector(j, path, "line_resistance", m);
  model.line_inductance = get_vector(j, path, "line_inductance", m);
  model.grid_frequency =
      opt_number(j, path, "grid_frequency", 2.0 * kPi * 50.0);
  model.rated_voltage = get_vector(j, path, "rated_voltage", model.nodes);

  const json& load = member(j, path, "nominal_load");
  reject_unknown(load, path + "/nominal_load", {"p", "q"});
  model.load_p = get_vector(load, path + "/nominal_load", "p", model.nodes);
  model.load_q = get_vector(load, path + "/nominal_load", "q", model.nodes);

  const json& bounds = member(j, path, "disturbance_bounds");
  reject_unknown(bounds, path + "/disturbance_bounds", {"dp", "dq"});
  model.dp_max =
      get_vector(bounds, path + "/disturbance_bounds", "dp", model.nodes);
  model.dq_max =
      get_vector(bounds, path + "/disturbance_bounds", "dq", model.nodes);

  const json& limit = member(j, path, "voltage_limit");
  reject_unknown(limit, path + "/voltage_limit", {"center", "radius"});
  model.v_max = get_vector(limit, path + "/voltage_limit", "radius", model.nodes);
  model.v_center = limit.contains("center")
                       ? get_vector(limit, path + "/voltage_limit", "center",
                                    model.nodes)
                       : model.rated_voltage;
  return model;
}

void parse_gains(const json& j, const std::string& path, int n,
                 RunConfig& cfg) {
  if (!j.is_object()) fail(path, "expected an object");
  const json& mode = member(j, path, "mode");
  if (!mode.is_string()) fail(path + "/mode", "expected \"auto\" or \"explicit\"");
  const std::string mode_s = mode.get<std::string>();

  if (mode_s == "auto") {
    reject_unknown(j, path,
                   {"mode", "e_bar", "z_tilde_m", "delta", "safety",
                    "grid_points", "min_gain", "K_q", "k_Id", "k_Iq"});
    cfg.gain_mode = GainMode::automatic;
    AutoDesignSpec& spec = cfg.auto_spec;
    spec.e_bar = get_vector(j, path, "e_bar", n);
    spec.z_tilde_m = get_vector(j, path, "z_tilde_m", n);
    spec.delta = get_vector(j, path, "delta", n);
    spec.safety = opt_number(j, path, "safety", 1.05);
    spec.grid_points =
        static_cast<int>(opt_number(j, path, "grid_points", 1000));
    spec.min_gain = opt_number(j, path, "min_gain", 1.0);
    if (j.contains("K_q")) spec.K_q = get_vector(j, path, "K_q", n);
    if (j.contains("k_Id")) spec.k_Id = get_vector(j, path, "k_Id", n);
    if (j.contains("k_Iq")) spec.k_Iq = get_vector(j, path, "k_Iq", n);
  } else if (mode_s == "explicit") {
    reject_unknown(j, path,
                   {"mode", "e_bar", "z_tilde_m", "delta", "K", "K_d", "K_q",
                    "M", "k_Id", "k_Iq"});
    cfg.gain_mode = GainMode::explicit_values;
    GainSet& g = cfg.gains;
    g.e_bar = get_vector(j, path, "e_bar", n);
    g.z_tilde_m = get_vector(j, path, "z_tilde_m", n);
    g.delta = get_vector(j, path, "delta", n);
    g.K = get_vector(j, path, "K", n);
    g.K_d = get_vector(j, path, "K_d", n);
    g.K_q = j.contains("K_q") ? get_vector(j, path, "K_q", n) : g.K_d;
    g.M = j.contains("M") ? get_vector(j, path, "M", n)
                          : Eigen::VectorXd(g.z_tilde_m.cwiseProduct(g.K_d));
    g.k_Id = j.contains("k_Id") ? get_vector(j, path, "k_Id", n)
                                : Eigen::VectorXd::Constant(n, 50.0);
    g.k_Iq = j.contains("k_Iq") ? get_vector(j, path, "k_Iq", n)
                                : Eigen::VectorXd::Constant(n, 50.0);
    try {
      validate_gains(g, n);
    } catch (const std::invalid_argument& ex) {
      fail(path, ex.what());
    }
  } else {
    fail(path + "/mode", "expected \"auto\" or \"explicit\"");
  }
}

ReferenceSchedule default_references(int n) {
  ReferenceSchedule refs;
  if (n == 6) {
    // Canonical three-epoch study: two interior epochs, then one with the
    // last node pushed past its excursion ceiling.
    refs.times = {0.0, 0.2, 0.4};
    refs.values = {
        (Eigen::VectorXd(6) << -3.5, -2.0, -0.5, 1.5, 3.0, 4.5).finished(),
        (Eigen::VectorXd(6) << -5.0, -3.5, -2.0, -0.5, 1.0, 2.5).finished(),
        (Eigen::VectorXd(6) << -1.0, 0.5, 2.0, 3.5, 5.0, 6.0).finished()};
  } else {
    refs.times = {0.0};
    refs.values = {Eigen::VectorXd::Zero(n)};
  }
  return refs;
}

ReferenceSchedule parse_references(const json& j, const std::string& path,
                                   const NetworkModel& model) {
  if (!j.is_object()) fail(path, "expected an object");
  reject_unknown(j, path, {"times", "values", "shifted"});
  const json& times = member(j, path, "times");
  const json& values = member(j, path, "values");
  if (!times.is_array() || times.empty())
    fail(path + "/times", "expected a non-empty array");
  if (!values.is_array() || values.size() != times.size())
    fail(path + "/values", "expected one vector per time");
  const bool shifted = opt_bool(j, path, "shifted", true);

  ReferenceSchedule refs;
  for (size_t k = 0; k < times.size(); ++k) {
    refs.times.push_back(
        number_at(times[k], path + "/times/" + std::to_string(k)));
    Eigen::VectorXd v = vector_at(
        values[k], path + "/values/" + std::to_string(k), model.nodes);
    if (!shifted) v -= model.rated_voltage;
    refs.values.push_back(std::move(v));
  }
  try {
    refs.validate(model.nodes);
  } catch (const std::invalid_argument& ex) {
    fail(path, ex.what());
  }
  return refs;
}

DisturbanceProfile parse_disturbance(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  reject_unknown(j, path, {"kind", "dwell", "amplitude_fraction", "seed"});
  DisturbanceProfile profile;
  const json& kind = member(j, path, "kind");
  if (!kind.is_string()) fail(path + "/kind", "expected a string");
  const std::string kind_s = kind.get<std::string>();
  if (kind_s == "zero") profile.kind = DisturbanceKind::zero;
  else if (kind_s == "square-wave") profile.kind = DisturbanceKind::square_wave;
  else if (kind_s == "piecewise-constant-random")
    profile.kind = DisturbanceKind::random_steps;
  else if (kind_s == "sinusoid") profile.kind = DisturbanceKind::sinusoid;
  else
    fail(path + "/kind",
         "expected one of zero, square-wave, piecewise-constant-random, "
         "sinusoid");
  profile.dwell = opt_number(j, path, "dwell", 0.05);
  if (!(profile.dwell > 0.0)) fail(path + "/dwell", "must be positive");
  profile.amplitude = opt_number(j, path, "amplitude_fraction", 1.0);
  if (profile.amplitude < 0.0 || profile.amplitude > 1.0)
    fail(path + "/amplitude_fraction", "must lie in [0, 1]");
  profile.seed = static_cast<std::uint64_t>(opt_number(j, path, "seed", 0.0));
  return profile;
}

void parse_sim(const json& j, const std::string& path, RunConfig& cfg) {
  if (!j.is_object()) fail(path, "expected an object");
  reject_unknown(j, path,
                 {"dt", "t_end", "keep_every", "allow_uncertified", "out_dir",
                  "seed"});
  cfg.sim.dt = opt_number(j, path, "dt", 1e-5);
  if (!(cfg.sim.dt > 0.0)) fail(path + "/dt", "must be positive");
  cfg.sim.t_end = opt_number(j, path, "t_end", 0.5);
  if (cfg.sim.t_end < 0.0) fail(path + "/t_end", "must be non-negative");
  cfg.sim.keep_every =
      static_cast<int>(opt_number(j, path, "keep_every", 1.0));
  if (cfg.sim.keep_every < 1) fail(path + "/keep_every", "must be >= 1");
  cfg.sim.allow_uncertified =
      opt_bool(j, path, "allow_uncertified", false);
  if (j.contains("out_dir")) {
    if (!j["out_dir"].is_string()) fail(path + "/out_dir", "expected a string");
    cfg.out_dir = j["out_dir"].get<std::string>();
  }
  if (j.contains("seed") && !cfg.disturbance.seed)
    cfg.disturbance.seed =
        static_cast<std::uint64_t>(get_number(j, path, "seed"));
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& ex) {
    throw ConfigError(std::string("config is not valid JSON: ") + ex.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be an object");

  std::string missing;
  for (const char* key : {"schema_version", "network", "gains"})
    if (!doc.contains(key)) missing += missing.empty() ? key : std::string(", ") + key;
  if (!missing.empty())
    throw ConfigError("config error at /: missing required keys: " + missing);

  reject_unknown(doc, "",
                 {"schema_version", "network", "gains", "references",
                  "disturbance", "sim"});
  if (!doc["schema_version"].is_number_integer() ||
      doc["schema_version"].get<int>() != kSchemaVersion)
    fail("/schema_version",
         "expected " + std::to_string(kSchemaVersion));

  RunConfig cfg;
  cfg.network = parse_network(doc["network"], "/network");
  parse_gains(doc["gains"], "/gains", cfg.network.nodes, cfg);
  cfg.references = doc.contains("references")
                       ? parse_references(doc["references"], "/references",
                                          cfg.network)
                       : default_references(cfg.network.nodes);
  if (doc.contains("disturbance"))
    cfg.disturbance = parse_disturbance(doc["disturbance"], "/disturbance");
  if (doc.contains("sim")) parse_sim(doc["sim"], "/sim", cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

ResolvedGains resolve_gains(const Network& net, const RunConfig& cfg) {
  ResolvedGains out;
  if (cfg.gain_mode == GainMode::explicit_values) {
    out.gains = cfg.gains;
    return out;
  }
  DesignResult design = design_all(net, cfg.auto_spec);
  out.design_certificates = design.certificates;
  if (design.feasible()) out.gains = std::move(*design.gains);
  return out;
}

}  // namespace tubegrid
