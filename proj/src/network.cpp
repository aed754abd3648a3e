#include "tubegrid/network.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace tubegrid {

Eigen::MatrixXd build_incidence(const std::vector<std::pair<int, int>>& edges,
                                int nodes) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<int>(edges.size()), nodes);
  for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
    auto [tail, head] = edges[e];
    if (tail < 0 || tail >= nodes || head < 0 || head >= nodes)
      throw std::invalid_argument("edge endpoint out of range");
    if (tail == head) throw std::invalid_argument("self-loop edge");
    b(e, tail) = -1.0;
    b(e, head) = 1.0;
  }
  return b;
}

Eigen::MatrixXd build_laplacian(const Eigen::MatrixXd& incidence,
                                const Eigen::VectorXd& resistance,
                                const Eigen::VectorXd& inductance,
                                double grid_frequency) {
  const int m = static_cast<int>(incidence.rows());
  if (resistance.size() != m || inductance.size() != m)
    throw std::invalid_argument("per-edge parameter size mismatch");
  Eigen::VectorXd w(m);
  for (int e = 0; e < m; ++e) {
    const double reactance_margin =
        grid_frequency * inductance(e) - resistance(e);
    if (reactance_margin <= 0.0)
      throw std::invalid_argument(
          "line " + std::to_string(e) +
          " is not inductance-dominated: w*L must exceed r");
    w(e) = 1.0 / reactance_margin;
  }
  return incidence.transpose() * w.asDiagonal() * incidence;
}

namespace {

bool connected(const std::vector<std::pair<int, int>>& edges, int nodes) {
  if (nodes <= 0) return false;
  std::vector<std::vector<int>> adj(nodes);
  for (auto [a, b] : edges) {
    if (a < 0 || a >= nodes || b < 0 || b >= nodes) return false;
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<char> seen(nodes, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        stack.push_back(v);
      }
  }
  return std::accumulate(seen.begin(), seen.end(), 0) == nodes;
}

void check_size(std::vector<std::string>& out, const Eigen::VectorXd& v,
                int want, const char* name) {
  if (v.size() != want) {
    std::ostringstream os;
    os << name << ": expected " << want << " entries, got " << v.size();
    out.push_back(os.str());
  }
}

void check_positive(std::vector<std::string>& out, const Eigen::VectorXd& v,
                    const char* name) {
  for (int i = 0; i < v.size(); ++i)
    if (!(v(i) > 0.0)) {
      std::ostringstream os;
      os << name << "[" << i << "] must be positive, got " << v(i);
      out.push_back(os.str());
    }
}

void check_nonnegative(std::vector<std::string>& out, const Eigen::VectorXd& v,
                       const char* name) {
  for (int i = 0; i < v.size(); ++i)
    if (!(v(i) >= 0.0)) {
      std::ostringstream os;
      os << name << "[" << i << "] must be non-negative, got " << v(i);
      out.push_back(os.str());
    }
}

}  // namespace

std::vector<std::string> validate_network(const NetworkModel& model) {
  std::vector<std::string> problems;
  const int n = model.nodes;
  const int m = static_cast<int>(model.edges.size());
  if (n <= 0) {
    problems.push_back("nodes must be positive");
    return problems;
  }
  if (m == 0 && n > 1) problems.push_back("network has no edges");

  for (int e = 0; e < m; ++e) {
    auto [a, b] = model.edges[e];
    if (a < 0 || a >= n || b < 0 || b >= n)
      problems.push_back("edge " + std::to_string(e) + " endpoint out of range");
    else if (a == b)
      problems.push_back("edge " + std::to_string(e) + " is a self-loop");
  }
  if (problems.empty() && !connected(model.edges, n) && n > 1)
    problems.push_back("network is not connected");

  check_size(problems, model.capacitance, n, "capacitance");
  check_size(problems, model.rated_voltage, n, "rated_voltage");
  check_size(problems, model.load_p, n, "load_p");
  check_size(problems, model.load_q, n, "load_q");
  check_size(problems, model.dp_max, n, "dp_max");
  check_size(problems, model.dq_max, n, "dq_max");
  check_size(problems, model.v_center, n, "v_center");
  check_size(problems, model.v_max, n, "v_max");
  check_size(problems, model.line_resistance, m, "line_resistance");
  check_size(problems, model.line_inductance, m, "line_inductance");
  if (!problems.empty()) return problems;

  check_positive(problems, model.capacitance, "capacitance");
  check_positive(problems, model.rated_voltage, "rated_voltage");
  check_positive(problems, model.line_resistance, "line_resistance");
  check_positive(problems, model.line_inductance, "line_inductance");
  check_positive(problems, model.v_max, "v_max");
  check_positive(problems, model.v_center, "v_center");
  check_nonnegative(problems, model.load_p, "load_p");
  check_nonnegative(problems, model.dp_max, "dp_max");
  check_nonnegative(problems, model.dq_max, "dq_max");
  if (!(model.grid_frequency > 0.0))
    problems.push_back("grid_frequency must be positive");

  for (int e = 0; e < m; ++e) {
    const double margin = model.grid_frequency * model.line_inductance(e) -
                          model.line_resistance(e);
    if (!(margin > 0.0)) {
      std::ostringstream os;
      os << "line " << e << " violates w*L > r (margin " << margin << ")";
      problems.push_back(os.str());
    }
  }
  return problems;
}

Network make_network(NetworkModel model) {
  if (model.v_center.size() == 0) model.v_center = model.rated_voltage;
  auto problems = validate_network(model);
  if (!problems.empty()) {
    std::string joined = "invalid network:";
    for (const auto& p : problems) joined += "\n  " + p;
    throw std::invalid_argument(joined);
  }
  Network net;
  net.incidence = build_incidence(model.edges, model.nodes);
  net.laplacian =
      build_laplacian(net.incidence, model.line_resistance,
                      model.line_inductance, model.grid_frequency);
  net.model = std::move(model);
  return net;
}

NodeSets node_sets(const NetworkModel& model, const GainSet& gains) {
  validate_gains(gains, model.nodes);
  NodeSets sets;
  sets.v_center_d = model.v_center.size() ? model.v_center : model.rated_voltage;
  sets.v_radius = model.v_max;
  sets.e_radius = gains.e_bar.array().sqrt();
  sets.z_lo = -(gains.z_tilde_m + gains.delta);
  sets.z_hi = gains.z_tilde_m;
  return sets;
}

void validate_gains(const GainSet& gains, int nodes) {
  auto need = [&](const Eigen::VectorXd& v, const char* name) {
    if (v.size() != nodes)
      throw std::invalid_argument(std::string(name) + ": expected " +
                                  std::to_string(nodes) + " entries");
    for (int i = 0; i < v.size(); ++i)
      if (!(v(i) > 0.0))
        throw std::invalid_argument(std::string(name) + "[" +
                                    std::to_string(i) + "] must be positive");
  };
  need(gains.K, "K");
  need(gains.K_d, "K_d");
  need(gains.K_q, "K_q");
  need(gains.M, "M");
  need(gains.k_Id, "k_Id");
  need(gains.k_Iq, "k_Iq");
  need(gains.e_bar, "e_bar");
  need(gains.z_tilde_m, "z_tilde_m");
  need(gains.delta, "delta");
  for (int i = 0; i < nodes; ++i) {
    const double want = gains.z_tilde_m(i) * gains.K_d(i);
    if (std::abs(gains.M(i) - want) > 1e-9 * std::max(1.0, std::abs(want)))
      throw std::invalid_argument(
          "M[" + std::to_string(i) + "] must equal z_tilde_m * K_d (" +
          std::to_string(want) + "), got " + std::to_string(gains.M(i)));
  }
}

const Eigen::VectorXd& ReferenceSchedule::at(double t) const {
  if (times.empty()) throw std::logic_error("empty reference schedule");
  size_t k = 0;
  while (k + 1 < times.size() && t >= times[k + 1]) ++k;
  return values[k];
}

void ReferenceSchedule::validate(int nodes) const {
  if (times.empty() || times.size() != values.size())
    throw std::invalid_argument("reference schedule is empty or ragged");
  if (times.front() != 0.0)
    throw std::invalid_argument("reference schedule must start at t = 0");
  for (size_t k = 0; k + 1 < times.size(); ++k)
    if (!(times[k] < times[k + 1]))
      throw std::invalid_argument("reference times must increase");
  for (const auto& v : values)
    if (v.size() != nodes)
      throw std::invalid_argument("reference vector size mismatch");
}

}  // namespace tubegrid
