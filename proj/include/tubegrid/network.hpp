#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "tubegrid/gains.hpp"

namespace tubegrid {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// Electrical description of the microgrid in the rotating frame.
/// Vectors are per node (or per edge for line data); node indices in
/// `edges` are 0-based and each pair is an oriented edge tail->head.
struct NetworkModel {
  int nodes = 0;
  std::vector<std::pair<int, int>> edges;

  Eigen::VectorXd capacitance;       // F
  Eigen::VectorXd line_resistance;   // Ohm
  Eigen::VectorXd line_inductance;   // H
  double grid_frequency = 2.0 * kPi * 50.0;  // rad/s

  Eigen::VectorXd rated_voltage;     // V, d-axis operating point
  Eigen::VectorXd load_p;            // W, nominal constant-power draw
  Eigen::VectorXd load_q;            // var
  Eigen::VectorXd dp_max;            // W, disturbance bound
  Eigen::VectorXd dq_max;            // var

  // Operating disk per node: |v - (v_center, 0)| <= v_max.  v_center
  // defaults to the rated voltage when the config leaves it out.
  Eigen::VectorXd v_center;
  Eigen::VectorXd v_max;
};

/// Oriented incidence matrix, edges x nodes: row e has -1 at the tail and
/// +1 at the head.
Eigen::MatrixXd build_incidence(const std::vector<std::pair<int, int>>& edges,
                                int nodes);

/// Weighted Laplacian B^T diag(w) B with edge weight
/// w = 1 / (omega L - r); requires omega L > r on every edge.
Eigen::MatrixXd build_laplacian(const Eigen::MatrixXd& incidence,
                                const Eigen::VectorXd& resistance,
                                const Eigen::VectorXd& inductance,
                                double grid_frequency);

/// Returns a list of human-readable problems; empty means the model is
/// usable.  Checks sizes, positivity, connectivity and the inductive
/// dominance needed for positive edge weights.
std::vector<std::string> validate_network(const NetworkModel& model);

/// A validated model plus the derived coupling matrices.  Everything
/// downstream takes this, so incidence and Laplacian are built once.
struct Network {
  NetworkModel model;
  Eigen::MatrixXd incidence;  // m x n
  Eigen::MatrixXd laplacian;  // n x n

  int n() const { return model.nodes; }
  int m() const { return static_cast<int>(model.edges.size()); }
};

/// Throws std::invalid_argument with the joined validation messages.
Network make_network(NetworkModel model);

/// Geometry of the per-node sets used by the certificates: the operating
/// disk, the error ball radius and the shifted nominal interval.
struct NodeSets {
  Eigen::VectorXd v_center_d;
  Eigen::VectorXd v_radius;
  Eigen::VectorXd e_radius;   // sqrt(e_bar)
  Eigen::VectorXd z_lo;       // shifted, = -(z_tilde_m + delta)
  Eigen::VectorXd z_hi;       // shifted, = z_tilde_m
};

NodeSets node_sets(const NetworkModel& model, const GainSet& gains);

}  // namespace tubegrid
