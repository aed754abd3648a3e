#pragma once

// Shared fixtures: the six-node benchmark mesh used across the suite and
// a couple of degenerate networks for edge cases.

#include <Eigen/Dense>

#include "tubegrid/gains.hpp"
#include "tubegrid/network.hpp"

namespace fixtures {

// Six nodes in a ring with three chords, identical 500 uF buses at 110 V
// rated, 500 W / 400 var constant-power loads and equally large
// disturbance bounds; weakly damped inductive lines.
inline tubegrid::NetworkModel mesh6_model() {
  tubegrid::NetworkModel m;
  m.nodes = 6;
  m.edges = {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5},
             {5, 0}, {0, 3}, {1, 4}, {2, 5}};
  m.capacitance = Eigen::VectorXd::Constant(6, 500e-6);
  m.line_resistance = Eigen::VectorXd::Constant(9, 0.1);
  m.line_inductance = Eigen::VectorXd::Constant(9, 0.06);
  m.rated_voltage = Eigen::VectorXd::Constant(6, 110.0);
  m.load_p = Eigen::VectorXd::Constant(6, 500.0);
  m.load_q = Eigen::VectorXd::Constant(6, 400.0);
  m.dp_max = Eigen::VectorXd::Constant(6, 500.0);
  m.dq_max = Eigen::VectorXd::Constant(6, 400.0);
  m.v_center = Eigen::VectorXd::Constant(6, 109.5);
  m.v_max = Eigen::VectorXd::Constant(6, 6.0);
  return m;
}

// Hand-picked gains known to certify on mesh6.
inline tubegrid::GainSet mesh6_gains() {
  tubegrid::GainSet g;
  g.K = Eigen::VectorXd::Constant(6, 40.0);
  g.K_d = Eigen::VectorXd::Constant(6, 100.0);
  g.K_q = Eigen::VectorXd::Constant(6, 100.0);
  g.M = Eigen::VectorXd::Constant(6, 500.0);
  g.k_Id = Eigen::VectorXd::Constant(6, 50.0);
  g.k_Iq = Eigen::VectorXd::Constant(6, 50.0);
  g.e_bar = Eigen::VectorXd::Constant(6, 0.2);
  g.z_tilde_m = Eigen::VectorXd::Constant(6, 5.0);
  g.delta = Eigen::VectorXd::Constant(6, 1.0);
  return g;
}

// Three-epoch shifted reference study exercised by the bundled config.
inline tubegrid::ReferenceSchedule mesh6_refs() {
  tubegrid::ReferenceSchedule refs;
  refs.times = {0.0, 0.2, 0.4};
  refs.values = {
      (Eigen::VectorXd(6) << -3.5, -2.0, -0.5, 1.5, 3.0, 4.5).finished(),
      (Eigen::VectorXd(6) << -5.0, -3.5, -2.0, -0.5, 1.0, 2.5).finished(),
      (Eigen::VectorXd(6) << -1.0, 0.5, 2.0, 3.5, 5.0, 6.0).finished()};
  return refs;
}

inline tubegrid::NetworkModel single_node_model(double p = 0.0,
                                                double q = 0.0) {
  tubegrid::NetworkModel m;
  m.nodes = 1;
  m.capacitance = Eigen::VectorXd::Constant(1, 500e-6);
  m.line_resistance = Eigen::VectorXd(0);
  m.line_inductance = Eigen::VectorXd(0);
  m.rated_voltage = Eigen::VectorXd::Constant(1, 110.0);
  m.load_p = Eigen::VectorXd::Constant(1, p);
  m.load_q = Eigen::VectorXd::Constant(1, q);
  m.dp_max = Eigen::VectorXd::Constant(1, 0.0);
  m.dq_max = Eigen::VectorXd::Constant(1, 0.0);
  m.v_center = Eigen::VectorXd::Constant(1, 110.0);
  m.v_max = Eigen::VectorXd::Constant(1, 8.0);
  return m;
}

inline tubegrid::GainSet single_node_gains(double K_d, double z_tilde_m) {
  tubegrid::GainSet g;
  g.K = Eigen::VectorXd::Constant(1, 10.0);
  g.K_d = Eigen::VectorXd::Constant(1, K_d);
  g.K_q = Eigen::VectorXd::Constant(1, K_d);
  g.M = Eigen::VectorXd::Constant(1, z_tilde_m * K_d);
  g.k_Id = Eigen::VectorXd::Constant(1, 50.0);
  g.k_Iq = Eigen::VectorXd::Constant(1, 50.0);
  g.e_bar = Eigen::VectorXd::Constant(1, 0.2);
  g.z_tilde_m = Eigen::VectorXd::Constant(1, z_tilde_m);
  g.delta = Eigen::VectorXd::Constant(1, 1.0);
  return g;
}

}  // namespace fixtures
