#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tubegrid/dynamics.hpp"
#include "tubegrid/gains.hpp"
#include "tubegrid/network.hpp"

namespace tubegrid {

/// One named check.  `margin` is positive iff the check passes with room
/// to spare, and the witness records where the extreme case occurred.
/// Informative certificates are reported but do not gate anything.
struct Certificate {
  std::string name;
  bool pass = false;
  bool informative = false;
  double margin = 0.0;
  nlohmann::json witness;
};

struct CertificateBundle {
  std::vector<Certificate> certificates;
  nlohmann::json annotations;  // e.g. the certified region-of-attraction

  bool all_pass() const;  // conjunction over the gating certificates
  const Certificate* find(const std::string& name) const;
  nlohmann::json to_json() const;
};

/// Smallest d-axis nominal voltage for which every point of the error ball
/// keeps a positive d component: e_bar + sqrt(e_bar).
double nominal_voltage_floor(double e_bar);

/// The nominal range stays far enough above the floor on every node.
/// Margin: min over nodes of (rated + z_lo) - floor.
Certificate nominal_range_check(const NetworkModel& model,
                                const GainSet& gains);

/// Load-dependent lower bound on the error feedback gain at one operating
/// point.  Denominator (e_bar - z_d)^2 - e_bar must be positive, which the
/// range check above guarantees on the design interval.
double error_gain_requirement(double e_bar, double z_d, double p, double q,
                              double dp_max, double dq_max);

/// Numerator and denominator of the closed-form decay-rate expression used
/// as a diagnostic alongside the sampled boundary check.  e is one node's
/// error, z_d the nominal d voltage, K its error gain.
std::pair<double, double> alpha_eval(const Eigen::Vector2d& e, double z_d,
                                     double K, double p, double q,
                                     double dp_max, double dq_max);

struct BoundaryCheckOptions {
  int boundary_points = 720;     // angles on each node's error circle
  int z_samples = 9;             // grid over the nominal interval
  int random_disturbances = 32;  // on top of the 4 sign extremes
  std::uint64_t seed = 0;
};

/// Samples the boundary of every node's error ball and verifies that the
/// squared error norm is strictly decreasing there for all nominal voltages
/// in range and all admissible disturbances.  Margin: -max inner product
/// (positive when every sample points inward).
Certificate error_invariance_check(const Network& net, const GainSet& gains,
                                   const BoundaryCheckOptions& opts = {});

/// Tube geometry: error ball + nominal excursion must fit inside the
/// operating disk, with the lower side also clearing the gap delta.
Certificate set_inclusion_check(const NetworkModel& model,
                                const GainSet& gains);

struct EquilibriumPoint {
  Eigen::VectorXd z_hat;      // shifted d-axis nominal voltage, n
  Eigen::VectorXd sigma_hat;  // n
  std::vector<int> saturated; // nodes pinned at sigma = +/-1
  double residual = 0.0;
  bool converged = false;
};

/// Stationary point of the d-axis nominal subsystem for a fixed reference.
/// Damped Newton from (refs, 0); nodes whose integrator state leaves
/// [-1, 1] are pinned at the bound and the reduced system is re-solved.
EquilibriumPoint solve_equilibrium(const Network& net, const GainSet& gains,
                                   const Eigen::VectorXd& refs);

/// Linearisation of the closed-loop nominal subsystem about an interior
/// equilibrium, state order [z_tilde_d; sigma_d; z_tilde_q; sigma_q].
/// Throws if the equilibrium has saturated nodes.
Eigen::MatrixXd build_jacobian(const Network& net, const GainSet& gains,
                               const EquilibriumPoint& eq);

/// Margin: -max real part of the spectrum.
Certificate hurwitz_check(const Eigen::MatrixXd& jacobian);

/// Runs the full bundle for one reference vector: range floor, boundary
/// invariance, set inclusion, equilibrium location and linear stability,
/// plus two informative spectral diagnostics.
CertificateBundle certify_all(const Network& net, const GainSet& gains,
                              const Eigen::VectorXd& refs);

}  // namespace tubegrid
