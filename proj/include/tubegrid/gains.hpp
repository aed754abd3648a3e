#pragma once

#include <Eigen/Dense>
#include <vector>

namespace tubegrid {

/// Per-node controller parameters for the cascade.
///
/// K drives the tracking-error loop, (K_d, K_q, M) the nominal voltage
/// loop, and (k_Id, k_Iq) the two integrators.  e_bar is the level of the
/// per-node error safe set {e : |e|^2 <= e_bar}; z_tilde_m and delta bound
/// the shifted nominal excursion to [-(z_tilde_m + delta), z_tilde_m]
/// around the rated voltage.
struct GainSet {
  Eigen::VectorXd K;
  Eigen::VectorXd K_d;
  Eigen::VectorXd K_q;
  Eigen::VectorXd M;
  Eigen::VectorXd k_Id;
  Eigen::VectorXd k_Iq;
  Eigen::VectorXd e_bar;      // V^2
  Eigen::VectorXd z_tilde_m;  // V
  Eigen::VectorXd delta;      // V
};

/// Throws std::invalid_argument on size mismatches, non-positive entries,
/// or M inconsistent with z_tilde_m * K_d (the saturation authority must
/// place the integrator ceiling exactly at the excursion bound).
void validate_gains(const GainSet& gains, int nodes);

/// Piecewise-constant schedule for the shifted d-axis reference: values[k]
/// applies on [times[k], times[k+1]).  times must start at 0 and increase.
struct ReferenceSchedule {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> values;

  const Eigen::VectorXd& at(double t) const;
  void validate(int nodes) const;
};

}  // namespace tubegrid
