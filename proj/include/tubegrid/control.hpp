#pragma once

#include <Eigen/Dense>
#include <optional>

#include "tubegrid/certify.hpp"
#include "tubegrid/dynamics.hpp"
#include "tubegrid/gains.hpp"
#include "tubegrid/network.hpp"

namespace tubegrid {

/// Per-node current injected by the tracking layer: -K e on both axes,
/// on top of the nominal injection.
Eigen::VectorXd error_feedback(const Eigen::VectorXd& e,
                               const Eigen::VectorXd& K,
                               const Eigen::VectorXd& i_inj_nominal);

/// Shifted nominal injection: proportional d term driven through the
/// saturation authority M, plus the q-axis terms that cancel the frame
/// rotation and the reactive load so the q channel closes linearly.
Eigen::VectorXd nominal_feedback(const Network& net,
                                 const Eigen::VectorXd& z_tilde,
                                 const Eigen::VectorXd& sigma_d,
                                 const Eigen::VectorXd& sigma_q,
                                 const GainSet& gains);

/// d integrator: k_Id (1 - sigma^2) (ref - z_tilde_d), self-limiting at
/// +/-1.  q integrator: plain -k_Iq z_tilde_q.
void integrator_rhs(const GainSet& gains, const Eigen::VectorXd& z_tilde,
                    const Eigen::VectorXd& refs,
                    const Eigen::VectorXd& sigma_d,
                    const Eigen::VectorXd& sigma_q,
                    Eigen::VectorXd& sigma_d_dot,
                    Eigen::VectorXd& sigma_q_dot);

/// Linearised stability bound on K_d at a voltage z_hat (unshifted):
/// the proportional gain must beat the negative-resistance slope of the
/// constant-power load.
double cpl_stability_bound(double p, double z_hat);

/// Bound that keeps the saturated branch attracted to the interior:
/// worst-case load slope over the admissible excursion below rated.
double saturation_stability_bound(double p, double rated, double z_tilde_m,
                                  double delta);

struct ErrorGainDesign {
  Eigen::VectorXd K;
  Eigen::VectorXd requirement;  // per-node max of the gain bound
};

/// Grid-maximises the error gain requirement over each node's nominal
/// interval [z_lo, z_hi] (unshifted volts) and applies the safety factor.
/// min_gain keeps load-free nodes actively damped.
ErrorGainDesign design_error_gain(const NetworkModel& model,
                                  const Eigen::VectorXd& e_bar,
                                  const Eigen::VectorXd& z_lo,
                                  const Eigen::VectorXd& z_hi,
                                  double safety = 1.05,
                                  int grid_points = 1000,
                                  double min_gain = 1.0);

struct NominalGainDesign {
  Eigen::VectorXd K_d;
  Eigen::VectorXd M;
  Eigen::VectorXd bound_interior;  // stability bound at the lowest excursion
  Eigen::VectorXd bound_saturated;
};

struct AutoDesignSpec {
  Eigen::VectorXd e_bar;
  Eigen::VectorXd z_tilde_m;
  Eigen::VectorXd delta;
  double safety = 1.05;
  int grid_points = 1000;
  double min_gain = 1.0;
  // Optional presets; empty vectors fall back to K_q = K_d and rate 50.
  Eigen::VectorXd K_q;
  Eigen::VectorXd k_Id;
  Eigen::VectorXd k_Iq;
};

NominalGainDesign design_nominal_gains(const NetworkModel& model,
                                       const AutoDesignSpec& spec);

struct DesignResult {
  std::optional<GainSet> gains;  // empty when a design certificate fails
  std::vector<Certificate> certificates;
  bool feasible() const { return gains.has_value(); }
};

/// End-to-end design: checks the range floor and the set geometry first,
/// then sizes K, K_d and M.  Fails closed, returning only the failing
/// margins when the requested sets are not certifiable.
DesignResult design_all(const Network& net, const AutoDesignSpec& spec);

}  // namespace tubegrid
