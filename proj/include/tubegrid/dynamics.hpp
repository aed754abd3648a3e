#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "tubegrid/gains.hpp"
#include "tubegrid/network.hpp"

namespace tubegrid {

// Stacking convention: a "2n vector" holds the d components of all nodes
// first, then the q components.  Line-current vectors stack d then q over
// edges the same way.

/// Voltages below this squared magnitude make the constant-power model
/// meaningless; evaluation is a hard error rather than a silent huge value.
inline constexpr double kCplFloorV2 = 1e-6;

struct CplSingularity : std::runtime_error {
  explicit CplSingularity(double v2);
  double v_squared;
};

/// Current drawn by a constant-power load at terminal voltage v.  Positive
/// (p, q) means the load consumes; the sign convention matches an RMS-scaled
/// rotating frame, so <v, g> * 3/2 = p.
Eigen::Vector2d cpl_current(const Eigen::Vector2d& v, double p, double q);

struct TrueState {
  Eigen::VectorXd v;       // 2n node voltage
  Eigen::VectorXd i_line;  // 2m line currents
};

struct CascadeState {
  Eigen::VectorXd z_tilde;  // 2n shifted nominal voltage
  Eigen::VectorXd e;        // 2n tracking error
  Eigen::VectorXd sigma_d;  // n, clamped to [-1, 1] by the integrator
  Eigen::VectorXd sigma_q;  // n
};

struct LoadDisturbance {
  Eigen::VectorXd dp;  // n
  Eigen::VectorXd dq;  // n
};

/// Quasi-stationary node equation: C v_dot = i_inj + J2 w_g C v
/// - L v - g(v), with the lines replaced by their algebraic Laplacian
/// coupling.  i_inj is the 2n injected current, p/q the active load.
Eigen::VectorXd reduced_rhs(const Network& net, const Eigen::VectorXd& v,
                            const Eigen::VectorXd& i_inj,
                            const Eigen::VectorXd& p,
                            const Eigen::VectorXd& q);

/// Same nodes but with the line currents kept as states, one first-order
/// channel per axis: L i_dot = -(w_g L - r) i + B v.  Returns the stacked
/// derivative [v_dot; i_line_dot].
Eigen::VectorXd full_rhs(const Network& net, const TrueState& state,
                         const Eigen::VectorXd& i_inj,
                         const Eigen::VectorXd& p, const Eigen::VectorXd& q);

/// Line currents that make the line channel stationary for a given voltage.
Eigen::VectorXd line_equilibrium(const Network& net, const Eigen::VectorXd& v);

/// Nominal subsystem in shifted coordinates z_tilde = z - rated.  i_shift
/// is the shifted injection (actual nominal injection minus the standing
/// offset absorbed by the shift).  Loads enter at their nominal setpoint.
Eigen::VectorXd shifted_nominal_rhs(const Network& net,
                                    const Eigen::VectorXd& z_tilde,
                                    const Eigen::VectorXd& i_shift);

/// Error subsystem, defined literally as the difference between the
/// perturbed plant at v = e + z and the nominal plant at z.  The injected
/// error current is -K e relative to the nominal injection, so only K and
/// the disturbance appear here.
Eigen::VectorXd error_rhs(const Network& net, const Eigen::VectorXd& e,
                          const Eigen::VectorXd& z,
                          const LoadDisturbance& dist,
                          const Eigen::VectorXd& K);

/// Hand-expanded closed form of the error field under z_q = 0, kept
/// verbatim as an independent cross-check of error_rhs even though the
/// two disagree on the sign of three load terms (the d-axis active-power
/// group and one reactive term per axis).  The consistency tests predict
/// and count the disagreements instead of reconciling them; the
/// definitional difference above is the authoritative model.  z_d holds
/// the unshifted d-axis nominal voltages (n entries).
Eigen::VectorXd error_rhs_expanded(const Network& net,
                                   const Eigen::VectorXd& e,
                                   const Eigen::VectorXd& z_d,
                                   const LoadDisturbance& dist,
                                   const Eigen::VectorXd& K);

/// Closed-loop derivative of the whole cascade under the nominal feedback,
/// the error feedback and both integrators.  refs is the shifted d-axis
/// reference currently in force.
CascadeState cascade_rhs(const Network& net, const CascadeState& state,
                         const GainSet& gains, const Eigen::VectorXd& refs,
                         const LoadDisturbance& dist);

/// v = e + z_tilde + rated (d axis only for the shift).
Eigen::VectorXd reconstruct_true(const CascadeState& state,
                                 const Eigen::VectorXd& rated_voltage);

// Flat layout used by the integrator: [z_tilde (2n); e (2n); sigma_d (n);
// sigma_q (n)].
Eigen::VectorXd pack_cascade(const CascadeState& state);
CascadeState unpack_cascade(const Eigen::VectorXd& flat, int nodes);

}  // namespace tubegrid
