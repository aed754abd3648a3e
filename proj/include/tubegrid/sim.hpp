#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "tubegrid/certify.hpp"
#include "tubegrid/dynamics.hpp"
#include "tubegrid/gains.hpp"
#include "tubegrid/network.hpp"

namespace tubegrid {

enum class DisturbanceKind { zero, square_wave, random_steps, sinusoid };

struct DisturbanceProfile {
  DisturbanceKind kind = DisturbanceKind::zero;
  double dwell = 0.05;      // s per level; sinusoid period
  double amplitude = 1.0;   // fraction of the model disturbance bounds
  std::uint64_t seed = 0;
};

using DisturbanceFn = std::function<LoadDisturbance(double)>;

/// Deterministic disturbance generator.  Every kind stays inside the
/// model's (dp_max, dq_max) box scaled by `amplitude`; the random kind is
/// a counter-hashed function of (seed, node, dwell index), so replaying a
/// seed reproduces the byte-identical sequence.
DisturbanceFn make_disturbance(const NetworkModel& model,
                               const DisturbanceProfile& profile);

/// Classic fixed-step fourth-order Runge-Kutta.  post_step may project the
/// state (integrator clamping); observe sees every accepted step including
/// the initial state.  Returns early when the state leaves finite range.
struct IntegrateLog {
  bool diverged = false;
  double abort_time = 0.0;
  long steps = 0;
};

IntegrateLog integrate(
    const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& rhs,
    Eigen::VectorXd& state, double t0, double t_end, double dt,
    const std::function<void(double, Eigen::VectorXd&)>& post_step = {},
    const std::function<void(long, double, const Eigen::VectorXd&)>& observe =
        {});

struct Trajectory {
  std::vector<double> times;
  Eigen::MatrixXd z_tilde;   // 2n x S
  Eigen::MatrixXd e;         // 2n x S
  Eigen::MatrixXd sigma_d;   // n x S
  Eigen::MatrixXd sigma_q;   // n x S
  Eigen::MatrixXd v;         // 2n x S
  Eigen::MatrixXd barrier;   // n x S, e_bar - |e|^2
  Eigen::MatrixXd dp;        // n x S
  Eigen::MatrixXd dq;        // n x S
  std::vector<double> event_times;  // reference or disturbance switches

  int samples() const { return static_cast<int>(times.size()); }
  int nodes() const { return static_cast<int>(sigma_d.rows()); }
};

struct SimReport {
  bool diverged = false;
  double abort_time = -1.0;
  long steps = 0;
  double sigma_clamp_max = 0.0;     // largest projection applied
  long sigma_clamp_events = 0;
  Eigen::VectorXd min_barrier;      // per node, over time
  Eigen::VectorXd tube_max;         // per node, max |e|
  Eigen::VectorXd excursion_max;    // per node, max |v - center| - radius
  int disk_violations = 0;          // samples with positive excursion
  double q_residual_max = 0.0;      // max |z_tilde_q|, |sigma_q|
  Eigen::VectorXd settle_gap;       // per node, ||v| - target| at t_end
  nlohmann::json to_json() const;
};

struct SimOptions {
  double dt = 1e-5;
  double t_end = 0.5;
  int keep_every = 1;           // trajectory decimation for storage
  bool allow_uncertified = false;
  Eigen::VectorXd e0;           // 2n; empty means zero
  Eigen::VectorXd z_tilde0_d;   // n; empty means zero
  Eigen::VectorXd sigma0_d;     // n; empty means zero
};

struct ScenarioResult {
  Trajectory trajectory;
  SimReport report;
  CertificateBundle certificates;
  bool ran = false;  // false when gated off by a failed certificate
};

/// Certifies, then integrates the closed-loop cascade.  A failing bundle
/// aborts before integration unless opts.allow_uncertified is set.
ScenarioResult run_scenario(const Network& net, const GainSet& gains,
                            const ReferenceSchedule& refs,
                            const DisturbanceProfile& disturbance,
                            const SimOptions& opts);

struct ModelComparison {
  std::vector<double> times;
  std::vector<double> voltage_gap;  // max over nodes of |v_full - v_reduced|
  double transient_max = 0.0;
  double steady_state_gap = 0.0;    // over the trailing 10% of the horizon
  bool diverged = false;
  bool ran = false;
  CertificateBundle certificates;
};

/// Runs the same closed loop against the reduced (algebraic-line) plant
/// and the full plant with line-current states, from matched initial
/// conditions, and reports the voltage discrepancy over time.
ModelComparison compare_models(const Network& net, const GainSet& gains,
                               const ReferenceSchedule& refs,
                               const DisturbanceProfile& disturbance,
                               const SimOptions& opts);

}  // namespace tubegrid
