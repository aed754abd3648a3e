#include "tubegrid/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tubegrid/control.hpp"
#include "tubegrid/rng.hpp"

namespace tubegrid {

DisturbanceFn make_disturbance(const NetworkModel& model,
                               const DisturbanceProfile& profile) {
  const int n = model.nodes;
  const Eigen::VectorXd dp_max = model.dp_max;
  const Eigen::VectorXd dq_max = model.dq_max;
  const double amp = profile.amplitude;
  const double dwell = profile.dwell;
  const std::uint64_t seed = profile.seed;

  switch (profile.kind) {
    case DisturbanceKind::zero:
      return [n](double) {
        return LoadDisturbance{Eigen::VectorXd::Zero(n),
                               Eigen::VectorXd::Zero(n)};
      };
    case DisturbanceKind::square_wave:
      return [=](double t) {
        const long k = static_cast<long>(std::floor(t / dwell + 1e-12));
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        return LoadDisturbance{sign * amp * dp_max, sign * amp * dq_max};
      };
    case DisturbanceKind::random_steps:
      return [=](double t) {
        const long k = static_cast<long>(std::floor(t / dwell + 1e-12));
        LoadDisturbance d{Eigen::VectorXd(n), Eigen::VectorXd(n)};
        for (int i = 0; i < n; ++i) {
          const std::uint64_t h =
              hash_mix(seed, hash_mix(static_cast<std::uint64_t>(k), i));
          d.dp(i) = amp * dp_max(i) * signed_unit(h);
          d.dq(i) = amp * dq_max(i) * signed_unit(splitmix64(h));
        }
        return d;
      };
    case DisturbanceKind::sinusoid:
      return [=](double t) {
        const double phase = 2.0 * kPi * t / dwell;
        LoadDisturbance d{Eigen::VectorXd(n), Eigen::VectorXd(n)};
        for (int i = 0; i < n; ++i) {
          // Per-node phase offset so nodes do not move in lockstep.
          const double off =
              2.0 * kPi * unit_double(hash_mix(seed, 0x70686173ull + i));
          d.dp(i) = amp * dp_max(i) * std::sin(phase + off);
          d.dq(i) = amp * dq_max(i) * std::sin(phase + off + 0.5 * kPi);
        }
        return d;
      };
  }
  throw std::logic_error("unknown disturbance kind");
}

IntegrateLog integrate(
    const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& rhs,
    Eigen::VectorXd& state, double t0, double t_end, double dt,
    const std::function<void(double, Eigen::VectorXd&)>& post_step,
    const std::function<void(long, double, const Eigen::VectorXd&)>& observe) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  IntegrateLog log;
  const long steps = std::llround((t_end - t0) / dt);
  if (observe) observe(0, t0, state);
  Eigen::VectorXd k1, k2, k3, k4;
  for (long s = 0; s < steps; ++s) {
    const double t = t0 + s * dt;
    k1 = rhs(t, state);
    k2 = rhs(t + 0.5 * dt, state + (0.5 * dt) * k1);
    k3 = rhs(t + 0.5 * dt, state + (0.5 * dt) * k2);
    k4 = rhs(t + dt, state + dt * k3);
    state += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double t_next = t0 + (s + 1) * dt;
    if (!state.allFinite()) {
      log.diverged = true;
      log.abort_time = t_next;
      log.steps = s + 1;
      return log;
    }
    if (post_step) post_step(t_next, state);
    if (observe) observe(s + 1, t_next, state);
  }
  log.steps = steps;
  return log;
}

namespace {

// Events (reference switches, disturbance dwell edges) land exactly on
// step boundaries: values are frozen per step at the step's start time,
// so all four stage evaluations of a step see one consistent input.
struct StepInputs {
  const ReferenceSchedule* refs;
  DisturbanceFn disturbance;
  Eigen::VectorXd current_ref;
  LoadDisturbance current_dist;

  void freeze(double t) {
    // Nudge absorbs 1-ulp-low step times so a switch scheduled exactly on
    // a step boundary is picked up by the step that starts there.
    current_ref = refs->at(t + 1e-12);
    current_dist = disturbance(t);
  }
};

double settle_target(const Network& net, const GainSet& gains,
                     const Eigen::VectorXd& ref, int i) {
  // A reference outside the excursion interval parks the nominal at the
  // interval edge (integrator ceiling), not at the reference itself.
  const double hi = gains.z_tilde_m(i);
  const double lo = -(gains.z_tilde_m(i) + gains.delta(i));
  return net.model.rated_voltage(i) + std::clamp(ref(i), lo, hi);
}

CascadeState initial_state(int n, const SimOptions& opts) {
  if (opts.e0.size() && opts.e0.size() != 2 * n)
    throw std::invalid_argument("e0 must have 2n entries");
  if (opts.z_tilde0_d.size() && opts.z_tilde0_d.size() != n)
    throw std::invalid_argument("z_tilde0_d must have n entries");
  if (opts.sigma0_d.size() && opts.sigma0_d.size() != n)
    throw std::invalid_argument("sigma0_d must have n entries");
  CascadeState init;
  init.z_tilde = Eigen::VectorXd::Zero(2 * n);
  init.e = opts.e0.size() ? opts.e0 : Eigen::VectorXd::Zero(2 * n);
  init.sigma_d =
      opts.sigma0_d.size() ? opts.sigma0_d : Eigen::VectorXd::Zero(n);
  init.sigma_q = Eigen::VectorXd::Zero(n);
  if (opts.z_tilde0_d.size()) init.z_tilde.head(n) = opts.z_tilde0_d;
  return init;
}

}  // namespace

ScenarioResult run_scenario(const Network& net, const GainSet& gains,
                            const ReferenceSchedule& refs,
                            const DisturbanceProfile& disturbance,
                            const SimOptions& opts) {
  const int n = net.n();
  validate_gains(gains, n);
  refs.validate(n);

  ScenarioResult result;
  result.certificates = certify_all(net, gains, refs.values.front());
  if (!result.certificates.all_pass() && !opts.allow_uncertified)
    return result;
  result.ran = true;

  CascadeState init = initial_state(n, opts);
  Eigen::VectorXd state = pack_cascade(init);

  StepInputs inputs{&refs, make_disturbance(net.model, disturbance), {}, {}};
  inputs.freeze(0.0);

  const long total_steps = std::llround(opts.t_end / opts.dt);
  const int keep = std::max(1, opts.keep_every);
  const long kept = total_steps / keep + 1;

  Trajectory& traj = result.trajectory;
  traj.times.reserve(kept);
  traj.z_tilde.resize(2 * n, kept);
  traj.e.resize(2 * n, kept);
  traj.sigma_d.resize(n, kept);
  traj.sigma_q.resize(n, kept);
  traj.v.resize(2 * n, kept);
  traj.barrier.resize(n, kept);
  traj.dp.resize(n, kept);
  traj.dq.resize(n, kept);

  SimReport& report = result.report;
  report.min_barrier =
      Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  report.tube_max = Eigen::VectorXd::Zero(n);
  report.excursion_max =
      Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
  report.settle_gap = Eigen::VectorXd::Zero(n);

  // Event markers: reference switches plus disturbance dwell edges that
  // fall inside the horizon.
  for (size_t k = 1; k < refs.times.size(); ++k)
    if (refs.times[k] <= opts.t_end) traj.event_times.push_back(refs.times[k]);
  if (disturbance.kind != DisturbanceKind::zero)
    for (double t = disturbance.dwell; t < opts.t_end + 0.5 * opts.dt;
         t += disturbance.dwell)
      traj.event_times.push_back(t);
  std::sort(traj.event_times.begin(), traj.event_times.end());

  const NodeSets sets = node_sets(net.model, gains);
  long col = 0;

  auto rhs = [&](double, const Eigen::VectorXd& x) {
    const CascadeState s = unpack_cascade(x, n);
    return pack_cascade(
        cascade_rhs(net, s, gains, inputs.current_ref, inputs.current_dist));
  };
  auto post = [&](double t, Eigen::VectorXd& x) {
    for (int i = 0; i < n; ++i) {
      double& sd = x(4 * n + i);
      const double clamped = std::clamp(sd, -1.0, 1.0);
      const double corr = std::abs(sd - clamped);
      if (corr > 0.0) {
        ++report.sigma_clamp_events;
        report.sigma_clamp_max = std::max(report.sigma_clamp_max, corr);
        sd = clamped;
      }
    }
    inputs.freeze(t);  // next step's frozen inputs
  };
  auto observe = [&](long step, double t, const Eigen::VectorXd& x) {
    if (step % keep != 0) return;
    const CascadeState s = unpack_cascade(x, n);
    const Eigen::VectorXd v = reconstruct_true(s, net.model.rated_voltage);
    traj.times.push_back(t);
    traj.z_tilde.col(col) = s.z_tilde;
    traj.e.col(col) = s.e;
    traj.sigma_d.col(col) = s.sigma_d;
    traj.sigma_q.col(col) = s.sigma_q;
    traj.v.col(col) = v;
    traj.dp.col(col) = inputs.current_dist.dp;
    traj.dq.col(col) = inputs.current_dist.dq;
    for (int i = 0; i < n; ++i)
      traj.barrier(i, col) =
          gains.e_bar(i) - (s.e(i) * s.e(i) + s.e(n + i) * s.e(n + i));
    ++col;
    for (int i = 0; i < n; ++i) {
      const double b =
          gains.e_bar(i) - (s.e(i) * s.e(i) + s.e(n + i) * s.e(n + i));
      report.min_barrier(i) = std::min(report.min_barrier(i), b);
      report.tube_max(i) = std::max(
          report.tube_max(i),
          std::hypot(s.e(i), s.e(n + i)));
      const double exc = std::hypot(v(i) - sets.v_center_d(i), v(n + i)) -
                         sets.v_radius(i);
      report.excursion_max(i) = std::max(report.excursion_max(i), exc);
      if (exc > 0.0) ++report.disk_violations;
      report.q_residual_max =
          std::max({report.q_residual_max, std::abs(s.z_tilde(n + i)),
                    std::abs(s.sigma_q(i))});
    }
  };

  const IntegrateLog log = integrate(
      rhs, state, 0.0, opts.t_end, opts.dt, post,
      total_steps > 0 ? std::function<void(long, double, const Eigen::VectorXd&)>(
                            observe)
                      : std::function<void(long, double,
                                           const Eigen::VectorXd&)>{});
  report.diverged = log.diverged;
  report.abort_time = log.diverged ? log.abort_time : -1.0;
  report.steps = log.steps;

  if (total_steps == 0 && !log.diverged) {
    // Degenerate span keeps the trajectory empty, but the report still
    // reflects the initial state.
    const CascadeState s = unpack_cascade(state, n);
    const Eigen::VectorXd v = reconstruct_true(s, net.model.rated_voltage);
    for (int i = 0; i < n; ++i) {
      report.min_barrier(i) =
          gains.e_bar(i) - (s.e(i) * s.e(i) + s.e(n + i) * s.e(n + i));
      report.tube_max(i) = std::hypot(s.e(i), s.e(n + i));
      report.excursion_max(i) =
          std::hypot(v(i) - sets.v_center_d(i), v(n + i)) - sets.v_radius(i);
      if (report.excursion_max(i) > 0.0) ++report.disk_violations;
    }
  }

  // Columns actually filled can fall short of the estimate on divergence.
  const long filled = col;
  traj.z_tilde.conservativeResize(Eigen::NoChange, filled);
  traj.e.conservativeResize(Eigen::NoChange, filled);
  traj.sigma_d.conservativeResize(Eigen::NoChange, filled);
  traj.sigma_q.conservativeResize(Eigen::NoChange, filled);
  traj.v.conservativeResize(Eigen::NoChange, filled);
  traj.barrier.conservativeResize(Eigen::NoChange, filled);
  traj.dp.conservativeResize(Eigen::NoChange, filled);
  traj.dq.conservativeResize(Eigen::NoChange, filled);

  if (!log.diverged && opts.t_end > 0.0) {
    const CascadeState s = unpack_cascade(state, n);
    const Eigen::VectorXd& final_ref = refs.at(opts.t_end);
    for (int i = 0; i < n; ++i) {
      const double z_rms = std::hypot(
          s.z_tilde(i) + net.model.rated_voltage(i), s.z_tilde(n + i));
      report.settle_gap(i) =
          std::abs(z_rms - settle_target(net, gains, final_ref, i));
    }
  }
  return result;
}

ModelComparison compare_models(const Network& net, const GainSet& gains,
                               const ReferenceSchedule& refs,
                               const DisturbanceProfile& disturbance,
                               const SimOptions& opts) {
  const int n = net.n();
  validate_gains(gains, n);
  refs.validate(n);
  ModelComparison cmp;

  // Reduced side: the cascade is the reduced closed loop by construction.
  SimOptions run_opts = opts;
  run_opts.keep_every = std::max(1, opts.keep_every);
  ScenarioResult reduced = run_scenario(net, gains, refs, disturbance, run_opts);
  cmp.certificates = reduced.certificates;
  cmp.ran = reduced.ran;
  if (!reduced.ran || reduced.report.diverged) {
    cmp.diverged = reduced.report.diverged;
    return cmp;
  }

  // Full side: plant states (v, line currents) plus the same controller
  // states, driven by the total injection.  With per-node rated voltages
  // the shifted feedback omits the standing Laplacian term, so it is
  // restored here.
  const Eigen::VectorXd standing = net.laplacian * net.model.rated_voltage;
  StepInputs inputs{&refs, make_disturbance(net.model, disturbance), {}, {}};
  inputs.freeze(0.0);

  CascadeState init = initial_state(n, opts);
  Eigen::VectorXd v0 = reconstruct_true(init, net.model.rated_voltage);
  const int m = net.m();
  Eigen::VectorXd state(2 * n + 2 * m + 4 * n);
  state.segment(0, 2 * n) = v0;
  state.segment(2 * n, 2 * m) = line_equilibrium(net, v0);
  state.segment(2 * n + 2 * m, 2 * n) = init.z_tilde;
  state.segment(4 * n + 2 * m, n) = init.sigma_d;
  state.segment(5 * n + 2 * m, n) = init.sigma_q;

  auto full_closed_rhs = [&](double, const Eigen::VectorXd& x) {
    TrueState plant;
    plant.v = x.segment(0, 2 * n);
    plant.i_line = x.segment(2 * n, 2 * m);
    const Eigen::VectorXd z_tilde = x.segment(2 * n + 2 * m, 2 * n);
    const Eigen::VectorXd sigma_d = x.segment(4 * n + 2 * m, n);
    const Eigen::VectorXd sigma_q = x.segment(5 * n + 2 * m, n);

    const Eigen::VectorXd i_shift =
        nominal_feedback(net, z_tilde, sigma_d, sigma_q, gains);
    Eigen::VectorXd inj = i_shift;
    inj.head(n) += standing;
    Eigen::VectorXd z = z_tilde;
    z.head(n) += net.model.rated_voltage;
    const Eigen::VectorXd e = plant.v - z;
    inj = error_feedback(e, gains.K, inj);

    const Eigen::VectorXd plant_dot =
        full_rhs(net, plant, inj, net.model.load_p + inputs.current_dist.dp,
                 net.model.load_q + inputs.current_dist.dq);
    const Eigen::VectorXd z_dot = shifted_nominal_rhs(net, z_tilde, i_shift);
    Eigen::VectorXd sd_dot, sq_dot;
    integrator_rhs(gains, z_tilde, inputs.current_ref, sigma_d, sigma_q,
                   sd_dot, sq_dot);

    Eigen::VectorXd dot(state.size());
    dot << plant_dot, z_dot, sd_dot, sq_dot;
    return dot;
  };
  auto post = [&](double t, Eigen::VectorXd& x) {
    for (int i = 0; i < n; ++i) {
      double& sd = x(4 * n + 2 * m + i);
      sd = std::clamp(sd, -1.0, 1.0);
    }
    inputs.freeze(t);
  };

  const int keep = run_opts.keep_every;
  long col = 0;
  auto observe = [&](long step, double, const Eigen::VectorXd& x) {
    if (step % keep != 0) return;
    if (col >= static_cast<long>(reduced.trajectory.times.size())) return;
    const Eigen::VectorXd v_full = x.segment(0, 2 * n);
    const Eigen::VectorXd v_red = reduced.trajectory.v.col(col);
    double gap = 0.0;
    for (int i = 0; i < n; ++i)
      gap = std::max(gap, std::hypot(v_full(i) - v_red(i),
                                     v_full(n + i) - v_red(n + i)));
    cmp.times.push_back(reduced.trajectory.times[col]);
    cmp.voltage_gap.push_back(gap);
    ++col;
  };

  const IntegrateLog log =
      integrate(full_closed_rhs, state, 0.0, opts.t_end, opts.dt, post, observe);
  cmp.diverged = log.diverged;
  if (cmp.voltage_gap.empty()) return cmp;

  cmp.transient_max =
      *std::max_element(cmp.voltage_gap.begin(), cmp.voltage_gap.end());
  const size_t tail_start =
      cmp.voltage_gap.size() - std::max<size_t>(1, cmp.voltage_gap.size() / 10);
  for (size_t k = tail_start; k < cmp.voltage_gap.size(); ++k)
    cmp.steady_state_gap = std::max(cmp.steady_state_gap, cmp.voltage_gap[k]);
  return cmp;
}

nlohmann::json SimReport::to_json() const {
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  return {{"diverged", diverged},
          {"abort_time", abort_time},
          {"steps", steps},
          {"sigma_clamp_max", sigma_clamp_max},
          {"sigma_clamp_events", sigma_clamp_events},
          {"min_barrier", vec(min_barrier)},
          {"tube_max", vec(tube_max)},
          {"excursion_max", vec(excursion_max)},
          {"disk_violations", disk_violations},
          {"q_residual_max", q_residual_max},
          {"settle_gap", vec(settle_gap)}};
}

}  // namespace tubegrid
