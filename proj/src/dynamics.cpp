#include "tubegrid/dynamics.hpp"

#include <cmath>

#include "tubegrid/control.hpp"

namespace tubegrid {

CplSingularity::CplSingularity(double v2)
    : std::runtime_error("constant-power load evaluated at |v|^2 = " +
                         std::to_string(v2) +
                         " V^2, below the model validity floor"),
      v_squared(v2) {}

Eigen::Vector2d cpl_current(const Eigen::Vector2d& v, double p, double q) {
  const double v2 = v.squaredNorm();
  if (v2 < kCplFloorV2) throw CplSingularity(v2);
  const double s = 2.0 / (3.0 * v2);
  return {s * (v.x() * p + v.y() * q), s * (v.y() * p - v.x() * q)};
}

namespace {

// J2 rotates (d, q) -> (q, -d); the frame rotation term in every node
// equation is J2 * w * C * v.
inline void add_rotation(const Network& net, const Eigen::VectorXd& v,
                         Eigen::VectorXd& out) {
  const int n = net.n();
  const double w = net.model.grid_frequency;
  for (int i = 0; i < n; ++i) {
    const double c = net.model.capacitance(i);
    out(i) += w * c * v(n + i);
    out(n + i) -= w * c * v(i);
  }
}

inline void subtract_loads(const Eigen::VectorXd& v, const Eigen::VectorXd& p,
                           const Eigen::VectorXd& q, int n,
                           Eigen::VectorXd& out) {
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d g =
        cpl_current({v(i), v(n + i)}, p(i), q(i));
    out(i) -= g.x();
    out(n + i) -= g.y();
  }
}

inline void divide_by_capacitance(const Network& net, Eigen::VectorXd& out) {
  const int n = net.n();
  for (int i = 0; i < n; ++i) {
    out(i) /= net.model.capacitance(i);
    out(n + i) /= net.model.capacitance(i);
  }
}

}  // namespace

Eigen::VectorXd reduced_rhs(const Network& net, const Eigen::VectorXd& v,
                            const Eigen::VectorXd& i_inj,
                            const Eigen::VectorXd& p,
                            const Eigen::VectorXd& q) {
  const int n = net.n();
  Eigen::VectorXd out = i_inj;
  add_rotation(net, v, out);
  out.head(n) -= net.laplacian * v.head(n);
  out.tail(n) -= net.laplacian * v.tail(n);
  subtract_loads(v, p, q, n, out);
  divide_by_capacitance(net, out);
  return out;
}

Eigen::VectorXd line_equilibrium(const Network& net, const Eigen::VectorXd& v) {
  const int n = net.n();
  const int m = net.m();
  Eigen::VectorXd i(2 * m);
  const Eigen::VectorXd drop_d = net.incidence * v.head(n);
  const Eigen::VectorXd drop_q = net.incidence * v.tail(n);
  for (int e = 0; e < m; ++e) {
    const double damping = net.model.grid_frequency * net.model.line_inductance(e) -
                           net.model.line_resistance(e);
    i(e) = drop_d(e) / damping;
    i(m + e) = drop_q(e) / damping;
  }
  return i;
}

Eigen::VectorXd full_rhs(const Network& net, const TrueState& state,
                         const Eigen::VectorXd& i_inj,
                         const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  const int n = net.n();
  const int m = net.m();
  Eigen::VectorXd v_dot = i_inj;
  add_rotation(net, state.v, v_dot);
  // Node balance picks up the line currents through the incidence map.
  v_dot.head(n) -= net.incidence.transpose() * state.i_line.head(m);
  v_dot.tail(n) -= net.incidence.transpose() * state.i_line.tail(m);
  subtract_loads(state.v, p, q, n, v_dot);
  divide_by_capacitance(net, v_dot);

  Eigen::VectorXd i_dot(2 * m);
  const Eigen::VectorXd drop_d = net.incidence * state.v.head(n);
  const Eigen::VectorXd drop_q = net.incidence * state.v.tail(n);
  for (int e = 0; e < m; ++e) {
    const double damping = net.model.grid_frequency * net.model.line_inductance(e) -
                           net.model.line_resistance(e);
    const double inv_l = 1.0 / net.model.line_inductance(e);
    i_dot(e) = inv_l * (-damping * state.i_line(e) + drop_d(e));
    i_dot(m + e) = inv_l * (-damping * state.i_line(m + e) + drop_q(e));
  }

  Eigen::VectorXd out(2 * n + 2 * m);
  out << v_dot, i_dot;
  return out;
}

Eigen::VectorXd shifted_nominal_rhs(const Network& net,
                                    const Eigen::VectorXd& z_tilde,
                                    const Eigen::VectorXd& i_shift) {
  const int n = net.n();
  const double w = net.model.grid_frequency;
  Eigen::VectorXd out = i_shift;
  // The shift moves the d equation's standing terms into i_shift; what is
  // left is the rotation of the unshifted voltage, the line coupling of the
  // shifted voltage and the nominal load at the unshifted voltage.
  for (int i = 0; i < n; ++i) {
    const double c = net.model.capacitance(i);
    const double zd = z_tilde(i) + net.model.rated_voltage(i);
    out(i) += w * c * z_tilde(n + i);
    out(n + i) -= w * c * zd;
    const Eigen::Vector2d g =
        cpl_current({zd, z_tilde(n + i)}, net.model.load_p(i),
                    net.model.load_q(i));
    out(i) -= g.x();
    out(n + i) -= g.y();
  }
  out.head(n) -= net.laplacian * z_tilde.head(n);
  out.tail(n) -= net.laplacian * z_tilde.tail(n);
  divide_by_capacitance(net, out);
  return out;
}

Eigen::VectorXd error_rhs(const Network& net, const Eigen::VectorXd& e,
                          const Eigen::VectorXd& z,
                          const LoadDisturbance& dist,
                          const Eigen::VectorXd& K) {
  const int n = net.n();
  // Definitional form: the error moves as the perturbed plant at e + z
  // minus the nominal plant at z, with the tracking layer contributing
  // only its -K e part (the common nominal injection cancels).
  Eigen::VectorXd inj = Eigen::VectorXd::Zero(2 * n);
  for (int i = 0; i < n; ++i) {
    inj(i) = -K(i) * e(i);
    inj(n + i) = -K(i) * e(n + i);
  }
  const Eigen::VectorXd perturbed =
      reduced_rhs(net, e + z, inj, net.model.load_p + dist.dp,
                  net.model.load_q + dist.dq);
  const Eigen::VectorXd nominal =
      reduced_rhs(net, z, Eigen::VectorXd::Zero(2 * n), net.model.load_p,
                  net.model.load_q);
  return perturbed - nominal;
}

Eigen::VectorXd error_rhs_expanded(const Network& net,
                                   const Eigen::VectorXd& e,
                                   const Eigen::VectorXd& z_d,
                                   const LoadDisturbance& dist,
                                   const Eigen::VectorXd& K) {
  const int n = net.n();
  const double w = net.model.grid_frequency;
  Eigen::VectorXd out(2 * n);
  const Eigen::VectorXd couple_d = net.laplacian * e.head(n);
  const Eigen::VectorXd couple_q = net.laplacian * e.tail(n);
  for (int i = 0; i < n; ++i) {
    const double c = net.model.capacitance(i);
    const double ed = e(i), eq = e(n + i), zd = z_d(i);
    const double p = net.model.load_p(i), q = net.model.load_q(i);
    const double dp = dist.dp(i), dq = dist.dq(i);
    const double vd = ed + zd;
    const double den = vd * vd + eq * eq;
    if (den < kCplFloorV2) throw CplSingularity(den);
    if (zd * zd < kCplFloorV2) throw CplSingularity(zd * zd);
    const double den_z = zd * den;
    const double d_axis =
        -K(i) * ed + w * c * eq - couple_d(i) -
        (2.0 / 3.0) * (p * (ed * vd + eq * eq) / den_z +
                       (dp * vd + dq * eq - q * eq) / den);
    const double q_axis =
        -K(i) * eq - w * c * ed - couple_q(i) -
        (2.0 / 3.0) * (-q * (ed * (ed - zd) - eq * eq) / den_z +
                       (-dq * vd + dp * eq + p * eq) / den);
    out(i) = d_axis / c;
    out(n + i) = q_axis / c;
  }
  return out;
}

CascadeState cascade_rhs(const Network& net, const CascadeState& state,
                         const GainSet& gains, const Eigen::VectorXd& refs,
                         const LoadDisturbance& dist) {
  const int n = net.n();
  const Eigen::VectorXd i_shift =
      nominal_feedback(net, state.z_tilde, state.sigma_d, state.sigma_q, gains);

  CascadeState dot;
  dot.z_tilde = shifted_nominal_rhs(net, state.z_tilde, i_shift);

  Eigen::VectorXd z(2 * n);
  z.head(n) = state.z_tilde.head(n) + net.model.rated_voltage;
  z.tail(n) = state.z_tilde.tail(n);
  dot.e = error_rhs(net, state.e, z, dist, gains.K);

  integrator_rhs(gains, state.z_tilde, refs, state.sigma_d, state.sigma_q,
                 dot.sigma_d, dot.sigma_q);
  return dot;
}

Eigen::VectorXd reconstruct_true(const CascadeState& state,
                                 const Eigen::VectorXd& rated_voltage) {
  const int n = static_cast<int>(rated_voltage.size());
  Eigen::VectorXd v = state.e + state.z_tilde;
  v.head(n) += rated_voltage;
  return v;
}

Eigen::VectorXd pack_cascade(const CascadeState& state) {
  const int n = static_cast<int>(state.sigma_d.size());
  Eigen::VectorXd flat(6 * n);
  flat << state.z_tilde, state.e, state.sigma_d, state.sigma_q;
  return flat;
}

CascadeState unpack_cascade(const Eigen::VectorXd& flat, int nodes) {
  CascadeState s;
  s.z_tilde = flat.segment(0, 2 * nodes);
  s.e = flat.segment(2 * nodes, 2 * nodes);
  s.sigma_d = flat.segment(4 * nodes, nodes);
  s.sigma_q = flat.segment(5 * nodes, nodes);
  return s;
}

}  // namespace tubegrid
