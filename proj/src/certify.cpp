#include "tubegrid/certify.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "tubegrid/control.hpp"
#include "tubegrid/rng.hpp"

namespace tubegrid {

bool CertificateBundle::all_pass() const {
  for (const auto& c : certificates)
    if (!c.informative && !c.pass) return false;
  return !certificates.empty();
}

const Certificate* CertificateBundle::find(const std::string& name) const {
  for (const auto& c : certificates)
    if (c.name == name) return &c;
  return nullptr;
}

nlohmann::json CertificateBundle::to_json() const {
  nlohmann::json out;
  out["all_pass"] = all_pass();
  out["certificates"] = nlohmann::json::array();
  for (const auto& c : certificates)
    out["certificates"].push_back({{"name", c.name},
                                   {"pass", c.pass},
                                   {"informative", c.informative},
                                   {"margin", c.margin},
                                   {"witness", c.witness}});
  if (!annotations.is_null()) out["annotations"] = annotations;
  return out;
}

double nominal_voltage_floor(double e_bar) {
  if (e_bar < 0.0) throw std::invalid_argument("e_bar must be non-negative");
  return e_bar + std::sqrt(e_bar);
}

double error_gain_requirement(double e_bar, double z_d, double p, double q,
                              double dp_max, double dq_max) {
  const double den = (e_bar - z_d) * (e_bar - z_d) - e_bar;
  if (!(den > 0.0))
    throw std::invalid_argument(
        "gain requirement undefined: voltage too close to the error ball");
  const double num = ((1.0 + z_d) / z_d) * p + 2.0 * q +
                     ((e_bar + z_d) / e_bar) * dp_max +
                     (z_d / e_bar) * dq_max;
  return num / (3.0 * den);
}

std::pair<double, double> alpha_eval(const Eigen::Vector2d& e, double z_d,
                                     double K, double p, double q, double dp,
                                     double dq) {
  const double ed = e.x(), eq = e.y();
  const double z2 = z_d * z_d, z3 = z2 * z_d;
  // Transcribed exactly as printed; kept as a diagnostic because the
  // sampled boundary check is the authoritative test.
  const double nom =
      std::pow(ed, 4) * (-3.0 * K * z_d) +
      std::pow(ed, 3) * (-6.0 * K * z2 + 2.0 * p) +
      ed * ed * eq * eq * (-3.0 * K * z_d) +
      ed * ed * eq * (-3.0 * K * z_d + 2.0 * q) +
      ed * ed * (-3.0 * K * z3 + 2.0 * p * z_d - 2.0 * dp * z_d) +
      ed * eq * eq * (-6.0 * K * z2 + 2.0 * p) +
      ed * eq * (-4.0 * q * z_d) +
      eq * eq * (-3.0 * K * z3 - 2.0 * p * z_d - 2.0 * dp * z_d) +
      std::pow(eq, 3) * (-3.0 * K * z_d - 2.0 * q) +
      ed * (-2.0 * dp * z2) + eq * (2.0 * dq * z2);
  const double den = z_d * ((ed + z_d) * (ed + z_d) + ed);
  return {nom, den};
}

Certificate nominal_range_check(const NetworkModel& model,
                                const GainSet& gains) {
  Certificate cert;
  cert.name = "nominal_range_floor";
  const NodeSets sets = node_sets(model, gains);
  double worst = std::numeric_limits<double>::infinity();
  int worst_node = -1;
  for (int i = 0; i < model.nodes; ++i) {
    const double z_min = model.rated_voltage(i) + sets.z_lo(i);
    const double slack = z_min - nominal_voltage_floor(gains.e_bar(i));
    if (slack < worst) {
      worst = slack;
      worst_node = i;
    }
  }
  cert.margin = worst;
  cert.pass = worst > 0.0;
  cert.witness = {{"node", worst_node + 1},
                  {"floor", nominal_voltage_floor(gains.e_bar(worst_node))},
                  {"z_min", model.rated_voltage(worst_node) + sets.z_lo(worst_node)}};

  // Positivity of the diagnostic denominator over the error ball and the
  // nominal range, sampled; a sign flip here would contradict the floor.
  double den_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < model.nodes && cert.pass; ++i) {
    const double r = sets.e_radius(i);
    for (int a = 0; a < 24; ++a) {
      const double th = 2.0 * kPi * a / 24.0;
      for (int k = 0; k < 11; ++k) {
        const double z = model.rated_voltage(i) + sets.z_lo(i) +
                         (sets.z_hi(i) - sets.z_lo(i)) * k / 10.0;
        const double den =
            alpha_eval({r * std::cos(th), r * std::sin(th)}, z, 1.0, 0, 0, 0, 0)
                .second;
        den_min = std::min(den_min, den);
      }
    }
  }
  if (cert.pass && !(den_min > 0.0)) {
    cert.pass = false;
    cert.margin = den_min;
    cert.witness["den_min"] = den_min;
  }
  return cert;
}

Certificate set_inclusion_check(const NetworkModel& model,
                                const GainSet& gains) {
  Certificate cert;
  cert.name = "set_inclusion";
  const NodeSets sets = node_sets(model, gains);
  double worst = std::numeric_limits<double>::infinity();
  int worst_node = -1;
  bool worst_upper = true;
  for (int i = 0; i < model.nodes; ++i) {
    const double rated = model.rated_voltage(i);
    const double upper = (sets.v_center_d(i) + sets.v_radius(i)) -
                         (rated + sets.z_hi(i) + sets.e_radius(i));
    const double lower = (rated + sets.z_lo(i) - sets.e_radius(i)) -
                         (sets.v_center_d(i) - sets.v_radius(i));
    if (upper < worst) { worst = upper; worst_node = i; worst_upper = true; }
    if (lower < worst) { worst = lower; worst_node = i; worst_upper = false; }
  }
  cert.margin = worst;
  cert.pass = worst > 0.0;
  cert.witness = {{"node", worst_node + 1},
                  {"side", worst_upper ? "upper" : "lower"}};
  return cert;
}

Certificate error_invariance_check(const Network& net, const GainSet& gains,
                                   const BoundaryCheckOptions& opts) {
  Certificate cert;
  cert.name = "error_invariance";
  const int n = net.n();
  const NodeSets sets = node_sets(net.model, gains);

  // Disturbance fractions: the disturbance enters each node's inner
  // product linearly, so the box extremes are the exact worst cases; the
  // random interior draws are confirmation only.
  std::vector<std::pair<double, double>> fractions = {
      {1.0, 1.0}, {1.0, -1.0}, {-1.0, 1.0}, {-1.0, -1.0}};
  for (int s = 0; s < opts.random_disturbances; ++s) {
    const std::uint64_t h = hash_mix(opts.seed, 0x6469737455ull + s);
    fractions.emplace_back(signed_unit(h), signed_unit(splitmix64(h)));
  }

  double max_q = -std::numeric_limits<double>::infinity();
  nlohmann::json witness;
  Eigen::VectorXd e(2 * n), z(2 * n);
  z.tail(n).setZero();
  LoadDisturbance dist;
  dist.dp.resize(n);
  dist.dq.resize(n);

  try {
    for (int k = 0; k < opts.z_samples; ++k) {
      const double frac =
          opts.z_samples > 1 ? double(k) / (opts.z_samples - 1) : 0.0;
      for (int i = 0; i < n; ++i)
        z(i) = net.model.rated_voltage(i) + sets.z_lo(i) +
               frac * (sets.z_hi(i) - sets.z_lo(i));
      for (int a = 0; a < opts.boundary_points; ++a) {
        const double th = 2.0 * kPi * a / opts.boundary_points;
        const double c = std::cos(th), s = std::sin(th);
        // Placing every node's error at the same angle and full radius is
        // the worst case for the coupling term: any other neighbour error
        // makes e_i' (e_i - e_j) larger.
        for (int i = 0; i < n; ++i) {
          e(i) = sets.e_radius(i) * c;
          e(n + i) = sets.e_radius(i) * s;
        }
        for (const auto& [fd, fq] : fractions) {
          dist.dp = fd * net.model.dp_max;
          dist.dq = fq * net.model.dq_max;
          const Eigen::VectorXd edot =
              error_rhs(net, e, z, dist, gains.K);
          for (int i = 0; i < n; ++i) {
            const double q = 2.0 * (e(i) * edot(i) + e(n + i) * edot(n + i));
            if (q > max_q) {
              max_q = q;
              witness = {{"node", i + 1}, {"angle", th},
                         {"z_d", z(i)},  {"dp_fraction", fd},
                         {"dq_fraction", fq}};
            }
          }
        }
      }
    }
  } catch (const CplSingularity& ex) {
    cert.pass = false;
    cert.margin = -std::numeric_limits<double>::infinity();
    cert.witness = {{"error", ex.what()}};
    return cert;
  }

  cert.margin = -max_q;
  cert.pass = max_q < 0.0;
  cert.witness = witness;
  return cert;
}

namespace {

// d-axis stationarity residual and its Jacobian on the (z_tilde, sigma)
// unknowns, with pinned nodes' sigma held fixed and their integrator
// equation dropped.
struct EquilibriumSystem {
  const Network& net;
  const GainSet& gains;
  const Eigen::VectorXd& refs;
  std::vector<int> pinned;          // +1 / -1 per node, 0 = free
  std::vector<int> free_nodes;

  EquilibriumSystem(const Network& net_, const GainSet& gains_,
                    const Eigen::VectorXd& refs_, std::vector<int> pins)
      : net(net_), gains(gains_), refs(refs_), pinned(std::move(pins)) {
    for (int i = 0; i < net.n(); ++i)
      if (pinned[i] == 0) free_nodes.push_back(i);
  }

  int unknowns() const { return net.n() + static_cast<int>(free_nodes.size()); }

  Eigen::VectorXd residual(const Eigen::VectorXd& z,
                           const Eigen::VectorXd& sigma) const {
    const int n = net.n();
    Eigen::VectorXd f(unknowns());
    const Eigen::VectorXd coupling = net.laplacian * z;
    for (int i = 0; i < n; ++i) {
      const double zd = z(i) + net.model.rated_voltage(i);
      const Eigen::Vector2d g =
          cpl_current({zd, 0.0}, net.model.load_p(i), net.model.load_q(i));
      f(i) = (-gains.K_d(i) * z(i) + gains.M(i) * sigma(i) - coupling(i) -
              g.x()) /
             net.model.capacitance(i);
    }
    for (int k = 0; k < static_cast<int>(free_nodes.size()); ++k) {
      const int i = free_nodes[k];
      f(n + k) = gains.k_Id(i) * (1.0 - sigma(i) * sigma(i)) *
                 (refs(i) - z(i));
    }
    return f;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& z,
                           const Eigen::VectorXd& sigma) const {
    const int n = net.n();
    const int nf = static_cast<int>(free_nodes.size());
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(unknowns(), unknowns());
    for (int i = 0; i < n; ++i) {
      const double zd = z(i) + net.model.rated_voltage(i);
      const double slope = 2.0 * net.model.load_p(i) / (3.0 * zd * zd);
      for (int j = 0; j < n; ++j)
        jac(i, j) = (-net.laplacian(i, j) +
                     (i == j ? -gains.K_d(i) + slope : 0.0)) /
                    net.model.capacitance(i);
      for (int k = 0; k < nf; ++k)
        if (free_nodes[k] == i)
          jac(i, n + k) = gains.M(i) / net.model.capacitance(i);
    }
    for (int k = 0; k < nf; ++k) {
      const int i = free_nodes[k];
      jac(n + k, i) = -gains.k_Id(i) * (1.0 - sigma(i) * sigma(i));
      jac(n + k, n + k) = -2.0 * gains.k_Id(i) * sigma(i) * (refs(i) - z(i));
    }
    return jac;
  }
};

bool newton_solve(const EquilibriumSystem& sys, Eigen::VectorXd& z,
                  Eigen::VectorXd& sigma, double tol, int max_iter) {
  const int n = static_cast<int>(z.size());
  Eigen::VectorXd f = sys.residual(z, sigma);
  for (int it = 0; it < max_iter; ++it) {
    if (f.lpNorm<Eigen::Infinity>() < tol) return true;
    const Eigen::VectorXd step =
        sys.jacobian(z, sigma).partialPivLu().solve(-f);
    double alpha = 1.0;
    for (int bt = 0; bt < 40; ++bt) {
      Eigen::VectorXd z_try = z;
      Eigen::VectorXd s_try = sigma;
      for (int i = 0; i < n; ++i) z_try(i) += alpha * step(i);
      for (int k = 0; k < static_cast<int>(sys.free_nodes.size()); ++k)
        s_try(sys.free_nodes[k]) += alpha * step(n + k);
      Eigen::VectorXd f_try;
      try {
        f_try = sys.residual(z_try, s_try);
      } catch (const CplSingularity&) {
        alpha *= 0.5;
        continue;
      }
      if (f_try.lpNorm<Eigen::Infinity>() <
              (1.0 - 1e-4 * alpha) * f.lpNorm<Eigen::Infinity>() ||
          bt == 39) {
        z = z_try;
        sigma = s_try;
        f = f_try;
        break;
      }
      alpha *= 0.5;
    }
  }
  return f.lpNorm<Eigen::Infinity>() < tol;
}

}  // namespace

EquilibriumPoint solve_equilibrium(const Network& net, const GainSet& gains,
                                   const Eigen::VectorXd& refs) {
  const int n = net.n();
  if (refs.size() != n)
    throw std::invalid_argument("solve_equilibrium: reference size mismatch");
  validate_gains(gains, n);

  std::vector<int> pins(n, 0);
  EquilibriumPoint point;
  for (int round = 0; round <= n; ++round) {
    EquilibriumSystem sys(net, gains, refs, pins);
    Eigen::VectorXd z = refs;
    Eigen::VectorXd sigma = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i)
      if (pins[i] != 0) sigma(i) = pins[i];

    const bool ok = newton_solve(sys, z, sigma, 1e-9, 100);
    bool grew = false;
    for (int i = 0; i < n; ++i)
      if (pins[i] == 0 && std::abs(sigma(i)) > 1.0) {
        pins[i] = sigma(i) > 0.0 ? 1 : -1;
        grew = true;
      }
    if (grew && ok) continue;

    point.z_hat = z;
    point.sigma_hat = sigma;
    point.residual = sys.residual(z, sigma).lpNorm<Eigen::Infinity>();
    point.converged = ok && point.residual < 1e-8;
    for (int i = 0; i < n; ++i)
      if (pins[i] != 0) point.saturated.push_back(i);
    return point;
  }
  return point;  // unreachable: pins grow at most n times
}

Eigen::MatrixXd build_jacobian(const Network& net, const GainSet& gains,
                               const EquilibriumPoint& eq) {
  const int n = net.n();
  if (!eq.saturated.empty())
    throw std::invalid_argument(
        "build_jacobian: equilibrium has saturated integrators");
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(4 * n, 4 * n);
  const Eigen::VectorXd& c = net.model.capacitance;
  const double w = net.model.grid_frequency;

  for (int i = 0; i < n; ++i) {
    const double z_hat = eq.z_hat(i) + net.model.rated_voltage(i);
    const double slope_p = 2.0 * net.model.load_p(i) / (3.0 * z_hat * z_hat);
    const double slope_q = 2.0 * net.model.load_q(i) / (3.0 * z_hat * z_hat);
    for (int j = 0; j < n; ++j) {
      jac(i, j) = (-net.laplacian(i, j) +
                   (i == j ? -gains.K_d(i) + slope_p : 0.0)) / c(i);
      jac(2 * n + i, 2 * n + j) =
          (-net.laplacian(i, j) + (i == j ? -gains.K_q(i) : 0.0)) / c(i);
    }
    jac(i, n + i) = gains.M(i) / c(i);
    // Rotation couples d to q; the load linearisation adds the reactive
    // slope.  The reverse coupling cancels against the feedback exactly,
    // which keeps the d and q blocks one-way coupled.
    jac(i, 2 * n + i) = w - slope_q / c(i);
    jac(n + i, i) =
        -gains.k_Id(i) * (1.0 - eq.sigma_hat(i) * eq.sigma_hat(i));
    jac(2 * n + i, 3 * n + i) = 1.0 / c(i);
    jac(3 * n + i, 2 * n + i) = -gains.k_Iq(i);
  }
  return jac;
}

Certificate hurwitz_check(const Eigen::MatrixXd& jacobian) {
  Certificate cert;
  cert.name = "nominal_hurwitz";
  const Eigen::EigenSolver<Eigen::MatrixXd> solver(jacobian);
  if (solver.info() != Eigen::Success) {
    cert.pass = false;
    cert.margin = -std::numeric_limits<double>::infinity();
    cert.witness = {{"error", "eigenvalue solver failed"}};
    return cert;
  }
  double max_real = -std::numeric_limits<double>::infinity();
  int arg = 0;
  for (int i = 0; i < solver.eigenvalues().size(); ++i)
    if (solver.eigenvalues()(i).real() > max_real) {
      max_real = solver.eigenvalues()(i).real();
      arg = i;
    }
  cert.margin = -max_real;
  cert.pass = cert.margin > 0.0;
  cert.witness = {{"max_real", max_real},
                  {"eigenvalue", {solver.eigenvalues()(arg).real(),
                                  solver.eigenvalues()(arg).imag()}}};
  return cert;
}

CertificateBundle certify_all(const Network& net, const GainSet& gains,
                              const Eigen::VectorXd& refs) {
  CertificateBundle bundle;
  const NetworkModel& model = net.model;
  const int n = net.n();

  Certificate range = nominal_range_check(model, gains);
  bundle.certificates.push_back(range);

  if (range.pass) {
    bundle.certificates.push_back(error_invariance_check(net, gains));
  } else {
    Certificate skipped;
    skipped.name = "error_invariance";
    skipped.pass = false;
    skipped.margin = -std::numeric_limits<double>::infinity();
    skipped.witness = {{"error", "nominal range floor failed"}};
    bundle.certificates.push_back(skipped);
  }

  bundle.certificates.push_back(set_inclusion_check(model, gains));

  EquilibriumPoint eq = solve_equilibrium(net, gains, refs);
  Certificate eq_cert;
  eq_cert.name = "nominal_equilibrium";
  eq_cert.pass = eq.converged && eq.saturated.empty();
  eq_cert.margin = eq.saturated.empty()
                       ? (1.0 - eq.sigma_hat.cwiseAbs().maxCoeff())
                       : 0.0;
  eq_cert.witness = {
      {"residual", eq.residual},
      {"sigma_hat", std::vector<double>(eq.sigma_hat.data(),
                                        eq.sigma_hat.data() + n)},
      {"saturated_nodes", [&] {
         std::vector<int> out;
         for (int i : eq.saturated) out.push_back(i + 1);
         return out;
       }()}};
  bundle.certificates.push_back(eq_cert);

  Certificate hurwitz;
  Certificate cpl_margin;
  cpl_margin.name = "cpl_linear_margin";
  cpl_margin.informative = true;
  Certificate qep;
  qep.name = "qep_coefficients";
  qep.informative = true;
  if (eq_cert.pass) {
    const Eigen::MatrixXd jac = build_jacobian(net, gains, eq);
    hurwitz = hurwitz_check(jac);

    double worst = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd a_block = net.laplacian;
    Eigen::VectorXd b_diag(n);
    for (int i = 0; i < n; ++i) {
      const double z_hat = eq.z_hat(i) + model.rated_voltage(i);
      const double slope = 2.0 * model.load_p(i) / (3.0 * z_hat * z_hat);
      worst = std::min(worst, gains.K_d(i) - slope);
      a_block(i, i) += gains.K_d(i) - slope;
      b_diag(i) = gains.M(i) * gains.k_Id(i) *
                  (1.0 - eq.sigma_hat(i) * eq.sigma_hat(i));
    }
    cpl_margin.margin = worst;
    cpl_margin.pass = worst > 0.0;

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> a_eigs(a_block);
    qep.margin = std::min(a_eigs.eigenvalues().minCoeff(), b_diag.minCoeff());
    qep.pass = qep.margin > 0.0;
  } else {
    hurwitz.name = "nominal_hurwitz";
    hurwitz.pass = false;
    hurwitz.margin = -std::numeric_limits<double>::infinity();
    hurwitz.witness = {{"error", "no interior equilibrium"}};
    cpl_margin.pass = false;
    cpl_margin.margin = 0.0;
    qep.pass = false;
    qep.margin = 0.0;
  }
  bundle.certificates.push_back(hurwitz);
  bundle.certificates.push_back(cpl_margin);
  bundle.certificates.push_back(qep);

  if (bundle.all_pass()) {
    const NodeSets sets = node_sets(model, gains);
    bundle.annotations = {
        {"region_of_attraction",
         {{"kind", "interior of the per-node operating disks"},
          {"v_center_d", std::vector<double>(sets.v_center_d.data(),
                                             sets.v_center_d.data() + n)},
          {"v_radius", std::vector<double>(sets.v_radius.data(),
                                           sets.v_radius.data() + n)}}}};
  }
  return bundle;
}

}  // namespace tubegrid
