#include "tubegrid/control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tubegrid {

Eigen::VectorXd error_feedback(const Eigen::VectorXd& e,
                               const Eigen::VectorXd& K,
                               const Eigen::VectorXd& i_inj_nominal) {
  const int n = static_cast<int>(K.size());
  if (e.size() != 2 * n || i_inj_nominal.size() != 2 * n)
    throw std::invalid_argument("error_feedback: size mismatch");
  Eigen::VectorXd out = i_inj_nominal;
  for (int i = 0; i < n; ++i) {
    out(i) -= K(i) * e(i);
    out(n + i) -= K(i) * e(n + i);
  }
  return out;
}

Eigen::VectorXd nominal_feedback(const Network& net,
                                 const Eigen::VectorXd& z_tilde,
                                 const Eigen::VectorXd& sigma_d,
                                 const Eigen::VectorXd& sigma_q,
                                 const GainSet& gains) {
  const int n = net.n();
  const double w = net.model.grid_frequency;
  Eigen::VectorXd inj(2 * n);
  for (int i = 0; i < n; ++i) {
    const double zd = z_tilde(i) + net.model.rated_voltage(i);
    const Eigen::Vector2d g = cpl_current({zd, z_tilde(n + i)},
                                          net.model.load_p(i),
                                          net.model.load_q(i));
    inj(i) = -gains.K_d(i) * z_tilde(i) + gains.M(i) * sigma_d(i);
    // Cancelling the rotation of the d voltage and the reactive load
    // leaves the q channel linear in (z_tilde_q, sigma_q).
    inj(n + i) = -gains.K_q(i) * z_tilde(n + i) + sigma_q(i) +
                 w * net.model.capacitance(i) * zd + g.y();
  }
  return inj;
}

void integrator_rhs(const GainSet& gains, const Eigen::VectorXd& z_tilde,
                    const Eigen::VectorXd& refs,
                    const Eigen::VectorXd& sigma_d,
                    const Eigen::VectorXd& sigma_q,
                    Eigen::VectorXd& sigma_d_dot,
                    Eigen::VectorXd& sigma_q_dot) {
  const int n = static_cast<int>(sigma_d.size());
  sigma_d_dot.resize(n);
  sigma_q_dot.resize(n);
  for (int i = 0; i < n; ++i) {
    sigma_d_dot(i) = gains.k_Id(i) * (1.0 - sigma_d(i) * sigma_d(i)) *
                     (refs(i) - z_tilde(i));
    sigma_q_dot(i) = -gains.k_Iq(i) * z_tilde(n + i);
  }
}

double cpl_stability_bound(double p, double z_hat) {
  if (!(z_hat > 0.0)) throw std::invalid_argument("z_hat must be positive");
  return 2.0 * p / (3.0 * z_hat * z_hat);
}

double saturation_stability_bound(double p, double rated, double z_tilde_m,
                                  double delta) {
  const double z_floor = rated - z_tilde_m - delta;
  if (!(delta > 0.0) || !(z_floor > 0.0))
    throw std::invalid_argument("saturation bound needs delta > 0 and a positive voltage floor");
  return 2.0 * p / (3.0 * delta * z_floor);
}

ErrorGainDesign design_error_gain(const NetworkModel& model,
                                  const Eigen::VectorXd& e_bar,
                                  const Eigen::VectorXd& z_lo,
                                  const Eigen::VectorXd& z_hi, double safety,
                                  int grid_points, double min_gain) {
  const int n = model.nodes;
  if (e_bar.size() != n || z_lo.size() != n || z_hi.size() != n)
    throw std::invalid_argument("design_error_gain: size mismatch");
  if (grid_points < 2) throw std::invalid_argument("grid_points must be >= 2");
  ErrorGainDesign design;
  design.K.resize(n);
  design.requirement.resize(n);
  for (int i = 0; i < n; ++i) {
    const double floor = nominal_voltage_floor(e_bar(i));
    if (!(z_lo(i) > floor))
      throw std::invalid_argument(
          "design_error_gain: nominal interval reaches below the safe floor "
          "on node " + std::to_string(i));
    double worst = 0.0;
    for (int k = 0; k < grid_points; ++k) {
      const double z =
          z_lo(i) + (z_hi(i) - z_lo(i)) * k / double(grid_points - 1);
      worst = std::max(worst, error_gain_requirement(
                                  e_bar(i), z, model.load_p(i),
                                  model.load_q(i), model.dp_max(i),
                                  model.dq_max(i)));
    }
    design.requirement(i) = worst;
    design.K(i) = std::max(safety * worst, min_gain);
  }
  return design;
}

NominalGainDesign design_nominal_gains(const NetworkModel& model,
                                       const AutoDesignSpec& spec) {
  const int n = model.nodes;
  NominalGainDesign design;
  design.K_d.resize(n);
  design.M.resize(n);
  design.bound_interior.resize(n);
  design.bound_saturated.resize(n);
  for (int i = 0; i < n; ++i) {
    const double rated = model.rated_voltage(i);
    const double deep = rated - spec.z_tilde_m(i) - spec.delta(i);
    if (!(deep > 0.0))
      throw std::invalid_argument("excursion interval crosses zero voltage");
    // Worst linearised load slope at the deepest certified excursion, and
    // the slope that keeps a saturated node pulled back into range.
    design.bound_interior(i) =
        cpl_stability_bound(model.load_p(i), spec.z_tilde_m(i) + spec.delta(i));
    design.bound_saturated(i) = saturation_stability_bound(
        model.load_p(i), rated, spec.z_tilde_m(i), spec.delta(i));
    const double need =
        std::max(design.bound_interior(i), design.bound_saturated(i));
    design.K_d(i) = std::max(spec.safety * need, spec.min_gain);
    design.M(i) = spec.z_tilde_m(i) * design.K_d(i);
  }
  return design;
}

DesignResult design_all(const Network& net, const AutoDesignSpec& spec) {
  const NetworkModel& model = net.model;
  const int n = model.nodes;
  if (spec.e_bar.size() != n || spec.z_tilde_m.size() != n ||
      spec.delta.size() != n)
    throw std::invalid_argument("design_all: spec size mismatch");

  DesignResult result;

  GainSet gains;
  gains.e_bar = spec.e_bar;
  gains.z_tilde_m = spec.z_tilde_m;
  gains.delta = spec.delta;
  // Placeholders so the set-geometry checks can run before sizing; the
  // stub keeps M = z_tilde_m * K_d with K_d = 1.
  gains.K = gains.K_d = gains.K_q = Eigen::VectorXd::Ones(n);
  gains.k_Id = gains.k_Iq = Eigen::VectorXd::Ones(n);
  gains.M = spec.z_tilde_m;

  Certificate range = nominal_range_check(model, gains);
  Certificate inclusion = set_inclusion_check(model, gains);
  result.certificates.push_back(range);
  result.certificates.push_back(inclusion);
  if (!range.pass || !inclusion.pass) return result;  // fail closed

  const Eigen::VectorXd z_lo =
      model.rated_voltage - spec.z_tilde_m - spec.delta;
  const Eigen::VectorXd z_hi = model.rated_voltage + spec.z_tilde_m;
  ErrorGainDesign err = design_error_gain(model, spec.e_bar, z_lo, z_hi,
                                          spec.safety, spec.grid_points,
                                          spec.min_gain);
  NominalGainDesign nom = design_nominal_gains(model, spec);

  gains.K = err.K;
  gains.K_d = nom.K_d;
  gains.M = nom.M;
  gains.K_q = spec.K_q.size() ? spec.K_q : nom.K_d;
  gains.k_Id =
      spec.k_Id.size() ? spec.k_Id : Eigen::VectorXd::Constant(n, 50.0);
  gains.k_Iq =
      spec.k_Iq.size() ? spec.k_Iq : Eigen::VectorXd::Constant(n, 50.0);
  validate_gains(gains, n);

  Certificate sizing;
  sizing.name = "gain_sizing";
  sizing.pass = true;
  sizing.margin = (gains.K - err.requirement).minCoeff();
  sizing.witness = {{"K", std::vector<double>(gains.K.data(), gains.K.data() + n)},
                    {"K_d", std::vector<double>(gains.K_d.data(), gains.K_d.data() + n)},
                    {"requirement", std::vector<double>(err.requirement.data(),
                                                        err.requirement.data() + n)}};
  result.certificates.push_back(sizing);
  result.gains = std::move(gains);
  return result;
}

}  // namespace tubegrid
