#pragma once

#include <filesystem>
#include <string>

#include "tubegrid/certify.hpp"
#include "tubegrid/gains.hpp"
#include "tubegrid/network.hpp"
#include "tubegrid/sim.hpp"

namespace tubegrid {

/// Long-form per-node samples, one row per (time, node):
/// t,node,v_d,v_q,v_rms,z_d,z_q,sigma_d,sigma_q,e_norm,b,dP,dQ
/// Numbers print with %.17g so replays are byte-identical.
void write_trajectory_csv(const std::filesystem::path& path,
                          const Trajectory& traj,
                          const Eigen::VectorXd& rated_voltage,
                          int stride = 1);

void write_certificates_json(const std::filesystem::path& path,
                             const CertificateBundle& bundle);

void write_gains_json(const std::filesystem::path& path, const GainSet& gains);

void write_report_json(const std::filesystem::path& path,
                       const SimReport& report);

/// Gnuplot-friendly two-column dumps, one file per node and quantity:
/// voltage magnitude (with the operating-disk limits in the header),
/// d integrator, barrier value and the applied disturbances.
void write_plot_series(const std::filesystem::path& dir,
                       const Trajectory& traj,
                       const NodeSets* sets = nullptr, int stride = 10);

std::string format_certificates(const CertificateBundle& bundle);

}  // namespace tubegrid
