#include "tubegrid/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tubegrid {

namespace {

struct FileHandle {
  std::FILE* f;
  explicit FileHandle(const std::filesystem::path& path)
      : f(std::fopen(path.string().c_str(), "wb")) {
    if (!f) throw std::runtime_error("cannot write " + path.string());
  }
  ~FileHandle() {
    if (f) std::fclose(f);
  }
  FileHandle(const FileHandle&) = delete;
  FileHandle& operator=(const FileHandle&) = delete;
};

// %.17g keeps doubles bit-exact through a parse round-trip, which is what
// makes replayed runs byte-identical.
void put(std::FILE* f, double x) { std::fprintf(f, "%.17g", x); }

void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace

void write_trajectory_csv(const std::filesystem::path& path,
                          const Trajectory& traj,
                          const Eigen::VectorXd& rated_voltage, int stride) {
  if (stride < 1) stride = 1;
  FileHandle out(path);
  std::fputs(
      "t,node,v_d,v_q,v_rms,z_d,z_q,sigma_d,sigma_q,e_norm,b,dP,dQ\n",
      out.f);
  const int n = traj.nodes();
  for (int s = 0; s < traj.samples(); s += stride) {
    for (int i = 0; i < n; ++i) {
      const double vd = traj.v(i, s), vq = traj.v(n + i, s);
      const double zd = traj.z_tilde(i, s) + rated_voltage(i);
      const double zq = traj.z_tilde(n + i, s);
      const double ed = traj.e(i, s), eq = traj.e(n + i, s);
      put(out.f, traj.times[s]);
      std::fprintf(out.f, ",%d,", i + 1);
      put(out.f, vd);  std::fputc(',', out.f);
      put(out.f, vq);  std::fputc(',', out.f);
      put(out.f, std::hypot(vd, vq)); std::fputc(',', out.f);
      put(out.f, zd);  std::fputc(',', out.f);
      put(out.f, zq);  std::fputc(',', out.f);
      put(out.f, traj.sigma_d(i, s)); std::fputc(',', out.f);
      put(out.f, traj.sigma_q(i, s)); std::fputc(',', out.f);
      put(out.f, std::hypot(ed, eq)); std::fputc(',', out.f);
      put(out.f, traj.barrier(i, s)); std::fputc(',', out.f);
      put(out.f, traj.dp(i, s)); std::fputc(',', out.f);
      put(out.f, traj.dq(i, s));
      std::fputc('\n', out.f);
    }
  }
}

void write_certificates_json(const std::filesystem::path& path,
                             const CertificateBundle& bundle) {
  write_json_file(path, bundle.to_json());
}

void write_gains_json(const std::filesystem::path& path,
                      const GainSet& gains) {
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  write_json_file(path, nlohmann::json{{"K", vec(gains.K)},
                                       {"K_d", vec(gains.K_d)},
                                       {"K_q", vec(gains.K_q)},
                                       {"M", vec(gains.M)},
                                       {"k_Id", vec(gains.k_Id)},
                                       {"k_Iq", vec(gains.k_Iq)},
                                       {"e_bar", vec(gains.e_bar)},
                                       {"z_tilde_m", vec(gains.z_tilde_m)},
                                       {"delta", vec(gains.delta)}});
}

void write_report_json(const std::filesystem::path& path,
                       const SimReport& report) {
  write_json_file(path, report.to_json());
}

void write_plot_series(const std::filesystem::path& dir,
                       const Trajectory& traj, const NodeSets* sets,
                       int stride) {
  if (stride < 1) stride = 1;
  std::filesystem::create_directories(dir);
  const int n = traj.nodes();
  auto series = [&](const std::string& name, int node,
                    auto value, const std::string& header) {
    FileHandle out(dir / (name + "_node" + std::to_string(node + 1) + ".dat"));
    if (!header.empty()) std::fprintf(out.f, "# %s\n", header.c_str());
    for (int s = 0; s < traj.samples(); s += stride) {
      put(out.f, traj.times[s]);
      std::fputc(' ', out.f);
      put(out.f, value(node, s));
      std::fputc('\n', out.f);
    }
  };
  for (int i = 0; i < n; ++i) {
    std::string v_header = "voltage magnitude (V)";
    if (sets) {
      std::ostringstream lim;
      lim.precision(17);
      lim << "voltage magnitude (V); limits ["
          << sets->v_center_d(i) - sets->v_radius(i) << ", "
          << sets->v_center_d(i) + sets->v_radius(i) << "]";
      v_header = lim.str();
    }
    series("v_rms", i,
           [&](int node, int s) {
             return std::hypot(traj.v(node, s), traj.v(n + node, s));
           },
           v_header);
    series("sigma_d", i,
           [&](int node, int s) { return traj.sigma_d(node, s); },
           "d-axis integrator state");
    series("barrier", i,
           [&](int node, int s) { return traj.barrier(node, s); },
           "safe-set barrier value (V^2)");
    series("dp", i, [&](int node, int s) { return traj.dp(node, s); },
           "active power disturbance (W)");
    series("dq", i, [&](int node, int s) { return traj.dq(node, s); },
           "reactive power disturbance (var)");
  }
}

std::string format_certificates(const CertificateBundle& bundle) {
  std::ostringstream os;
  for (const auto& c : bundle.certificates) {
    os << "  " << (c.pass ? "PASS" : "FAIL") << "  ";
    os.setf(std::ios::left);
    os.width(24);
    os << c.name;
    os.unsetf(std::ios::left);
    os << " margin ";
    os.precision(6);
    os << c.margin;
    if (c.informative) os << "  (informative)";
    os << "\n";
  }
  os << (bundle.all_pass() ? "all certificates pass"
                           : "certificate failure");
  os << "\n";
  return os.str();
}

}  // namespace tubegrid
