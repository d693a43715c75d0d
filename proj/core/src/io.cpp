#include "safelqr/io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace safelqr {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << std::setprecision(17);
  return out;
}

void put_vector(std::ostream& out, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ',' << v(i);
}

void put_blank(std::ostream& out, Eigen::Index count) {
  for (Eigen::Index i = 0; i < count; ++i) out << ',';
}

}  // namespace

void ensure_dir(const std::string& dir) { std::filesystem::create_directories(dir); }

void write_text(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  require_domain(!traj.x.empty(), "empty trajectory");
  const Eigen::Index n = traj.x.front().size();
  const Eigen::Index d = traj.u.empty() ? 0 : traj.u.front().size();
  auto out = open_out(path);
  out << 'k';
  for (Eigen::Index i = 0; i < n; ++i) out << ",x" << i;
  for (Eigen::Index i = 0; i < d; ++i) out << ",u" << i;
  for (Eigen::Index i = 0; i < d; ++i) out << ",eta" << i;
  for (Eigen::Index i = 0; i < n; ++i) out << ",w" << i;
  out << '\n';
  for (size_t k = 0; k < traj.x.size(); ++k) {
    out << k;
    put_vector(out, traj.x[k]);
    if (k < traj.u.size()) {
      put_vector(out, traj.u[k]);
      put_vector(out, traj.eta[k]);
      put_vector(out, traj.w[k]);
    } else {
      put_blank(out, 2 * d + n);
    }
    out << '\n';
  }
}

void write_response_csv(const std::string& path, const FirResponse& phi) {
  auto out = open_out(path);
  out << "k,i,j,value\n";
  for (int k = 1; k <= phi.length(); ++k) {
    for (int i = 0; i < phi.rows(); ++i) {
      for (int j = 0; j < phi.cols(); ++j) out << k << ',' << i << ',' << j << ',' << phi[k](i, j) << '\n';
    }
  }
}

FirResponse read_response_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);
  struct Entry {
    int k, i, j;
    double v;
  };
  std::vector<Entry> entries;
  int L = 0, p = 0, q = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    Entry e{};
    if (!(ls >> e.k >> e.i >> e.j >> e.v)) throw std::runtime_error("malformed response row in '" + path + "'");
    require_domain(e.k >= 1 && e.i >= 0 && e.j >= 0, "response indices out of range in '" + path + "'");
    L = std::max(L, e.k);
    p = std::max(p, e.i + 1);
    q = std::max(q, e.j + 1);
    entries.push_back(e);
  }
  require_domain(L > 0, "empty response file '" + path + "'");
  FirResponse phi = FirResponse::zeros(L, p, q);
  for (const Entry& e : entries) phi[e.k](e.i, e.j) = e.v;
  return phi;
}

std::string synthesis_report(const SynthesisResult& r) {
  std::ostringstream out;
  out << std::setprecision(12);
  const Certificates& c = r.certificates;
  out << "status: " << to_string(r.status) << '\n'
      << "message: " << r.message << '\n'
      << "backend: " << to_string(r.backend) << '\n'
      << "lmi_active: " << (r.lmi_active ? "true" : "false") << '\n'
      << "gamma: " << r.gamma << '\n'
      << "tau: " << r.tau << '\n'
      << "nominal_cost: " << r.nominal_cost << '\n'
      << "robust_cost: " << r.robust_cost << '\n'
      << "solver_iterations: " << r.solver_iterations << '\n';
  if (r.feasible()) {
    out << "hinf_bound: " << c.hinf << '\n'
        << "hinf_total: " << c.hinf_total << '\n'
        << "l1: " << c.l1 << '\n'
        << "l1_total: " << c.l1_total << '\n'
        << "v_2: " << c.v_2 << '\n'
        << "v_inf: " << c.v_inf << '\n'
        << "affine_residual: " << c.affine_residual << '\n'
        << "state_slack: " << c.state_slack << '\n'
        << "input_slack: " << c.input_slack << '\n';
  }
  return out.str();
}

void write_search_csv(const std::string& path, const std::vector<SearchPoint>& points) {
  auto out = open_out(path);
  out << "gamma,tau,robust_cost,status\n";
  for (const auto& p : points) out << p.gamma << ',' << p.tau << ',' << p.robust_cost << ',' << to_string(p.status) << '\n';
}

void write_decay_csv(const std::string& path, const std::vector<DecayRow>& rows) {
  auto out = open_out(path);
  out << "T,epsA_q25,epsA_median,epsA_q75,epsB_q25,epsB_median,epsB_q75\n";
  for (const auto& r : rows) {
    out << r.T << ',' << r.eps_A_2.q25 << ',' << r.eps_A_2.median << ',' << r.eps_A_2.q75 << ',' << r.eps_B_2.q25
        << ',' << r.eps_B_2.median << ',' << r.eps_B_2.q75 << '\n';
  }
}

void write_tradeoff_csv(const std::string& path, const std::vector<TradeoffRow>& rows) {
  auto out = open_out(path);
  out << "eps,r_x,max_sigma_eta,probes\n";
  for (const auto& r : rows) out << r.eps << ',' << r.r_x << ',' << r.max_sigma_eta << ',' << r.probes << '\n';
}

void write_plot_script(const std::string& dir, PlotKind kind) {
  std::string name;
  std::string body;
  switch (kind) {
    case PlotKind::Trajectories:
      name = "plot_trajectories.py";
      body = R"(import glob, os
import matplotlib.pyplot as plt
import pandas as pd

here = os.path.dirname(os.path.abspath(__file__))
fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharex=True, sharey=True)
for ax, panel in zip(axes, "ab"):
    for path in sorted(glob.glob(os.path.join(here, f"traj_{panel}_*.csv"))):
        df = pd.read_csv(path)
        ax.plot(df["x0"], df["x1"], lw=0.8)
    ax.add_patch(plt.Rectangle((-8, -8), 16, 16, fill=False, ls="--", color="k"))
    ax.set_title(f"panel {panel}")
    ax.set_xlabel("position")
axes[0].set_ylabel("velocity")
fig.tight_layout()
fig.savefig(os.path.join(here, "trajectories.png"), dpi=150)
)";
      break;
    case PlotKind::Decay:
      name = "plot_decay.py";
      body = R"(import os
import matplotlib.pyplot as plt
import pandas as pd

here = os.path.dirname(os.path.abspath(__file__))
df = pd.read_csv(os.path.join(here, "decay.csv"))
fig, ax = plt.subplots(figsize=(5, 4))
for key, label in (("epsA", "A"), ("epsB", "B")):
    ax.plot(df["T"], df[f"{key}_median"], marker="o", label=label)
    ax.fill_between(df["T"], df[f"{key}_q25"], df[f"{key}_q75"], alpha=0.3)
ax.set_xscale("log")
ax.set_yscale("log")
ax.set_xlabel("T")
ax.set_ylabel("spectral error")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(here, "decay.png"), dpi=150)
)";
      break;
    case PlotKind::Tradeoff:
      name = "plot_tradeoff.py";
      body = R"(import os
import matplotlib.pyplot as plt
import pandas as pd

here = os.path.dirname(os.path.abspath(__file__))
df = pd.read_csv(os.path.join(here, "tradeoff.csv"))
fig, ax = plt.subplots(figsize=(5, 4))
for eps, group in df.groupby("eps"):
    ax.plot(group["r_x"], group["max_sigma_eta"], marker="o", label=f"eps = {eps:g}")
ax.set_xlabel("state bound")
ax.set_ylabel("largest feasible excitation")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(here, "tradeoff.png"), dpi=150)
)";
      break;
  }
  write_text((std::filesystem::path(dir) / name).string(), body);
}

}  // namespace safelqr
