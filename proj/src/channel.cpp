#include "starnoma/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace starnoma {

StarBeamMatrix StarBeamMatrix::uniform(const Topology& topo,
                                       double beta_f_val) {
  StarBeamMatrix s;
  for (const RisPanel& p : topo.panels) {
    s.beta_f.push_back(Eigen::VectorXd::Constant(p.elements(), beta_f_val));
    s.theta_f.push_back(Eigen::VectorXd::Zero(p.elements()));
    s.theta_b.push_back(Eigen::VectorXd::Zero(p.elements()));
  }
  return s;
}

void StarBeamMatrix::validate() const {
  for (int l = 0; l < panels(); ++l) {
    for (int m = 0; m < beta_f[l].size(); ++m) {
      double bf = beta_f[l](m);
      if (!(bf >= 0.0 && bf <= 1.0))
        throw std::invalid_argument("star beams: beta outside [0,1]");
      auto check_theta = [](double t) {
        if (!(t >= 0.0 && t < 2.0 * M_PI))
          throw std::invalid_argument("star beams: theta outside [0,2pi)");
      };
      check_theta(theta_f[l](m));
      check_theta(theta_b[l](m));
    }
  }
}

double path_loss_db(double d_m, double f_ghz, bool los, int* clamp_counter) {
  if (!(f_ghz > 0.0)) throw std::invalid_argument("path loss: f must be > 0");
  if (d_m < kPathLossDmin) {
    d_m = kPathLossDmin;
    if (clamp_counter) ++*clamp_counter;
  }
  double exp_d = los ? 17.3 : 31.9;
  return 32.4 + exp_d * std::log10(d_m) + 20.0 * std::log10(f_ghz);
}

VecC steering(const std::vector<Eigen::Vector2d>& coords,
              const std::array<Vec3, 2>& axes, const Vec3& from,
              const Vec3& to) {
  Vec3 dir = to - from;
  double norm = dir.norm();
  if (norm < 1e-12) dir = Vec3(1, 0, 0);
  else dir /= norm;
  double c0 = axes[0].dot(dir);
  double c1 = axes[1].dot(dir);
  VecC a(coords.size());
  for (size_t n = 0; n < coords.size(); ++n) {
    double phase = -M_PI * (coords[n].x() * c0 + coords[n].y() * c1);
    a(n) = std::polar(1.0, phase);
  }
  return a;
}

VecC los_steering_ula(int n_antennas, const Vec3& axis, const Vec3& tx,
                      const Vec3& rx) {
  std::vector<Eigen::Vector2d> coords(n_antennas);
  for (int n = 0; n < n_antennas; ++n) coords[n] = Eigen::Vector2d(n, 0.0);
  return steering(coords, {axis, Vec3(0, 0, 1)}, tx, rx);
}

VecC los_steering_panel(const RisPanel& p, const Vec3& other_end) {
  std::vector<Eigen::Vector2d> coords(p.elements());
  for (int m = 0; m < p.elements(); ++m) {
    int i = m % p.elements_h;
    int j = m / p.elements_h;
    coords[m] = Eigen::Vector2d(i - (p.elements_h - 1) / 2.0,
                                j - (p.elements_v - 1) / 2.0);
  }
  return steering(coords, {p.tangent_h, p.tangent_v}, p.center, other_end);
}

namespace {

cd draw_cn(RandomStream& rng) {
  // circularly-symmetric complex Gaussian, unit variance
  return cd(rng.normal(), rng.normal()) / std::sqrt(2.0);
}

// amplitude = sqrt(PL_lin) * (sqrt(k/(k+1)) los + sqrt(1/(k+1)) nlos)
VecC rician_vector(const VecC& los, double pl_lin, double kappa,
                   RandomStream& rng) {
  double a_los = std::sqrt(kappa / (kappa + 1.0));
  double a_nlos = std::sqrt(1.0 / (kappa + 1.0));
  VecC g(los.size());
  for (int i = 0; i < los.size(); ++i)
    g(i) = std::sqrt(pl_lin) * (a_los * los(i) + a_nlos * draw_cn(rng));
  return g;
}

}  // namespace

ChannelState draw_channels(const Topology& topo,
                           const AdjacencyIndicators& adj,
                           const ScenarioConfig& cfg, RandomStream& rng) {
  const int B = static_cast<int>(topo.aps.size());
  const int L = static_cast<int>(topo.panels.size());
  const int U = static_cast<int>(topo.ues.size());
  const int N = cfg.antennas_per_ap;

  ChannelState ch;
  ch.kappa = cfg.rician_linear();
  ch.sigma2 = cfg.noise_power_w();

  ch.h_direct.assign(B, std::vector<VecC>(U));
  for (int b = 0; b < B; ++b) {
    for (int u = 0; u < U; ++u) {
      double d = (topo.ue_pos3(u) - topo.aps[b]).norm();
      bool los = adj.c_bu(b, u) == 1;
      double pl = path_loss_linear(d, cfg.carrier_ghz, los,
                                   &ch.clamp_warnings);
      VecC a = los_steering_ula(N, topo.ap_array_axis[b], topo.aps[b],
                                topo.ue_pos3(u));
      ch.h_direct[b][u] = rician_vector(a, pl, ch.kappa, rng);
    }
  }

  ch.g_ap_ris.assign(B, std::vector<MatC>(L));
  for (int b = 0; b < B; ++b) {
    for (int l = 0; l < L; ++l) {
      const RisPanel& p = topo.panels[l];
      const int M = p.elements();
      double d = (p.center - topo.aps[b]).norm();
      bool los = adj.c_bl(b, l) == 1;
      double pl = path_loss_linear(d, cfg.carrier_ghz, los,
                                   &ch.clamp_warnings);
      VecC a_ap =
          los_steering_ula(N, topo.ap_array_axis[b], topo.aps[b], p.center);
      VecC a_ris = los_steering_panel(p, topo.aps[b]);
      MatC los_m = a_ap * a_ris.transpose();  // rank-one LoS component
      double s_los = std::sqrt(ch.kappa / (ch.kappa + 1.0));
      double s_nlos = std::sqrt(1.0 / (ch.kappa + 1.0));
      MatC g(N, M);
      for (int i = 0; i < N; ++i)
        for (int m = 0; m < M; ++m)
          g(i, m) = std::sqrt(pl) *
                    (s_los * los_m(i, m) + s_nlos * draw_cn(rng));
      ch.g_ap_ris[b][l] = std::move(g);
    }
  }

  ch.g_ris_ue.assign(L, std::vector<VecC>(U));
  for (int l = 0; l < L; ++l) {
    const RisPanel& p = topo.panels[l];
    for (int u = 0; u < U; ++u) {
      double d = (topo.ue_pos3(u) - p.center).norm();
      // panel serves the UE from one of its faces; treat the hop as LoS
      double pl =
          path_loss_linear(d, cfg.carrier_ghz, true, &ch.clamp_warnings);
      VecC a = los_steering_panel(p, topo.ue_pos3(u));
      ch.g_ris_ue[l][u] = rician_vector(a, pl, ch.kappa, rng);
    }
  }
  return ch;
}

VecC star_diagonal(const StarBeamMatrix& beams, int l, bool forward) {
  const Eigen::VectorXd& beta = beams.beta_f[l];
  const Eigen::VectorXd& theta = forward ? beams.theta_f[l] : beams.theta_b[l];
  VecC d(beta.size());
  for (int m = 0; m < beta.size(); ++m) {
    double b = forward ? beta(m) : 1.0 - beta(m);
    d(m) = std::polar(std::sqrt(b), theta(m));
  }
  return d;
}

MatC star_matrix(const StarBeamMatrix& beams, int l, bool forward) {
  beams.validate();
  return star_diagonal(beams, l, forward).asDiagonal();
}

VecC combined_channel(const ChannelState& ch, const AdjacencyIndicators& adj,
                      const StarBeamMatrix& beams, int b, int u) {
  VecC h = adj.c_bu(b, u) == 1
               ? ch.h_direct[b][u]
               : VecC(VecC::Zero(ch.h_direct[b][u].size()));
  const int L = static_cast<int>(ch.g_ris_ue.size());
  for (int l = 0; l < L; ++l) {
    if (adj.c_bl(b, l) != 1) continue;
    bool fwd;
    if (adj.c_lfu(l, u) == 1)
      fwd = true;
    else if (adj.c_lbu(l, u) == 1)
      fwd = false;
    else
      continue;
    VecC phi = star_diagonal(beams, l, fwd);
    // g_bl * diag(phi) * g_lu
    h += ch.g_ap_ris[b][l] * phi.cwiseProduct(ch.g_ris_ue[l][u]);
  }
  return h;
}

std::vector<std::vector<VecC>> combined_channels(
    const ChannelState& ch, const AdjacencyIndicators& adj,
    const StarBeamMatrix& beams) {
  const int B = static_cast<int>(ch.h_direct.size());
  const int U = B > 0 ? static_cast<int>(ch.h_direct[0].size()) : 0;
  std::vector<std::vector<VecC>> out(B, std::vector<VecC>(U));
  for (int b = 0; b < B; ++b)
    for (int u = 0; u < U; ++u)
      out[b][u] = combined_channel(ch, adj, beams, b, u);
  return out;
}

}  // namespace starnoma
