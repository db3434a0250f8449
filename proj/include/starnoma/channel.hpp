#ifndef STARNOMA_CHANNEL_HPP
#define STARNOMA_CHANNEL_HPP

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "starnoma/rng.hpp"
#include "starnoma/scenario.hpp"

namespace starnoma {

using cd = std::complex<double>;
using VecC = Eigen::VectorXcd;
using MatC = Eigen::MatrixXcd;

// Per-element energy split and phases for each panel face. beta_f stores the
// forward energy fraction; beta_b = 1 - beta_f is enforced at construction.
struct StarBeamMatrix {
  // [panel][element]
  std::vector<Eigen::VectorXd> beta_f;
  std::vector<Eigen::VectorXd> theta_f;
  std::vector<Eigen::VectorXd> theta_b;

  int panels() const { return static_cast<int>(beta_f.size()); }
  double beta_b(int l, int m) const { return 1.0 - beta_f[l](m); }

  static StarBeamMatrix uniform(const Topology& topo, double beta_f_val = 0.5);
  // checks beta in [0,1], theta in [0,2pi); throws on violation
  void validate() const;
};

struct ChannelState {
  // h_direct[b][u]: N_b vector; g_ap_ris[b][l]: N_b x M; g_ris_ue[l][u]: M
  std::vector<std::vector<VecC>> h_direct;
  std::vector<std::vector<MatC>> g_ap_ris;
  std::vector<std::vector<VecC>> g_ris_ue;
  double kappa = 0.0;    // linear Rician factor
  double sigma2 = 0.0;   // noise power, watts
  int clamp_warnings = 0;  // path-loss distance clamps
};

// Indoor hotspot path-loss curves; d clamps at d_min with a warning count.
constexpr double kPathLossDmin = 0.5;
double path_loss_db(double d_m, double f_ghz, bool los,
                    int* clamp_counter = nullptr);
inline double path_loss_linear(double d_m, double f_ghz, bool los,
                               int* clamp_counter = nullptr) {
  return std::pow(10.0, -path_loss_db(d_m, f_ghz, los, clamp_counter) / 10.0);
}

// Array response with half-wavelength spacing. coords holds each element's
// offset in half-wavelength units along up to two array axes; axes holds the
// matching unit vectors. Entry n = exp(-j*pi*sum_a coords[n][a]*cos(axis_a,
// dir)).
VecC steering(const std::vector<Eigen::Vector2d>& coords,
              const std::array<Vec3, 2>& axes, const Vec3& from,
              const Vec3& to);

// Uniform linear array helper used for AP arrays.
VecC los_steering_ula(int n_antennas, const Vec3& axis, const Vec3& tx,
                      const Vec3& rx);
// Planar grid helper used for RIS panels.
VecC los_steering_panel(const RisPanel& panel, const Vec3& other_end);

ChannelState draw_channels(const Topology& topo, const AdjacencyIndicators& adj,
                           const ScenarioConfig& cfg, RandomStream& rng);

// diag(sqrt(beta_p) * exp(j theta_p)) for one panel face
MatC star_matrix(const StarBeamMatrix& beams, int l, bool forward);
VecC star_diagonal(const StarBeamMatrix& beams, int l, bool forward);

// Combined AP->UE channel through direct path and adjacent panels.
VecC combined_channel(const ChannelState& ch, const AdjacencyIndicators& adj,
                      const StarBeamMatrix& beams, int b, int u);
// All (b,u) combined channels; [b][u]
std::vector<std::vector<VecC>> combined_channels(
    const ChannelState& ch, const AdjacencyIndicators& adj,
    const StarBeamMatrix& beams);

}  // namespace starnoma

#endif  // STARNOMA_CHANNEL_HPP
