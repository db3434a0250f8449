#ifndef STARNOMA_NOMA_HPP
#define STARNOMA_NOMA_HPP

#include <optional>
#include <string>
#include <vector>

#include "starnoma/channel.hpp"

namespace starnoma {

// Combined channels indexed [b][u].
using ChannelGrid = std::vector<std::vector<VecC>>;

// Association alpha, pairing gamma and decoding order delta in one place.
// clusters[b][k] lists member UE ids (sorted); order[b][k] lists the same
// ids in decoding order, position 0 decoded first.
struct AssignmentState {
  int num_ues = 0;
  std::vector<int> ap_of_ue;  // -1 when unassociated
  std::vector<std::vector<std::vector<int>>> clusters;
  std::vector<std::vector<std::vector<int>>> order;

  int num_aps() const { return static_cast<int>(clusters.size()); }
  int num_slots(int b) const { return static_cast<int>(clusters[b].size()); }
  int ues_on_ap(int b) const;
  Eigen::MatrixXi alpha() const;  // B x U binary view
  // (k, position-in-cluster) of UE u on its AP, or nullopt
  std::optional<std::pair<int, int>> locate(int u) const;
  std::vector<int> unassociated() const;
  // structural invariants; throws std::invalid_argument
  void validate(int quota_clusters = -1) const;

  static AssignmentState empty(int num_aps, int slots_per_ap, int num_ues);
};

// Active beams per (AP, cluster slot) plus the shared panel coefficients.
struct BeamformingState {
  std::vector<std::vector<VecC>> omega;  // [b][k], each N_b
  StarBeamMatrix star;

  // throws when sum_k ||omega_{b,k}||^2 > p_max (small tolerance)
  void validate_power(double p_max) const;
};

struct RateEntry {
  int b, k, u;
  double sinr;
  double rate;
};

struct RateReport {
  std::vector<RateEntry> entries;
  std::vector<double> ue_rate;  // total per UE (0 for unassociated)
  double sum_rate = 0.0;
  double min_ue_rate = 0.0;
  std::vector<int> idle_aps;  // APs serving no UE

  std::string to_csv() const;
};

// p_b = 1 / (#UEs on AP b); 0 with idle flag when the AP serves nobody.
struct PowerCoefficient {
  double value = 0.0;
  bool idle = false;
};
PowerCoefficient power_coefficient(const AssignmentState& as, int b);

// Intra/inter-cluster interference powers seen by UE u of cluster (b,k).
// When probe_v is set, measures the signal of u at UE v (same cluster,
// decoded later).
struct Interference {
  double intra = 0.0;
  double inter = 0.0;
};
Interference interference(const ChannelGrid& h, const AssignmentState& as,
                          const BeamformingState& beams, int b, int k, int u,
                          std::optional<int> probe_v = std::nullopt);

double sinr(const ChannelGrid& h, const AssignmentState& as,
            const BeamformingState& beams, double sigma2, int b, int k, int u,
            std::optional<int> probe_v = std::nullopt);

inline double rate_from_sinr(double s) { return std::log2(1.0 + s); }

// Lemma-style equivalent-combined gain used to order a cluster for SIC.
double equivalent_gain(const ChannelGrid& h, const AssignmentState& as,
                       const BeamformingState& beams, double sigma2, int b,
                       int k, int u);

// Members of cluster (b,k) sorted ascending by equivalent gain; ties by UE
// index.
std::vector<int> decoding_order(const ChannelGrid& h, const AssignmentState& as,
                                const BeamformingState& beams, double sigma2,
                                int b, int k);
// Refresh order for every cluster in place.
void refresh_decoding_order(const ChannelGrid& h, AssignmentState& as,
                            const BeamformingState& beams, double sigma2);

struct SicViolation {
  int b, k, u, v;
  double sinr_vu;
  double sinr_u;
};
struct SicCheck {
  bool ok = true;
  std::vector<SicViolation> violations;
};
// Pairwise SIC feasibility for the stored decoding order
// (relative tolerance 1e-9).
SicCheck verify_sic(const ChannelGrid& h, const AssignmentState& as,
                    const BeamformingState& beams, double sigma2);

RateReport rate_report(const ChannelGrid& h, const AssignmentState& as,
                       const BeamformingState& beams, double sigma2);

}  // namespace starnoma

#endif  // STARNOMA_NOMA_HPP
