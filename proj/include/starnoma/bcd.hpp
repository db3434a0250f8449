#ifndef STARNOMA_BCD_HPP
#define STARNOMA_BCD_HPP

#include <functional>
#include <string>
#include <vector>

#include "starnoma/association.hpp"
#include "starnoma/beamforming.hpp"
#include "starnoma/pairing.hpp"

namespace starnoma {

// Nonempty clusters of an assignment as matching entities, ascending (b,k).
std::vector<ClusterInfo> collect_clusters(const AssignmentState& as);

// Per-AP cluster quotas and beam-slot caps derived from the config.
struct QuotaModel {
  std::vector<int> quota;
  std::vector<int> slots;
  bool by_ues = false;
};
QuotaModel quota_model(const ScenarioConfig& cfg);

// Each UE to its strongest AP by combined-channel norm (UE quotas respected
// when configured); clusters are left for the pairing stage.
AssignmentState greedy_association(const ChannelGrid& h,
                                   const ScenarioConfig& cfg);

// Algorithm blocks. Each returns a candidate state built from the current
// one; callers decide whether to commit.
AssignmentState association_block(const ChannelGrid& h,
                                  const AssignmentState& as,
                                  const BeamformingState& beams,
                                  const ScenarioConfig& cfg, double sigma2,
                                  bool* converged = nullptr);
AssignmentState pairing_block(const ChannelGrid& h, const AssignmentState& as,
                              const BeamformingState& beams,
                              const ScenarioConfig& cfg, double sigma2,
                              RandomStream& rng);

// Association followed by pairing from scratch; used at episode resets and
// as the BCD initial state.
struct InitialState {
  AssignmentState as;
  BeamformingState beams;
};
InitialState two_stage_matching(const ScaContext& ctx,
                                const ScenarioConfig& cfg,
                                const Topology& topo, RandomStream& rng);

enum class BeamProviderKind { kSca, kPolicy };

// Deterministic beam update from trained policies.
using PolicyBeamFn =
    std::function<void(const AssignmentState&, BeamformingState&)>;

struct BcdTraceRow {
  int iter;
  double xi;
  std::string assoc_status, pairing_status, order_status, beam_status;
  int rmin_violations;
};

struct BcdResult {
  AssignmentState as;
  BeamformingState beams;
  double xi = 0.0;
  bool converged = false;
  std::vector<BcdTraceRow> trace;
  std::vector<ScaIterRow> sca_trace;  // concatenated inner SCA iterations
};

struct BcdOptions {
  double epsilon = 1e-3;
  int max_iters = 20;
  ScaOptions sca;
};

BcdResult bcd_optimize(const ScaContext& ctx, const ScenarioConfig& cfg,
                       const Topology& topo, const AssignmentState& as0,
                       const BeamformingState& beams0,
                       BeamProviderKind provider, const PolicyBeamFn& policy,
                       RandomStream& rng, const BcdOptions& opts = {});

}  // namespace starnoma

#endif  // STARNOMA_BCD_HPP
