#ifndef STARNOMA_ASSOCIATION_HPP
#define STARNOMA_ASSOCIATION_HPP

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "starnoma/noma.hpp"

namespace starnoma {

// One matching entity: a UE cluster that moves between APs as a unit.
struct ClusterInfo {
  std::vector<int> members;  // sorted UE ids
};

// mu: cluster -> AP (-1 unmatched) with the reverse view kept consistent.
struct Matching {
  std::vector<int> mu_cluster;
  std::vector<std::vector<int>> mu_ap;  // sorted cluster ids per AP

  static Matching empty(int num_clusters, int num_aps);
  void assign(int cluster, int ap);
  void validate(const std::vector<ClusterInfo>& clusters,
                const std::vector<int>& quota, bool quota_by_ues) const;
};

struct PreferenceProfile {
  // P(k): APs in descending order of sum_{u in C_k} ||h(b,u)||^2
  std::vector<std::vector<int>> cluster_prefs;
  // scalar gain used by APs to rank proposals, [b][cluster]
  std::vector<std::vector<double>> ap_gain;
};

// Sum of member rates of cluster k when hosted by AP b under the given
// realized state.
double cluster_utility(const RateReport& rep, const ClusterInfo& cluster);

PreferenceProfile build_preferences(const std::vector<ClusterInfo>& clusters,
                                    int num_aps, const ChannelGrid& h);

struct DaResult {
  Matching matching;
  int proposals = 0;
  std::vector<int> unmatched;  // clusters with exhausted lists
};

// Deferred acceptance with immediate (irrevocable) acceptance and batch
// rejection when an AP is full. Each (cluster, AP) pair is proposed at most
// once, so proposals <= #clusters * #aps.
DaResult deferred_acceptance(const PreferenceProfile& prefs,
                             const std::vector<ClusterInfo>& clusters,
                             const std::vector<int>& quota, bool quota_by_ues,
                             const std::vector<int>& slots);

// Utilities of every party under a matching: per-cluster sum rate and
// per-AP total rate over its matched clusters.
struct MatchingUtilities {
  std::vector<double> cluster;
  std::vector<double> ap;
};
using UtilityFn = std::function<MatchingUtilities(const Matching&)>;

// Realizes a matching into a full assignment (clusters occupy beam slots of
// their AP in ascending cluster-id order, decoding order refreshed) and
// evaluates rate-based utilities. Evaluations are memoized.
class MatchingEvaluator {
 public:
  MatchingEvaluator(std::vector<ClusterInfo> clusters, int num_aps,
                    std::vector<int> slots, const ChannelGrid& h,
                    const BeamformingState& beams, double sigma2, int num_ues);

  MatchingUtilities operator()(const Matching& mu) const;
  AssignmentState realize(const Matching& mu) const;

 private:
  std::vector<ClusterInfo> clusters_;
  int num_aps_;
  std::vector<int> slots_;
  const ChannelGrid& h_;
  const BeamformingState& beams_;
  double sigma2_;
  int num_ues_;
  mutable std::map<std::vector<int>, MatchingUtilities> cache_;
};

// First swap-blocking pair (i, j) in ascending scan order, or nullopt when
// the matching is two-sided exchange-stable.
std::optional<std::pair<int, int>> find_swap_blocking_pair(
    const Matching& mu, const UtilityFn& utilities);

struct SwapLogEntry {
  int i, j;
  double gain;  // total utility delta over the four parties
};
struct SwapResult {
  Matching matching;
  bool converged = true;
  int swaps = 0;
  std::vector<SwapLogEntry> log;
};

SwapResult swap_stabilize(const Matching& mu0, const UtilityFn& utilities,
                          int max_iters);

// alpha(b,u) = 1 iff u's cluster is matched to b; members of unmatched
// clusters are left unassociated.
Eigen::MatrixXi matching_to_alpha(const Matching& mu,
                                  const std::vector<ClusterInfo>& clusters,
                                  int num_aps, int num_ues);

}  // namespace starnoma

#endif  // STARNOMA_ASSOCIATION_HPP
