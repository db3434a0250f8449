#ifndef STARNOMA_PAIRING_HPP
#define STARNOMA_PAIRING_HPP

#include <vector>

#include "starnoma/noma.hpp"

namespace starnoma {

// Clusters of one AP with their representatives after pairing.
struct ClusterSet {
  std::vector<std::vector<int>> clusters;  // member UE ids, sorted
  std::vector<int> representative;         // one per cluster, a member
  bool converged = true;
  int iterations = 0;
};

// |h_i^H h_j| / (||h_i|| ||h_j||); 0 with flag when either vector is zero.
double channel_correlation(const VecC& h_i, const VecC& h_j,
                           bool* zero_flag = nullptr);

// Total correlation between UE u (in cluster `own`) and all members of the
// other clusters. h[u] is that UE's combined channel on the AP at hand.
double cross_cluster_correlation(int u, int own,
                                 const std::vector<std::vector<int>>& clusters,
                                 const std::vector<VecC>& h);

// Member of `cluster` minimizing cross-cluster correlation; ties by UE index.
int update_representative(int own,
                          const std::vector<std::vector<int>>& clusters,
                          const std::vector<VecC>& h);

// Correlation K-means over one AP's UE set. h[u] must be defined for every
// id in ue_set. persistent toggles the termination test between
// representative stability (default) and full-assignment stability.
ClusterSet kmeans_pairing(const std::vector<int>& ue_set, int k,
                          const std::vector<VecC>& h, RandomStream& rng,
                          int max_iters = 100, bool persistent = false);

// Sum of pairwise correlations within each cluster (the quality measure the
// brute-force oracle compares against).
double within_cluster_correlation(const std::vector<std::vector<int>>& clusters,
                                  const std::vector<VecC>& h);

}  // namespace starnoma

#endif  // STARNOMA_PAIRING_HPP
