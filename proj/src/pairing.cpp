#include "starnoma/pairing.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace starnoma {

double channel_correlation(const VecC& h_i, const VecC& h_j, bool* zero_flag) {
  double ni = h_i.norm();
  double nj = h_j.norm();
  if (ni < 1e-300 || nj < 1e-300) {
    if (zero_flag) *zero_flag = true;
    return 0.0;
  }
  double c = std::abs(h_i.dot(h_j)) / (ni * nj);
  return std::min(c, 1.0);
}

double cross_cluster_correlation(int u, int own,
                                 const std::vector<std::vector<int>>& clusters,
                                 const std::vector<VecC>& h) {
  double total = 0.0;
  for (size_t l = 0; l < clusters.size(); ++l) {
    if (static_cast<int>(l) == own) continue;
    for (int v : clusters[l]) total += channel_correlation(h[u], h[v]);
  }
  return total;
}

int update_representative(int own,
                          const std::vector<std::vector<int>>& clusters,
                          const std::vector<VecC>& h) {
  const auto& members = clusters[own];
  if (members.empty())
    throw std::invalid_argument("representative update on empty cluster");
  int best = members[0];
  double best_cor = std::numeric_limits<double>::infinity();
  for (int u : members) {
    double c = cross_cluster_correlation(u, own, clusters, h);
    if (c < best_cor || (c == best_cor && u < best)) {
      best_cor = c;
      best = u;
    }
  }
  return best;
}

ClusterSet kmeans_pairing(const std::vector<int>& ue_set, int k,
                          const std::vector<VecC>& h, RandomStream& rng,
                          int max_iters, bool persistent) {
  if (k < 1) throw std::invalid_argument("pairing: k must be >= 1");
  if (static_cast<int>(ue_set.size()) < k)
    throw std::invalid_argument("pairing: fewer UEs than clusters");

  // k distinct representatives, drawn without replacement
  std::vector<int> pool = ue_set;
  std::vector<int> reps(k);
  for (int i = 0; i < k; ++i) {
    std::uint64_t j = rng.uniform_int(pool.size() - i) + i;
    std::swap(pool[i], pool[j]);
    reps[i] = pool[i];
  }

  auto assign = [&](const std::vector<int>& r) {
    std::vector<std::vector<int>> clusters(k);
    for (int i = 0; i < k; ++i) clusters[i] = {r[i]};
    for (int u : ue_set) {
      if (std::find(r.begin(), r.end(), u) != r.end()) continue;
      int best = 0;
      double best_cor = -1.0;
      for (int i = 0; i < k; ++i) {
        double c = channel_correlation(h[u], h[r[i]]);
        if (c > best_cor) {
          best_cor = c;
          best = i;
        }
      }
      clusters[best].push_back(u);
    }
    for (auto& c : clusters) std::sort(c.begin(), c.end());
    return clusters;
  };

  ClusterSet out;
  out.converged = false;
  std::vector<std::vector<int>> prev_assignment;
  for (int it = 0; it < max_iters; ++it) {
    out.iterations = it + 1;
    std::vector<std::vector<int>> clusters = assign(reps);
    std::vector<int> new_reps(k);
    for (int i = 0; i < k; ++i)
      new_reps[i] = update_representative(i, clusters, h);
    bool stable = persistent ? (clusters == prev_assignment)
                             : (new_reps == reps);
    if (stable) {
      out.clusters = clusters;
      out.representative = reps;
      out.converged = true;
      return out;
    }
    prev_assignment = clusters;
    reps = new_reps;
  }
  // max_iters hit: return the assignment for the current representatives
  out.clusters = assign(reps);
  out.representative = reps;
  return out;
}

double within_cluster_correlation(
    const std::vector<std::vector<int>>& clusters, const std::vector<VecC>& h) {
  double total = 0.0;
  for (const auto& c : clusters)
    for (size_t i = 0; i < c.size(); ++i)
      for (size_t j = i + 1; j < c.size(); ++j)
        total += channel_correlation(h[c[i]], h[c[j]]);
  return total;
}

}  // namespace starnoma
