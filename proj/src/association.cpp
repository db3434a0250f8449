#include "starnoma/association.hpp"

#include <algorithm>
#include <stdexcept>

namespace starnoma {

Matching Matching::empty(int num_clusters, int num_aps) {
  Matching m;
  m.mu_cluster.assign(num_clusters, -1);
  m.mu_ap.assign(num_aps, {});
  return m;
}

void Matching::assign(int cluster, int ap) {
  int old = mu_cluster[cluster];
  if (old >= 0) {
    auto& v = mu_ap[old];
    v.erase(std::remove(v.begin(), v.end(), cluster), v.end());
  }
  mu_cluster[cluster] = ap;
  if (ap >= 0) {
    auto& v = mu_ap[ap];
    v.insert(std::upper_bound(v.begin(), v.end(), cluster), cluster);
  }
}

void Matching::validate(const std::vector<ClusterInfo>& clusters,
                        const std::vector<int>& quota,
                        bool quota_by_ues) const {
  for (size_t k = 0; k < mu_cluster.size(); ++k) {
    int b = mu_cluster[k];
    if (b < 0) continue;
    const auto& v = mu_ap[b];
    if (std::find(v.begin(), v.end(), static_cast<int>(k)) == v.end())
      throw std::invalid_argument("matching: mu views inconsistent");
  }
  for (size_t b = 0; b < mu_ap.size(); ++b) {
    int load = 0;
    for (int k : mu_ap[b]) {
      if (mu_cluster[k] != static_cast<int>(b))
        throw std::invalid_argument("matching: mu views inconsistent");
      load += quota_by_ues ? static_cast<int>(clusters[k].members.size()) : 1;
    }
    if (load > quota[b])
      throw std::invalid_argument("matching: quota exceeded on AP " +
                                  std::to_string(b));
  }
}

double cluster_utility(const RateReport& rep, const ClusterInfo& cluster) {
  double total = 0.0;
  for (int u : cluster.members) total += rep.ue_rate[u];
  return total;
}

PreferenceProfile build_preferences(const std::vector<ClusterInfo>& clusters,
                                    int num_aps, const ChannelGrid& h) {
  PreferenceProfile prof;
  prof.ap_gain.assign(num_aps, std::vector<double>(clusters.size(), 0.0));
  for (int b = 0; b < num_aps; ++b)
    for (size_t k = 0; k < clusters.size(); ++k)
      for (int u : clusters[k].members)
        prof.ap_gain[b][k] += h[b][u].squaredNorm();

  prof.cluster_prefs.resize(clusters.size());
  for (size_t k = 0; k < clusters.size(); ++k) {
    std::vector<int> order(num_aps);
    for (int b = 0; b < num_aps; ++b) order[b] = b;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b2) {
      double ga = prof.ap_gain[a][k], gb = prof.ap_gain[b2][k];
      if (ga != gb) return ga > gb;
      return a < b2;
    });
    prof.cluster_prefs[k] = std::move(order);
  }
  return prof;
}

DaResult deferred_acceptance(const PreferenceProfile& prefs,
                             const std::vector<ClusterInfo>& clusters,
                             const std::vector<int>& quota, bool quota_by_ues,
                             const std::vector<int>& slots) {
  const int num_clusters = static_cast<int>(clusters.size());
  const int num_aps = static_cast<int>(quota.size());
  DaResult res;
  res.matching = Matching::empty(num_clusters, num_aps);

  std::vector<std::vector<int>> lists = prefs.cluster_prefs;  // consumed head-first
  std::vector<size_t> next(num_clusters, 0);
  std::vector<int> load(num_aps, 0);
  std::vector<int> pending;  // unmatched clusters with options left
  for (int k = 0; k < num_clusters; ++k) pending.push_back(k);

  while (!pending.empty()) {
    // collect this round's proposals
    std::vector<std::vector<int>> g(num_aps);
    std::vector<int> still;
    for (int k : pending) {
      if (next[k] >= lists[k].size()) {
        res.unmatched.push_back(k);
        continue;
      }
      int b = lists[k][next[k]];
      g[b].push_back(k);
      ++res.proposals;
      still.push_back(k);
    }
    pending.clear();
    for (int b = 0; b < num_aps; ++b) {
      if (g[b].empty()) continue;
      std::stable_sort(g[b].begin(), g[b].end(), [&](int a, int c) {
        double ga = prefs.ap_gain[b][a], gc = prefs.ap_gain[b][c];
        if (ga != gc) return ga > gc;
        return a < c;
      });
      for (int k : g[b]) {
        int cost = quota_by_ues ? static_cast<int>(clusters[k].members.size())
                                : 1;
        int nslots = static_cast<int>(res.matching.mu_ap[b].size());
        if (load[b] + cost <= quota[b] && nslots < slots[b]) {
          res.matching.assign(k, b);  // accepted, never displaced
          load[b] += cost;
          still.erase(std::remove(still.begin(), still.end(), k), still.end());
        } else {
          ++next[k];  // rejected: b leaves k's list
        }
      }
    }
    pending = std::move(still);
  }
  return res;
}

MatchingEvaluator::MatchingEvaluator(std::vector<ClusterInfo> clusters,
                                     int num_aps, std::vector<int> slots,
                                     const ChannelGrid& h,
                                     const BeamformingState& beams,
                                     double sigma2, int num_ues)
    : clusters_(std::move(clusters)),
      num_aps_(num_aps),
      slots_(std::move(slots)),
      h_(h),
      beams_(beams),
      sigma2_(sigma2),
      num_ues_(num_ues) {}

AssignmentState MatchingEvaluator::realize(const Matching& mu) const {
  AssignmentState as;
  as.num_ues = num_ues_;
  as.ap_of_ue.assign(num_ues_, -1);
  as.clusters.resize(num_aps_);
  for (int b = 0; b < num_aps_; ++b)
    as.clusters[b].assign(slots_[b], {});
  for (int b = 0; b < num_aps_; ++b) {
    const auto& matched = mu.mu_ap[b];  // ascending cluster ids
    if (static_cast<int>(matched.size()) > slots_[b])
      throw std::invalid_argument("matching: more clusters than beam slots");
    for (size_t s = 0; s < matched.size(); ++s) {
      as.clusters[b][s] = clusters_[matched[s]].members;
      for (int u : clusters_[matched[s]].members) as.ap_of_ue[u] = b;
    }
  }
  as.order = as.clusters;
  refresh_decoding_order(h_, as, beams_, sigma2_);
  return as;
}

MatchingUtilities MatchingEvaluator::operator()(const Matching& mu) const {
  auto it = cache_.find(mu.mu_cluster);
  if (it != cache_.end()) return it->second;
  AssignmentState as = realize(mu);
  RateReport rep = rate_report(h_, as, beams_, sigma2_);
  MatchingUtilities util;
  util.cluster.resize(clusters_.size());
  for (size_t k = 0; k < clusters_.size(); ++k)
    util.cluster[k] =
        mu.mu_cluster[k] >= 0 ? cluster_utility(rep, clusters_[k]) : 0.0;
  util.ap.assign(num_aps_, 0.0);
  for (int b = 0; b < num_aps_; ++b)
    for (int k : mu.mu_ap[b]) util.ap[b] += util.cluster[k];
  cache_[mu.mu_cluster] = util;
  return util;
}

namespace {

Matching swapped(const Matching& mu, int i, int j) {
  Matching out = mu;
  int n = mu.mu_cluster[i], m = mu.mu_cluster[j];
  out.assign(i, m);
  out.assign(j, n);
  return out;
}

// weak / strict improvement tolerances for floating-point utilities
constexpr double kWeakTol = 1e-12;
constexpr double kStrictTol = 1e-9;

bool is_blocking(const Matching& mu, const MatchingUtilities& base,
                 const MatchingUtilities& after, int i, int j) {
  int n = mu.mu_cluster[i], m = mu.mu_cluster[j];
  double b[4] = {base.cluster[i], base.cluster[j], base.ap[n], base.ap[m]};
  double a[4] = {after.cluster[i], after.cluster[j], after.ap[n], after.ap[m]};
  bool weak = true, strict = false;
  for (int t = 0; t < 4; ++t) {
    if (a[t] < b[t] - kWeakTol * std::max(1.0, std::abs(b[t]))) weak = false;
    if (a[t] > b[t] + kStrictTol) strict = true;
  }
  return weak && strict;
}

}  // namespace

std::optional<std::pair<int, int>> find_swap_blocking_pair(
    const Matching& mu, const UtilityFn& utilities) {
  const int n = static_cast<int>(mu.mu_cluster.size());
  MatchingUtilities base = utilities(mu);
  for (int i = 0; i < n; ++i) {
    if (mu.mu_cluster[i] < 0) continue;
    for (int j = i + 1; j < n; ++j) {
      if (mu.mu_cluster[j] < 0) continue;
      if (mu.mu_cluster[i] == mu.mu_cluster[j]) continue;
      MatchingUtilities after = utilities(swapped(mu, i, j));
      if (is_blocking(mu, base, after, i, j)) return std::make_pair(i, j);
    }
  }
  return std::nullopt;
}

SwapResult swap_stabilize(const Matching& mu0, const UtilityFn& utilities,
                          int max_iters) {
  SwapResult res;
  res.matching = mu0;
  for (int it = 0; it < max_iters; ++it) {
    auto pair = find_swap_blocking_pair(res.matching, utilities);
    if (!pair) return res;
    MatchingUtilities before = utilities(res.matching);
    Matching next = swapped(res.matching, pair->first, pair->second);
    MatchingUtilities after = utilities(next);
    int n = res.matching.mu_cluster[pair->first];
    int m = res.matching.mu_cluster[pair->second];
    double gain = after.cluster[pair->first] - before.cluster[pair->first] +
                  after.cluster[pair->second] - before.cluster[pair->second] +
                  after.ap[n] - before.ap[n] + after.ap[m] - before.ap[m];
    res.log.push_back({pair->first, pair->second, gain});
    res.matching = std::move(next);
    ++res.swaps;
  }
  res.converged = false;
  return res;
}

Eigen::MatrixXi matching_to_alpha(const Matching& mu,
                                  const std::vector<ClusterInfo>& clusters,
                                  int num_aps, int num_ues) {
  Eigen::MatrixXi alpha = Eigen::MatrixXi::Zero(num_aps, num_ues);
  for (size_t k = 0; k < clusters.size(); ++k) {
    int b = mu.mu_cluster[k];
    if (b < 0) continue;
    for (int u : clusters[k].members) alpha(b, u) = 1;
  }
  return alpha;
}

}  // namespace starnoma
