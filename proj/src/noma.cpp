#include "starnoma/noma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace starnoma {

int AssignmentState::ues_on_ap(int b) const {
  int n = 0;
  for (const auto& c : clusters[b]) n += static_cast<int>(c.size());
  return n;
}

Eigen::MatrixXi AssignmentState::alpha() const {
  Eigen::MatrixXi a = Eigen::MatrixXi::Zero(num_aps(), num_ues);
  for (int u = 0; u < num_ues; ++u)
    if (ap_of_ue[u] >= 0) a(ap_of_ue[u], u) = 1;
  return a;
}

std::optional<std::pair<int, int>> AssignmentState::locate(int u) const {
  int b = ap_of_ue[u];
  if (b < 0) return std::nullopt;
  for (int k = 0; k < num_slots(b); ++k) {
    const auto& c = clusters[b][k];
    auto it = std::find(c.begin(), c.end(), u);
    if (it != c.end())
      return std::make_pair(k, static_cast<int>(it - c.begin()));
  }
  return std::nullopt;
}

std::vector<int> AssignmentState::unassociated() const {
  std::vector<int> out;
  for (int u = 0; u < num_ues; ++u)
    if (ap_of_ue[u] < 0) out.push_back(u);
  return out;
}

void AssignmentState::validate(int quota_clusters) const {
  std::vector<int> seen(num_ues, 0);
  for (int b = 0; b < num_aps(); ++b) {
    int nonempty = 0;
    for (int k = 0; k < num_slots(b); ++k) {
      if (!clusters[b][k].empty()) ++nonempty;
      for (int u : clusters[b][k]) {
        if (u < 0 || u >= num_ues)
          throw std::invalid_argument("assignment: UE id out of range");
        if (ap_of_ue[u] != b)
          throw std::invalid_argument(
              "assignment: cluster member not associated with its AP");
        ++seen[u];
      }
      // order must be a permutation of the cluster
      std::vector<int> a = clusters[b][k], o = order[b][k];
      std::sort(a.begin(), a.end());
      std::sort(o.begin(), o.end());
      if (a != o)
        throw std::invalid_argument(
            "assignment: decoding order is not a permutation of the cluster");
    }
    if (quota_clusters >= 0 && nonempty > quota_clusters)
      throw std::invalid_argument("assignment: cluster quota exceeded");
  }
  for (int u = 0; u < num_ues; ++u) {
    int expect = ap_of_ue[u] >= 0 ? 1 : 0;
    if (seen[u] != expect)
      throw std::invalid_argument("assignment: UE " + std::to_string(u) +
                                  " appears in " + std::to_string(seen[u]) +
                                  " clusters");
  }
}

AssignmentState AssignmentState::empty(int num_aps, int slots_per_ap,
                                       int num_ues) {
  AssignmentState as;
  as.num_ues = num_ues;
  as.ap_of_ue.assign(num_ues, -1);
  as.clusters.assign(num_aps,
                     std::vector<std::vector<int>>(slots_per_ap));
  as.order = as.clusters;
  return as;
}

void BeamformingState::validate_power(double p_max) const {
  for (size_t b = 0; b < omega.size(); ++b) {
    double p = 0.0;
    for (const VecC& w : omega[b]) p += w.squaredNorm();
    if (p > p_max * (1.0 + 1e-9) + 1e-12)
      throw std::invalid_argument("beams: power budget exceeded on AP " +
                                  std::to_string(b));
  }
}

PowerCoefficient power_coefficient(const AssignmentState& as, int b) {
  int n = as.ues_on_ap(b);
  if (n == 0) return {0.0, true};
  return {1.0 / n, false};
}

namespace {

double beam_gain(const ChannelGrid& h, const BeamformingState& beams, int b,
                 int k, int u) {
  const VecC& w = beams.omega[b][k];
  if (w.size() == 0) return 0.0;
  cd inner = h[b][u].dot(w);  // conjugates the channel
  return std::norm(inner);
}

int position_in_order(const std::vector<int>& order, int u) {
  auto it = std::find(order.begin(), order.end(), u);
  return it == order.end() ? -1 : static_cast<int>(it - order.begin());
}

}  // namespace

Interference interference(const ChannelGrid& h, const AssignmentState& as,
                          const BeamformingState& beams, int b, int k, int u,
                          std::optional<int> probe_v) {
  const auto& cluster = as.clusters[b][k];
  if (std::find(cluster.begin(), cluster.end(), u) == cluster.end())
    throw std::invalid_argument("interference: UE not in cluster");
  int meas = u;
  if (probe_v) {
    meas = *probe_v;
    const auto& ord = as.order[b][k];
    int pu = position_in_order(ord, u);
    int pv = position_in_order(ord, meas);
    if (pv < 0)
      throw std::invalid_argument("interference: probe UE not in cluster");
    if (pv <= pu)
      throw std::invalid_argument(
          "interference: probe UE must be decoded after the target");
  }

  double p_b = power_coefficient(as, b).value;
  const auto& ord = as.order[b][k];
  int pos_u = position_in_order(ord, u);

  Interference out;
  // signals decoded after u, carried on the cluster beam, heard at `meas`
  int later = static_cast<int>(ord.size()) - pos_u - 1;
  out.intra = beam_gain(h, beams, b, k, meas) * p_b * later;

  for (int k2 = 0; k2 < as.num_slots(b); ++k2) {
    if (k2 == k) continue;
    int members = static_cast<int>(as.clusters[b][k2].size());
    if (members == 0) continue;
    out.inter += members * beam_gain(h, beams, b, k2, meas);
  }
  return out;
}

double sinr(const ChannelGrid& h, const AssignmentState& as,
            const BeamformingState& beams, double sigma2, int b, int k, int u,
            std::optional<int> probe_v) {
  Interference itf = interference(h, as, beams, b, k, u, probe_v);
  int meas = probe_v ? *probe_v : u;
  double p_b = power_coefficient(as, b).value;
  double sig = beam_gain(h, beams, b, k, meas) * p_b;
  double den = itf.intra + itf.inter + sigma2;
  if (den <= 0.0) return sig > 0.0 ? std::numeric_limits<double>::infinity()
                                   : 0.0;
  return sig / den;
}

double equivalent_gain(const ChannelGrid& h, const AssignmentState& as,
                       const BeamformingState& beams, double sigma2, int b,
                       int k, int u) {
  double num = beam_gain(h, beams, b, k, u);
  double den = sigma2;
  for (int k2 = 0; k2 < as.num_slots(b); ++k2) {
    if (k2 == k) continue;
    int members = static_cast<int>(as.clusters[b][k2].size());
    if (members == 0) continue;
    den += members * beam_gain(h, beams, b, k2, u);
  }
  if (den <= 0.0)
    return num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return num / den;
}

std::vector<int> decoding_order(const ChannelGrid& h, const AssignmentState& as,
                                const BeamformingState& beams, double sigma2,
                                int b, int k) {
  std::vector<int> members = as.clusters[b][k];
  std::vector<double> g(members.size());
  for (size_t i = 0; i < members.size(); ++i)
    g[i] = equivalent_gain(h, as, beams, sigma2, b, k, members[i]);
  std::vector<int> idx(members.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int c) {
    if (g[a] != g[c]) return g[a] < g[c];
    return members[a] < members[c];
  });
  std::vector<int> out(members.size());
  for (size_t i = 0; i < idx.size(); ++i) out[i] = members[idx[i]];
  return out;
}

void refresh_decoding_order(const ChannelGrid& h, AssignmentState& as,
                            const BeamformingState& beams, double sigma2) {
  for (int b = 0; b < as.num_aps(); ++b)
    for (int k = 0; k < as.num_slots(b); ++k)
      as.order[b][k] = decoding_order(h, as, beams, sigma2, b, k);
}

SicCheck verify_sic(const ChannelGrid& h, const AssignmentState& as,
                    const BeamformingState& beams, double sigma2) {
  SicCheck check;
  const double rel = 1e-9;
  for (int b = 0; b < as.num_aps(); ++b) {
    for (int k = 0; k < as.num_slots(b); ++k) {
      const auto& ord = as.order[b][k];
      for (size_t pu = 0; pu < ord.size(); ++pu) {
        for (size_t pv = pu + 1; pv < ord.size(); ++pv) {
          int u = ord[pu], v = ord[pv];
          double s_u = sinr(h, as, beams, sigma2, b, k, u);
          double s_vu = sinr(h, as, beams, sigma2, b, k, u, v);
          if (s_vu < s_u * (1.0 - rel) - 1e-15) {
            check.ok = false;
            check.violations.push_back({b, k, u, v, s_vu, s_u});
          }
        }
      }
    }
  }
  return check;
}

RateReport rate_report(const ChannelGrid& h, const AssignmentState& as,
                       const BeamformingState& beams, double sigma2) {
  RateReport rep;
  rep.ue_rate.assign(as.num_ues, 0.0);
  for (int b = 0; b < as.num_aps(); ++b) {
    if (power_coefficient(as, b).idle) {
      rep.idle_aps.push_back(b);
      continue;
    }
    for (int k = 0; k < as.num_slots(b); ++k) {
      for (int u : as.clusters[b][k]) {
        double s = sinr(h, as, beams, sigma2, b, k, u);
        double r = rate_from_sinr(s);
        rep.entries.push_back({b, k, u, s, r});
        rep.ue_rate[u] += r;
        rep.sum_rate += r;
      }
    }
  }
  rep.min_ue_rate = rep.ue_rate.empty()
                        ? 0.0
                        : *std::min_element(rep.ue_rate.begin(),
                                            rep.ue_rate.end());
  return rep;
}

std::string RateReport::to_csv() const {
  std::ostringstream o;
  o << "b,k,u,sinr,rate\n";
  o.precision(12);
  for (const RateEntry& e : entries)
    o << e.b << "," << e.k << "," << e.u << "," << e.sinr << "," << e.rate
      << "\n";
  return o.str();
}

}  // namespace starnoma
