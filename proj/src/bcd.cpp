#include "starnoma/bcd.hpp"

#include <algorithm>
#include <cmath>

namespace starnoma {

std::vector<ClusterInfo> collect_clusters(const AssignmentState& as) {
  std::vector<ClusterInfo> out;
  for (int b = 0; b < as.num_aps(); ++b)
    for (int k = 0; k < as.num_slots(b); ++k)
      if (!as.clusters[b][k].empty()) out.push_back({as.clusters[b][k]});
  return out;
}

QuotaModel quota_model(const ScenarioConfig& cfg) {
  QuotaModel q;
  q.by_ues = cfg.quota_semantics == "ues";
  q.quota.assign(cfg.num_aps, cfg.quota_per_ap);
  // beam slots bound the clusters an AP can host regardless of semantics
  q.slots.assign(cfg.num_aps, cfg.clusters_per_ap);
  if (!q.by_ues)
    for (int b = 0; b < cfg.num_aps; ++b)
      q.quota[b] = std::min(q.quota[b], q.slots[b]);
  return q;
}

AssignmentState greedy_association(const ChannelGrid& h,
                                   const ScenarioConfig& cfg) {
  const int B = cfg.num_aps;
  AssignmentState as =
      AssignmentState::empty(B, cfg.clusters_per_ap, cfg.num_ues);
  QuotaModel q = quota_model(cfg);
  std::vector<int> load(B, 0);
  for (int u = 0; u < cfg.num_ues; ++u) {
    int best = -1;
    double best_gain = -1.0;
    for (int b = 0; b < B; ++b) {
      if (q.by_ues && load[b] >= q.quota[b]) continue;
      double g = h[b][u].squaredNorm();
      if (g > best_gain) {
        best_gain = g;
        best = b;
      }
    }
    if (best < 0) continue;  // all APs full; UE stays unassociated
    as.ap_of_ue[u] = best;
    ++load[best];
    // interim single pool on slot 0; pairing redistributes
    as.clusters[best][0].push_back(u);
  }
  as.order = as.clusters;
  return as;
}

AssignmentState pairing_block(const ChannelGrid& h, const AssignmentState& as,
                              const BeamformingState& beams,
                              const ScenarioConfig& cfg, double sigma2,
                              RandomStream& rng) {
  AssignmentState out = as;
  for (int b = 0; b < as.num_aps(); ++b) {
    std::vector<int> ues;
    for (const auto& c : as.clusters[b])
      ues.insert(ues.end(), c.begin(), c.end());
    std::sort(ues.begin(), ues.end());
    for (auto& c : out.clusters[b]) c.clear();
    if (ues.empty()) {
      out.order[b] = out.clusters[b];
      continue;
    }
    int k = std::min<int>(cfg.clusters_per_ap, static_cast<int>(ues.size()));
    RandomStream sub = rng.substream("pairing-ap", b);
    ClusterSet cs = kmeans_pairing(ues, k, h[b], sub, 100,
                                   cfg.pairing_persistent);
    for (int i = 0; i < k; ++i) out.clusters[b][i] = cs.clusters[i];
    out.order[b] = out.clusters[b];
  }
  refresh_decoding_order(h, out, beams, sigma2);
  return out;
}

AssignmentState association_block(const ChannelGrid& h,
                                  const AssignmentState& as,
                                  const BeamformingState& beams,
                                  const ScenarioConfig& cfg, double sigma2,
                                  bool* converged) {
  std::vector<ClusterInfo> clusters = collect_clusters(as);
  if (clusters.empty()) {
    if (converged) *converged = true;
    return as;
  }
  QuotaModel q = quota_model(cfg);
  PreferenceProfile prefs = build_preferences(clusters, cfg.num_aps, h);
  DaResult da =
      deferred_acceptance(prefs, clusters, q.quota, q.by_ues, q.slots);
  MatchingEvaluator eval(clusters, cfg.num_aps, q.slots, h, beams, sigma2,
                         as.num_ues);
  int max_sw = 10 * static_cast<int>(clusters.size() * clusters.size());
  SwapResult sw = swap_stabilize(da.matching, eval, std::max(max_sw, 10));
  if (converged) *converged = sw.converged;
  return eval.realize(sw.matching);
}

InitialState two_stage_matching(const ScaContext& ctx,
                                const ScenarioConfig& cfg,
                                const Topology& topo, RandomStream& rng) {
  InitialState st;
  RandomStream phase_rng = rng.substream("phase-init", 0);
  st.beams.star = random_star(topo, phase_rng);
  ChannelGrid h = combined_channels(ctx.ch, ctx.adj, st.beams.star);

  // bootstrap clusters, then the two matching stages
  AssignmentState boot = greedy_association(h, cfg);
  st.beams.omega = mrt_beams(h, boot, cfg.p_max_w);
  RandomStream pair_rng = rng.substream("pairing-boot", 0);
  boot = pairing_block(h, boot, st.beams, cfg, ctx.ch.sigma2, pair_rng);
  st.beams.omega = mrt_beams(h, boot, cfg.p_max_w);
  refresh_decoding_order(h, boot, st.beams, ctx.ch.sigma2);

  AssignmentState matched =
      association_block(h, boot, st.beams, cfg, ctx.ch.sigma2);
  RandomStream pair_rng2 = rng.substream("pairing-final", 0);
  st.as = pairing_block(h, matched, st.beams, cfg, ctx.ch.sigma2, pair_rng2);

  st.beams.omega = mrt_beams(h, st.as, cfg.p_max_w);
  refresh_decoding_order(h, st.as, st.beams, ctx.ch.sigma2);
  return st;
}

namespace {

int count_rmin_violations(const RateReport& rep, double r_min) {
  int n = 0;
  for (double r : rep.ue_rate)
    if (r < r_min - 1e-9) ++n;
  return n;
}

}  // namespace

BcdResult bcd_optimize(const ScaContext& ctx, const ScenarioConfig& cfg,
                       const Topology& topo, const AssignmentState& as0,
                       const BeamformingState& beams0,
                       BeamProviderKind provider, const PolicyBeamFn& policy,
                       RandomStream& rng, const BcdOptions& opts) {
  (void)topo;
  BcdResult res;
  res.as = as0;
  res.beams = beams0;
  res.xi = objective_sum_rate(ctx, res.as, res.beams);

  AssignmentState best_as = res.as;
  BeamformingState best_beams = res.beams;
  double best_xi = res.xi;

  double xi_prev = res.xi;
  for (int n = 1; n <= opts.max_iters; ++n) {
    BcdTraceRow row;
    row.iter = n;
    ChannelGrid h = combined_channels(ctx.ch, ctx.adj, res.beams.star);

    // association (commit only when the objective does not drop)
    {
      bool conv = true;
      AssignmentState cand =
          association_block(h, res.as, res.beams, cfg, ctx.ch.sigma2, &conv);
      double xi_cand = objective_sum_rate(ctx, cand, res.beams);
      if (xi_cand >= res.xi - 1e-12) {
        res.as = cand;
        res.xi = xi_cand;
        row.assoc_status = conv ? "ok" : "maxswap";
      } else {
        row.assoc_status = "kept";
      }
    }

    // pairing
    {
      RandomStream sub = rng.substream("bcd-pairing", n);
      AssignmentState cand =
          pairing_block(h, res.as, res.beams, cfg, ctx.ch.sigma2, sub);
      double xi_cand = objective_sum_rate(ctx, cand, res.beams);
      if (xi_cand >= res.xi - 1e-12) {
        res.as = cand;
        res.xi = xi_cand;
        row.pairing_status = "ok";
      } else {
        row.pairing_status = "kept";
      }
    }

    // decoding order
    {
      AssignmentState cand = res.as;
      refresh_decoding_order(h, cand, res.beams, ctx.ch.sigma2);
      double xi_cand = objective_sum_rate(ctx, cand, res.beams);
      if (xi_cand >= res.xi - 1e-12) {
        res.as = cand;
        res.xi = xi_cand;
        row.order_status = "ok";
      } else {
        row.order_status = "kept";
      }
    }

    // beams
    if (provider == BeamProviderKind::kSca) {
      RandomStream sub = rng.substream("bcd-sca", n);
      ScaResult sca = sca_optimize(ctx, res.as, res.beams, sub, opts.sca);
      for (const ScaIterRow& r : sca.trace) res.sca_trace.push_back(r);
      if (sca.xi >= res.xi - 1e-12) {
        res.as = sca.as;
        res.beams = sca.beams;
        res.xi = sca.xi;
        row.beam_status = sca.converged ? "ok" : "maxiter";
      } else {
        row.beam_status = "kept";
      }
    } else {
      policy(res.as, res.beams);
      res.xi = objective_sum_rate(ctx, res.as, res.beams);
      row.beam_status = "policy";
    }

    if (res.xi > best_xi) {
      best_xi = res.xi;
      best_as = res.as;
      best_beams = res.beams;
    }

    ChannelGrid h2 = combined_channels(ctx.ch, ctx.adj, res.beams.star);
    RateReport rep = rate_report(h2, res.as, res.beams, ctx.ch.sigma2);
    row.xi = res.xi;
    row.rmin_violations = count_rmin_violations(rep, ctx.r_min);
    res.trace.push_back(row);

    if (std::abs(res.xi - xi_prev) <= opts.epsilon) {
      res.converged = true;
      break;
    }
    xi_prev = res.xi;
  }

  if (provider == BeamProviderKind::kPolicy) {
    // policies carry no ascent guarantee; hand back the best visited state
    res.as = best_as;
    res.beams = best_beams;
    res.xi = best_xi;
  }
  return res;
}

}  // namespace starnoma
