#include "starnoma/beamforming.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace starnoma {

namespace {

constexpr double kZetaFloor = 1e-12;
constexpr double kZetaCap = 1e18;
constexpr double kAscentTol = 1e-6;
constexpr double kRankFallbackThreshold = 0.9;
constexpr int kRandomizationCandidates = 50;

double beam_gain(const ChannelGrid& h, const BeamformingState& beams, int b,
                 int k, int u) {
  const VecC& w = beams.omega[b][k];
  if (w.size() == 0) return 0.0;
  return std::norm(h[b][u].dot(w));
}

double wrap_angle(double t) {
  t = std::fmod(t, 2.0 * M_PI);
  if (t < 0.0) t += 2.0 * M_PI;
  return t;
}

}  // namespace

std::vector<SlackEntry> defining_slacks(const ChannelGrid& h,
                                        const AssignmentState& as,
                                        const BeamformingState& beams,
                                        double sigma2) {
  std::vector<SlackEntry> out;
  for (int b = 0; b < as.num_aps(); ++b) {
    double p_b = power_coefficient(as, b).value;
    for (int k = 0; k < as.num_slots(b); ++k) {
      for (int u : as.clusters[b][k]) {
        double sig = beam_gain(h, beams, b, k, u) * p_b;
        double zeta = sig > 0.0 ? 1.0 / sig : kZetaCap;
        Interference itf = interference(h, as, beams, b, k, u);
        double eta = itf.intra + itf.inter + sigma2;
        out.push_back({b, k, u, zeta, eta});
      }
    }
  }
  return out;
}

double taylor_lower_bound(double zeta, double eta, double zeta_n,
                          double eta_n) {
  if (!(zeta > 0.0 && eta > 0.0 && zeta_n > 0.0 && eta_n > 0.0))
    throw std::invalid_argument("taylor_lower_bound: arguments must be > 0");
  const double log2e = 1.0 / std::log(2.0);
  double base = std::log2(1.0 + 1.0 / (zeta_n * eta_n));
  double dz = log2e * (zeta - zeta_n) / (zeta_n + zeta_n * zeta_n * eta_n);
  double de = log2e * (eta - eta_n) / (eta_n + eta_n * eta_n * zeta_n);
  return base - dz - de;
}

RankOne extract_rank_one(const MatC& m) {
  MatC h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<MatC> eig(h);
  int last = static_cast<int>(h.rows()) - 1;
  double lmax = std::max(eig.eigenvalues()(last), 0.0);
  double tr = std::max(h.trace().real(), 1e-300);
  RankOne r;
  r.v = std::sqrt(lmax) * eig.eigenvectors().col(last);
  r.ratio = lmax / tr;
  return r;
}

double objective_sum_rate(const ScaContext& ctx, const AssignmentState& as,
                          const BeamformingState& beams) {
  ChannelGrid h = combined_channels(ctx.ch, ctx.adj, beams.star);
  return rate_report(h, as, beams, ctx.ch.sigma2).sum_rate;
}

double true_objective(const ScaContext& ctx, AssignmentState& as,
                      const BeamformingState& beams) {
  ChannelGrid h = combined_channels(ctx.ch, ctx.adj, beams.star);
  refresh_decoding_order(h, as, beams, ctx.ch.sigma2);
  return rate_report(h, as, beams, ctx.ch.sigma2).sum_rate;
}

std::vector<std::vector<VecC>> mrt_beams(const ChannelGrid& h,
                                         const AssignmentState& as,
                                         double p_max) {
  std::vector<std::vector<VecC>> omega(as.num_aps());
  for (int b = 0; b < as.num_aps(); ++b) {
    int slots = as.num_slots(b);
    omega[b].resize(slots);
    double per_slot = slots > 0 ? p_max / slots : 0.0;
    for (int k = 0; k < slots; ++k) {
      const auto& members = as.clusters[b][k];
      int n = as.num_ues > 0 && !h[b].empty() ? static_cast<int>(h[b][0].size())
                                              : 0;
      if (members.empty()) {
        omega[b][k] = VecC::Zero(n);
        continue;
      }
      int best = members[0];
      for (int u : members)
        if (h[b][u].norm() > h[b][best].norm()) best = u;
      double nb = h[b][best].norm();
      if (nb < 1e-300) {
        omega[b][k] = VecC::Zero(h[b][best].size());
        continue;
      }
      omega[b][k] = std::sqrt(per_slot) * (h[b][best] / nb);
    }
  }
  return omega;
}

StarBeamMatrix random_star(const Topology& topo, RandomStream& rng) {
  StarBeamMatrix s = StarBeamMatrix::uniform(topo, 0.5);
  for (int l = 0; l < s.panels(); ++l)
    for (int m = 0; m < s.theta_f[l].size(); ++m) {
      s.theta_f[l](m) = rng.uniform(0.0, 2.0 * M_PI);
      s.theta_b[l](m) = rng.uniform(0.0, 2.0 * M_PI);
    }
  return s;
}

namespace {

// The subproblems optimize slack MULTIPLIERS relative to the expansion
// point (zeta = zt*zn, eta = et*en), which keeps every constraint O(1):
// LOW(zt, et) = base - a*(zt - 1) - a*(et - 1) with a = log2e/(1 + zn*en).
struct LowConstants {
  double base, a;
  double zn, en;
};

LowConstants low_constants(double zeta_n, double eta_n) {
  double zn = std::clamp(zeta_n, kZetaFloor, kZetaCap);
  double en = std::max(eta_n, 1.0);  // normalized eta is >= 1
  const double log2e = 1.0 / std::log(2.0);
  LowConstants c;
  c.zn = zn;
  c.en = en;
  c.base = std::log2(1.0 + 1.0 / (zn * en));
  c.a = log2e / (1.0 + zn * en);
  return c;
}

// Shared bookkeeping for both subproblems: one scalar triple per (k,u).
struct SlackIndex {
  int zeta, eta, rate;
};

}  // namespace

SubproblemResult active_subproblem(const ScaContext& ctx,
                                   const AssignmentState& as,
                                   const BeamformingState& beams, int b,
                                   RandomStream& rng,
                                   const ScaOptions& sca_opts) {
  SubproblemResult res;
  res.beams = beams;
  res.as = as;
  res.accepted = false;

  AssignmentState inc_as = as;
  double inc_obj = true_objective(ctx, inc_as, beams);
  res.as = inc_as;
  res.objective = inc_obj;

  double p_b = power_coefficient(as, b).value;
  if (p_b == 0.0) {
    res.status = "idle";
    return res;
  }

  const double sigma2 = ctx.ch.sigma2;
  const double sig = std::sqrt(sigma2);
  ChannelGrid h = combined_channels(ctx.ch, ctx.adj, beams.star);

  std::vector<int> live_slots;
  for (int k = 0; k < as.num_slots(b); ++k)
    if (!as.clusters[b][k].empty()) live_slots.push_back(k);
  if (live_slots.empty()) {
    res.status = "idle";
    return res;
  }
  std::vector<int> slot_var(as.num_slots(b), -1);
  for (size_t i = 0; i < live_slots.size(); ++i) slot_var[live_slots[i]] = i;

  const int n_ant = static_cast<int>(h[b][as.clusters[b][live_slots[0]][0]].size());

  convex::Problem prob;
  for (size_t i = 0; i < live_slots.size(); ++i)
    prob.mat_vars.push_back({n_ant});

  // scalar triples per (k,u), expansion point at the incumbent
  std::vector<SlackEntry> slacks = defining_slacks(h, as, beams, sigma2);
  std::vector<std::tuple<int, int, SlackIndex, LowConstants>> rows;  // (k,u,..)
  auto add_scalar = [&](double lb, double init) {
    convex::ScalarVar v;
    v.lb = lb;
    v.init = init;
    prob.scalar_vars.push_back(v);
    return static_cast<int>(prob.scalar_vars.size()) - 1;
  };
  for (const SlackEntry& s : slacks) {
    if (s.b != b) continue;
    double zn = std::clamp(s.zeta * sigma2, kZetaFloor, kZetaCap);
    double en = std::max(s.eta / sigma2, 1.0);
    LowConstants lc = low_constants(zn, en);
    SlackIndex si;
    si.zeta = add_scalar(1e-9, 1.0);      // zeta multiplier
    si.eta = add_scalar(1.0 / lc.en, 1.0);  // eta multiplier, eta >= 1
    si.rate = add_scalar(ctx.r_min, lc.base);
    rows.emplace_back(s.k, s.u, si, lc);
    prob.objective.scalars.push_back({si.rate, 1.0});
  }

  auto q_of = [&](int u) { return VecC(h[b][u] / sig); };

  for (const auto& [k, u, si, lc] : rows) {
    // rate bounded by the linearized curve
    convex::AffineCon low;
    low.scalars.push_back({si.rate, 1.0});
    low.scalars.push_back({si.zeta, lc.a});
    low.scalars.push_back({si.eta, lc.a});
    low.constant = -(lc.base + 2.0 * lc.a);
    prob.affine.push_back(low);

    // zeta >= 1 / (p_b * q^H W q), in multiplier units
    convex::ReciprocalCon rc;
    rc.term.var = slot_var[k];
    rc.term.rank1 = q_of(u);
    rc.p = p_b * lc.zn;
    rc.slack = si.zeta;
    prob.recips.push_back(rc);

    // eta >= intra + inter + 1, scaled by 1/en
    convex::AffineCon etc;
    const auto& ord = as.order[b][k];
    int pos = static_cast<int>(std::find(ord.begin(), ord.end(), u) -
                               ord.begin());
    int later = static_cast<int>(ord.size()) - pos - 1;
    if (later > 0) {
      convex::MatTerm t;
      t.var = slot_var[k];
      t.rank1 = q_of(u);
      t.scale = p_b * later / lc.en;
      etc.mats.push_back(t);
    }
    for (int k2 : live_slots) {
      if (k2 == k) continue;
      convex::MatTerm t;
      t.var = slot_var[k2];
      t.rank1 = q_of(u);
      t.scale = static_cast<double>(as.clusters[b][k2].size()) / lc.en;
      etc.mats.push_back(t);
    }
    etc.scalars.push_back({si.eta, -1.0});
    etc.constant = 1.0 / lc.en;
    prob.affine.push_back(etc);
  }

  // power budget over all live beams
  convex::AffineCon pow;
  for (size_t i = 0; i < live_slots.size(); ++i) {
    convex::MatTerm t;
    t.var = static_cast<int>(i);
    t.dense = MatC::Identity(n_ant, n_ant);
    pow.mats.push_back(t);
  }
  pow.constant = -ctx.p_max;
  prob.affine.push_back(pow);

  convex::SolveOptions opts;
  opts.max_iter = sca_opts.solve_budget;
  opts.tol_obj = sca_opts.solve_tol_obj;
  convex::Point warm;
  for (int k : live_slots) {
    const VecC& w = beams.omega[b][k];
    VecC w2 = w.size() == n_ant ? w : VecC(VecC::Zero(n_ant));
    warm.mats.push_back(w2 * w2.adjoint());
  }
  warm.scalars = Eigen::VectorXd::Zero(prob.scalar_vars.size());
  for (size_t s = 0; s < prob.scalar_vars.size(); ++s)
    warm.scalars(s) = prob.scalar_vars[s].init;
  opts.warm_start = warm;

  convex::Solution sol = convex::solve(prob, opts);
  res.status = convex::status_name(sol.status);
  if (sol.status == convex::SolveStatus::kInfeasible) return res;

  // rank-one recovery, with Gaussian randomization as fallback
  std::vector<RankOne> r1(live_slots.size());
  double min_ratio = 1.0;
  for (size_t i = 0; i < live_slots.size(); ++i) {
    r1[i] = extract_rank_one(sol.x.mats[i]);
    if (sol.x.mats[i].trace().real() > 1e-12)
      min_ratio = std::min(min_ratio, r1[i].ratio);
  }
  res.min_rank_ratio = min_ratio;

  auto make_candidate = [&](const std::vector<VecC>& ws) {
    BeamformingState cand = beams;
    double power = 0.0;
    for (const VecC& w : ws) power += w.squaredNorm();
    // solver residuals can leave a hair of excess power; scale it away
    double fix = power > ctx.p_max ? std::sqrt(ctx.p_max / power) : 1.0;
    for (size_t i = 0; i < live_slots.size(); ++i)
      cand.omega[b][live_slots[i]] = fix * ws[i];
    for (int k = 0; k < as.num_slots(b); ++k)
      if (slot_var[k] < 0) cand.omega[b][k] = VecC::Zero(n_ant);
    return cand;
  };

  std::vector<VecC> best_ws(live_slots.size());
  for (size_t i = 0; i < live_slots.size(); ++i) best_ws[i] = r1[i].v;
  BeamformingState best = make_candidate(best_ws);
  AssignmentState best_as = as;
  double best_obj = true_objective(ctx, best_as, best);

  if (min_ratio < kRankFallbackThreshold) {
    for (int c = 0; c < kRandomizationCandidates; ++c) {
      std::vector<VecC> ws(live_slots.size());
      for (size_t i = 0; i < live_slots.size(); ++i) {
        Eigen::SelfAdjointEigenSolver<MatC> eig(sol.x.mats[i]);
        VecC z(n_ant);
        for (int t = 0; t < n_ant; ++t)
          z(t) = cd(rng.normal(), rng.normal()) / std::sqrt(2.0);
        VecC v = eig.eigenvectors() *
                 eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * z;
        double target = std::sqrt(std::max(sol.x.mats[i].trace().real(), 0.0));
        if (v.norm() > 1e-12) v *= target / v.norm();
        ws[i] = v;
      }
      BeamformingState cand = make_candidate(ws);
      AssignmentState cand_as = as;
      double obj = true_objective(ctx, cand_as, cand);
      if (obj > best_obj) {
        best_obj = obj;
        best = cand;
        best_as = cand_as;
      }
    }
  }

  if (best_obj >= inc_obj - kAscentTol) {
    res.beams = best;
    res.as = best_as;
    res.objective = best_obj;
    res.accepted = true;
  }
  return res;
}

SubproblemResult passive_subproblem(const ScaContext& ctx,
                                    const AssignmentState& as,
                                    const BeamformingState& beams,
                                    RandomStream& rng,
                                    const ScaOptions& sca_opts) {
  SubproblemResult res;
  res.beams = beams;
  res.as = as;
  res.accepted = false;

  AssignmentState inc_as = as;
  double inc_obj = true_objective(ctx, inc_as, beams);
  res.as = inc_as;
  res.objective = inc_obj;

  const int L = beams.star.panels();
  if (L == 0) {
    res.status = "idle";
    return res;
  }

  const double sigma2 = ctx.ch.sigma2;
  const double sig = std::sqrt(sigma2);
  ChannelGrid h = combined_channels(ctx.ch, ctx.adj, beams.star);

  // layout of the lifted vector: per panel F block then B block, then the
  // unit slot
  std::vector<int> offset(L);
  int dim = 0;
  for (int l = 0; l < L; ++l) {
    offset[l] = dim;
    dim += 2 * static_cast<int>(beams.star.beta_f[l].size());
  }
  const int unit = dim;
  dim += 1;

  auto q_vector = [&](int b, int k, int u) {
    VecC q = VecC::Zero(dim);
    const VecC& w = beams.omega[b][k];
    if (w.size() == 0) return q;
    for (int l = 0; l < L; ++l) {
      if (ctx.adj.c_bl(b, l) != 1) continue;
      bool fwd = ctx.adj.c_lfu(l, u) == 1;
      if (!fwd && ctx.adj.c_lbu(l, u) != 1) continue;
      const MatC& gbl = ctx.ch.g_ap_ris[b][l];
      const VecC& glu = ctx.ch.g_ris_ue[l][u];
      int m_count = static_cast<int>(glu.size());
      int base = offset[l] + (fwd ? 0 : m_count);
      for (int m = 0; m < m_count; ++m)
        q(base + m) = (gbl.col(m) * glu(m)).dot(w) / sig;
    }
    if (ctx.adj.c_bu(b, u) == 1)
      q(unit) = ctx.ch.h_direct[b][u].dot(w) / sig;
    return q;
  };

  convex::Problem prob;
  prob.mat_vars.push_back({dim});

  std::vector<SlackEntry> slacks = defining_slacks(h, as, beams, sigma2);
  struct Row {
    int b, k, u;
    SlackIndex si;
    LowConstants lc;
  };
  std::vector<Row> rows;
  auto add_scalar = [&](double lb, double init) {
    convex::ScalarVar v;
    v.lb = lb;
    v.init = init;
    prob.scalar_vars.push_back(v);
    return static_cast<int>(prob.scalar_vars.size()) - 1;
  };
  for (const SlackEntry& s : slacks) {
    double p_b = power_coefficient(as, s.b).value;
    if (p_b == 0.0) continue;
    double zn = std::clamp(s.zeta * sigma2, kZetaFloor, kZetaCap);
    double en = std::max(s.eta / sigma2, 1.0);
    Row r;
    r.b = s.b;
    r.k = s.k;
    r.u = s.u;
    r.lc = low_constants(zn, en);
    r.si.zeta = add_scalar(1e-9, 1.0);
    r.si.eta = add_scalar(1.0 / r.lc.en, 1.0);
    r.si.rate = add_scalar(ctx.r_min, r.lc.base);
    rows.push_back(r);
    prob.objective.scalars.push_back({r.si.rate, 1.0});
  }

  for (const Row& r : rows) {
    double p_b = power_coefficient(as, r.b).value;

    convex::AffineCon low;
    low.scalars.push_back({r.si.rate, 1.0});
    low.scalars.push_back({r.si.zeta, r.lc.a});
    low.scalars.push_back({r.si.eta, r.lc.a});
    low.constant = -(r.lc.base + 2.0 * r.lc.a);
    prob.affine.push_back(low);

    convex::ReciprocalCon rc;
    rc.term.var = 0;
    rc.term.rank1 = q_vector(r.b, r.k, r.u);
    rc.p = p_b * r.lc.zn;
    rc.slack = r.si.zeta;
    prob.recips.push_back(rc);

    convex::AffineCon etc;
    const auto& ord = as.order[r.b][r.k];
    int pos = static_cast<int>(std::find(ord.begin(), ord.end(), r.u) -
                               ord.begin());
    int later = static_cast<int>(ord.size()) - pos - 1;
    if (later > 0) {
      convex::MatTerm t;
      t.var = 0;
      t.rank1 = q_vector(r.b, r.k, r.u);
      t.scale = p_b * later / r.lc.en;
      etc.mats.push_back(t);
    }
    for (int k2 = 0; k2 < as.num_slots(r.b); ++k2) {
      if (k2 == r.k || as.clusters[r.b][k2].empty()) continue;
      convex::MatTerm t;
      t.var = 0;
      t.rank1 = q_vector(r.b, k2, r.u);
      t.scale = static_cast<double>(as.clusters[r.b][k2].size()) / r.lc.en;
      etc.mats.push_back(t);
    }
    etc.scalars.push_back({r.si.eta, -1.0});
    etc.constant = 1.0 / r.lc.en;
    prob.affine.push_back(etc);
  }

  // energy split on every element pair, and the unit slot
  for (int l = 0; l < L; ++l) {
    int m_count = static_cast<int>(beams.star.beta_f[l].size());
    for (int m = 0; m < m_count; ++m) {
      convex::AffineCon split;
      split.equality = true;
      for (int face = 0; face < 2; ++face) {
        convex::MatTerm t;
        t.var = 0;
        VecC e = VecC::Zero(dim);
        e(offset[l] + face * m_count + m) = 1.0;
        t.rank1 = e;
        split.mats.push_back(t);
      }
      split.constant = -1.0;
      prob.affine.push_back(split);
    }
  }
  {
    convex::AffineCon one;
    one.equality = true;
    convex::MatTerm t;
    t.var = 0;
    VecC e = VecC::Zero(dim);
    e(unit) = 1.0;
    t.rank1 = e;
    one.mats.push_back(t);
    one.constant = -1.0;
    prob.affine.push_back(one);
  }

  // warm start from the current panel state
  VecC v0 = VecC::Zero(dim);
  for (int l = 0; l < L; ++l) {
    int m_count = static_cast<int>(beams.star.beta_f[l].size());
    VecC f = star_diagonal(beams.star, l, true);
    VecC bk = star_diagonal(beams.star, l, false);
    for (int m = 0; m < m_count; ++m) {
      v0(offset[l] + m) = f(m);
      v0(offset[l] + m_count + m) = bk(m);
    }
  }
  v0(unit) = 1.0;
  convex::SolveOptions opts;
  opts.max_iter = sca_opts.solve_budget;
  opts.tol_obj = sca_opts.solve_tol_obj;
  convex::Point warm;
  warm.mats.push_back(v0 * v0.adjoint());
  warm.scalars = Eigen::VectorXd::Zero(prob.scalar_vars.size());
  for (size_t s = 0; s < prob.scalar_vars.size(); ++s)
    warm.scalars(s) = prob.scalar_vars[s].init;
  opts.warm_start = warm;

  convex::Solution sol = convex::solve(prob, opts);
  res.status = convex::status_name(sol.status);
  if (sol.status == convex::SolveStatus::kInfeasible) return res;

  RankOne r1 = extract_rank_one(sol.x.mats[0]);
  res.min_rank_ratio = r1.ratio;

  auto star_from_vector = [&](VecC v) {
    // rotate so the unit slot is real positive, then renormalize each
    // element pair to the exact energy split
    if (std::abs(v(unit)) > 1e-12) v *= std::conj(v(unit)) / std::abs(v(unit));
    StarBeamMatrix s = beams.star;
    for (int l = 0; l < L; ++l) {
      int m_count = static_cast<int>(s.beta_f[l].size());
      for (int m = 0; m < m_count; ++m) {
        cd pf = v(offset[l] + m);
        cd pb = v(offset[l] + m_count + m);
        double bf = std::norm(pf), bb = std::norm(pb);
        double tot = bf + bb;
        s.beta_f[l](m) = tot > 1e-12 ? bf / tot : 0.5;
        s.theta_f[l](m) = wrap_angle(std::arg(pf));
        s.theta_b[l](m) = wrap_angle(std::arg(pb));
      }
    }
    return s;
  };

  BeamformingState best = beams;
  best.star = star_from_vector(r1.v);
  AssignmentState best_as = as;
  double best_obj = true_objective(ctx, best_as, best);

  if (r1.ratio < kRankFallbackThreshold) {
    Eigen::SelfAdjointEigenSolver<MatC> eig(sol.x.mats[0]);
    for (int c = 0; c < kRandomizationCandidates; ++c) {
      VecC z(dim);
      for (int t = 0; t < dim; ++t)
        z(t) = cd(rng.normal(), rng.normal()) / std::sqrt(2.0);
      VecC v = eig.eigenvectors() *
               eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * z;
      BeamformingState cand = beams;
      cand.star = star_from_vector(v);
      AssignmentState cand_as = as;
      double obj = true_objective(ctx, cand_as, cand);
      if (obj > best_obj) {
        best_obj = obj;
        best = cand;
        best_as = cand_as;
      }
    }
  }

  if (best_obj >= inc_obj - kAscentTol) {
    res.beams = best;
    res.as = best_as;
    res.objective = best_obj;
    res.accepted = true;
  }
  return res;
}

ScaResult sca_optimize(const ScaContext& ctx, const AssignmentState& as0,
                       const BeamformingState& beams0, RandomStream& rng,
                       const ScaOptions& opts) {
  ScaResult out;
  out.beams = beams0;
  out.as = as0;
  out.xi = true_objective(ctx, out.as, out.beams);
  if (opts.max_outer <= 0 || std::isinf(opts.epsilon)) {
    out.converged = true;
    return out;
  }

  double xi_prev = out.xi;
  for (int n = 1; n <= opts.max_outer; ++n) {
    std::ostringstream act_status;
    double min_ratio = 1.0;
    for (int b = 0; b < out.as.num_aps(); ++b) {
      SubproblemResult r =
          active_subproblem(ctx, out.as, out.beams, b, rng, opts);
      if (b > 0) act_status << "/";
      act_status << r.status << (r.accepted ? "" : "!");
      min_ratio = std::min(min_ratio, r.min_rank_ratio);
      out.beams = r.beams;
      out.as = r.as;
      out.xi = r.objective;
    }
    SubproblemResult p = passive_subproblem(ctx, out.as, out.beams, rng, opts);
    out.beams = p.beams;
    out.as = p.as;
    out.xi = p.objective;
    min_ratio = std::min(min_ratio, p.min_rank_ratio);

    out.trace.push_back({n, out.xi, act_status.str(),
                         p.status + (p.accepted ? "" : "!"), min_ratio});
    if (std::abs(out.xi - xi_prev) <= opts.epsilon) {
      out.converged = true;
      return out;
    }
    xi_prev = out.xi;
  }
  return out;
}

}  // namespace starnoma
