#ifndef STARNOMA_BEAMFORMING_HPP
#define STARNOMA_BEAMFORMING_HPP

#include <string>
#include <vector>

#include "starnoma/convex.hpp"
#include "starnoma/noma.hpp"

namespace starnoma {

// Slack values at a given operating point: zeta is the inverse desired-signal
// power, eta the interference-plus-noise power, per (b,k,u).
struct SlackEntry {
  int b, k, u;
  double zeta;
  double eta;
};
std::vector<SlackEntry> defining_slacks(const ChannelGrid& h,
                                        const AssignmentState& as,
                                        const BeamformingState& beams,
                                        double sigma2);

// First-order lower bound of log2(1 + 1/(zeta*eta)) at (zeta_n, eta_n).
// All arguments must be > 0.
double taylor_lower_bound(double zeta, double eta, double zeta_n,
                          double eta_n);

struct RankOne {
  VecC v;        // principal component scaled by sqrt(lambda_max)
  double ratio;  // lambda_max / trace
};
RankOne extract_rank_one(const MatC& m);

// Everything held fixed while beams are optimized.
struct ScaContext {
  const AdjacencyIndicators& adj;
  const ChannelState& ch;
  double p_max;
  double r_min;
};

// Sum rate under the stored decoding order.
double objective_sum_rate(const ScaContext& ctx, const AssignmentState& as,
                          const BeamformingState& beams);
// Sum rate with the decoding order refreshed for the given beams; `as` is
// updated in place with the induced order.
double true_objective(const ScaContext& ctx, AssignmentState& as,
                      const BeamformingState& beams);

struct SubproblemResult {
  BeamformingState beams;
  AssignmentState as;  // order refreshed for the accepted state
  double objective = 0.0;
  std::string status;
  bool accepted = false;           // false: kept the expansion point
  double min_rank_ratio = 1.0;
};

struct ScaIterRow {
  int iter;
  double xi;
  std::string active_status;
  std::string passive_status;
  double min_rank_ratio;
};

struct ScaResult {
  BeamformingState beams;
  AssignmentState as;
  double xi = 0.0;
  bool converged = false;
  std::vector<ScaIterRow> trace;
};

struct ScaOptions {
  double epsilon = 1e-3;
  int max_outer = 50;
  // per-subproblem solver budget; SCA re-solves from warm starts, so the
  // ascent guard tolerates coarse inner solutions
  int solve_budget = 2000;
  double solve_tol_obj = 1e-4;
};

// Lifted active solve for one AP: beams with rate/slack constraints, rank
// constraint relaxed. Keeps the incumbent when the solve fails or does not
// improve the sum rate.
SubproblemResult active_subproblem(const ScaContext& ctx,
                                   const AssignmentState& as,
                                   const BeamformingState& beams, int b,
                                   RandomStream& rng,
                                   const ScaOptions& opts = {});

// SDR over all panel faces jointly (one lifted PSD variable with the
// energy-split diagonal pinning).
SubproblemResult passive_subproblem(const ScaContext& ctx,
                                    const AssignmentState& as,
                                    const BeamformingState& beams,
                                    RandomStream& rng,
                                    const ScaOptions& opts = {});

// Alternate active (per AP) and passive solves until |dXi| <= epsilon.
ScaResult sca_optimize(const ScaContext& ctx, const AssignmentState& as0,
                       const BeamformingState& beams0, RandomStream& rng,
                       const ScaOptions& opts = {});

// MRT toward each cluster's strongest member, equal power split across the
// AP's cluster slots.
std::vector<std::vector<VecC>> mrt_beams(const ChannelGrid& h,
                                         const AssignmentState& as,
                                         double p_max);
// beta = 1/2 everywhere, phases uniform random.
StarBeamMatrix random_star(const Topology& topo, RandomStream& rng);

}  // namespace starnoma

#endif  // STARNOMA_BEAMFORMING_HPP
