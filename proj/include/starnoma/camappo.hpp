#ifndef STARNOMA_CAMAPPO_HPP
#define STARNOMA_CAMAPPO_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "starnoma/beamforming.hpp"
#include "starnoma/bcd.hpp"
#include "starnoma/noma.hpp"

namespace starnoma {

using Vec = Eigen::VectorXd;

// Two hidden tanh layers, a Gaussian actor head (mean + state-independent
// log-stddev) and a scalar critic head, all stored in one flat parameter
// vector with hand-written backprop.
class PolicyNetwork {
 public:
  PolicyNetwork(int obs_dim, int act_dim, int hidden, RandomStream& rng,
                double init_log_std = -0.7);

  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }
  int hidden() const { return hidden_; }
  Vec& params() { return params_; }
  const Vec& params() const { return params_; }

  struct Forward {
    Vec obs, h1, h2, mean;
    double value = 0.0;
  };
  Forward forward(const Vec& obs) const;
  Vec log_std() const;

  // Accumulates dL/dparams into grad given the upstream seeds of one sample.
  void backward(const Forward& f, const Vec& d_mean, double d_value,
                const Vec& d_log_std, Vec& grad) const;

  double log_prob(const Vec& mean, const Vec& action) const;
  double entropy() const;  // state independent for a diagonal Gaussian
  Vec sample_action(const Vec& mean, RandomStream& rng) const;

 private:
  int obs_dim_, act_dim_, hidden_;
  Vec params_;
  // offsets into params_
  int w1_, b1_, w2_, b2_, wm_, bm_, wv_, bv_, ls_;
};

// hand-rolled Adam on a flat parameter vector
class Adam {
 public:
  Adam(int n, double lr) : lr_(lr), m_(Vec::Zero(n)), v_(Vec::Zero(n)) {}
  void step(Vec& params, const Vec& grad);

 private:
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  int t_ = 0;
  Vec m_, v_;
};

struct TrainConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  double c1 = 0.5;   // value coefficient
  double c2 = 0.01;  // entropy coefficient
  double lr = 3e-4;
  int minibatch = 64;
  int epochs = 4;
  int episodes = 200;
  int steps_per_episode = 10;
  int hidden = 128;
  double psi0 = 0.5;
  std::string psi_mode = "linear";  // linear | exponential | constant
  bool imitation = true;            // false -> plain multi-agent PPO
  bool fused_single_agent = false;  // true -> single-agent PPO baseline
  double init_log_std = -0.7;
  bool norm_advantage = true;
  int baseline_episodes = 16;

  int total_steps() const { return episodes * steps_per_episode; }
};

// --- loss pieces -----------------------------------------------------------

// A_hat_n = delta_n + gamma*lambda*A_hat_{n+1}; terminal value closes the
// recursion.
std::vector<double> gae(const std::vector<double>& rewards,
                        const std::vector<double>& values,
                        double terminal_value, double gamma, double lambda);

// min(r*A, clip(r, 1-eps, 1+eps)*A)
double clip_loss(double ratio, double advantage, double eps);

// mean squared error between action vectors
double ca_loss(const Vec& actions, const Vec& targets);

double imitation_schedule(long step, long total_steps, double psi0,
                          const std::string& mode);

inline double reward_min_rate(const RateReport& rep) { return rep.min_ue_rate; }

struct Sample {
  Vec obs;
  Vec action;       // raw action taken
  double logp_old;  // under the collecting policy
  double advantage;
  double ret;  // empirical return for the critic
  std::optional<Vec> ca_target;
};

struct LossParts {
  double clip = 0.0;     // maximized surrogate
  double trpo = 0.0;     // unclipped surrogate, diagnostic only
  double vf = 0.0;       // squared error
  double entropy = 0.0;
  double ca = 0.0;
  double total = 0.0;    // minimized combination
};

// L^PPO with optional gradient (psi = 0); total_loss adds psi * L^CA.
LossParts ppo_loss(const std::vector<Sample>& batch, const PolicyNetwork& net,
                   const TrainConfig& cfg, Vec* grad = nullptr);
LossParts total_loss(const std::vector<Sample>& batch, const PolicyNetwork& net,
                     const TrainConfig& cfg, double psi, Vec* grad = nullptr);

// --- environment -----------------------------------------------------------

// Raw-action geometry of a scenario: one block per AP for the beams and one
// block per panel for the surface coefficients.
struct ActionLayout {
  std::vector<int> slots_per_ap;
  int n_ant = 0;
  std::vector<int> elements_per_panel;
  double p_max = 0.0;

  int omega_dim() const;
  int phi_dim() const;
};

struct DecodedActions {
  std::vector<std::vector<VecC>> omega;
  std::vector<Eigen::VectorXd> beta_f, theta_f, theta_b;
};

// tanh-squash + per-AP power rescale for beams; logistic/angle-wrap for the
// surface. Decoded actions are feasible by construction.
DecodedActions decode_actions(const ActionLayout& lay, const Vec& raw_omega,
                              const Vec& raw_phi);
// Inverse of the squash maps (up to the per-AP power normalization).
Vec encode_omega(const ActionLayout& lay,
                 const std::vector<std::vector<VecC>>& omega);
Vec encode_phi(const ActionLayout& lay, const StarBeamMatrix& star);

// Fixed-horizon episodic environment: positions and channels are redrawn and
// two-stage matching re-run at each episode reset; a step applies decoded
// beams and pays the minimum UE rate.
class StarNomaEnv {
 public:
  explicit StarNomaEnv(const ScenarioConfig& cfg);

  void reset_episode(long episode);
  double step(const Vec& raw_omega, const Vec& raw_phi);

  Vec observation() const;
  int obs_dim() const;
  const ActionLayout& layout() const { return layout_; }

  const ScenarioConfig& config() const { return cfg_; }
  const Topology& topology() const { return topo_; }
  const AdjacencyIndicators& adjacency() const { return adj_; }
  const ChannelState& channels() const { return ch_; }
  const AssignmentState& assignment() const { return as_; }
  const BeamformingState& beams() const { return beams_; }
  ScaContext sca_context() const;

  long feasibility_checks() const { return feasibility_checks_; }
  long feasibility_violations() const { return feasibility_violations_; }

 private:
  ScenarioConfig cfg_;
  RandomStream master_;
  Topology topo_;
  AdjacencyIndicators adj_;
  ChannelState ch_;
  AssignmentState as_;
  BeamformingState beams_;
  ActionLayout layout_;
  long feasibility_checks_ = 0;
  long feasibility_violations_ = 0;
};

// --- training --------------------------------------------------------------

struct ImitationTargets {
  Vec raw_omega;
  Vec raw_phi;
};
using ImitationProvider =
    std::function<ImitationTargets(const StarNomaEnv& env, RandomStream& rng)>;

// Runs the convex-approximation pipeline from the env's current state and
// encodes the solution into raw-action space.
ImitationProvider make_sca_provider(const ScaOptions& opts = {});

struct TrainTraceRow {
  int update;
  int episode;
  long step;
  double reward;
  double loss_clip, loss_trpo, loss_vf, entropy, loss_ca, psi;
  double time_s;
};

struct TrainResult {
  std::vector<PolicyNetwork> nets;  // [omega, phi] or [fused]
  std::vector<TrainTraceRow> trace;
  std::vector<double> episode_rewards;
  double random_baseline = 0.0;
  double threshold = 0.0;
  long steps_to_threshold = 0;
  bool reached_threshold = false;
};

TrainResult train(StarNomaEnv& env, const TrainConfig& cfg,
                  const ImitationProvider& provider, RandomStream& rng);

// Mean per-step reward over eval episodes (deterministic policy when
// stochastic=false). Episode indices start at episode_offset.
double evaluate_policy(StarNomaEnv& env, const std::vector<PolicyNetwork>& nets,
                       const TrainConfig& cfg, int episodes,
                       long episode_offset, bool stochastic, RandomStream& rng);

// checkpoint: flat parameters with a small header
void save_checkpoint(const std::string& path,
                     const std::vector<PolicyNetwork>& nets,
                     std::uint64_t seed, std::uint64_t config_hash);
std::vector<PolicyNetwork> load_checkpoint(const std::string& path,
                                           std::uint64_t* seed = nullptr,
                                           std::uint64_t* config_hash = nullptr);

}  // namespace starnoma

#endif  // STARNOMA_CAMAPPO_HPP
