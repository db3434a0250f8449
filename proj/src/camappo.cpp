#include "starnoma/camappo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace starnoma {

namespace {

double wrap_two_pi(double t) {
  t = std::fmod(t, 2.0 * M_PI);
  if (t < 0.0) t += 2.0 * M_PI;
  if (t >= 2.0 * M_PI) t = 0.0;  // fmod rounding guard
  return t;
}

constexpr double kLog2Pi = 1.8378770664093453;  // ln(2*pi)

}  // namespace

// --- network ----------------------------------------------------------------

PolicyNetwork::PolicyNetwork(int obs_dim, int act_dim, int hidden,
                             RandomStream& rng, double init_log_std)
    : obs_dim_(obs_dim), act_dim_(act_dim), hidden_(hidden) {
  w1_ = 0;
  b1_ = w1_ + hidden * obs_dim;
  w2_ = b1_ + hidden;
  b2_ = w2_ + hidden * hidden;
  wm_ = b2_ + hidden;
  bm_ = wm_ + act_dim * hidden;
  wv_ = bm_ + act_dim;
  bv_ = wv_ + hidden;
  ls_ = bv_ + 1;
  params_ = Vec::Zero(ls_ + act_dim);

  auto fill = [&](int off, int rows, int cols, double scale) {
    for (int i = 0; i < rows * cols; ++i)
      params_(off + i) = rng.normal() * scale;
  };
  fill(w1_, hidden_, obs_dim_, 1.0 / std::sqrt(static_cast<double>(obs_dim_)));
  fill(w2_, hidden_, hidden_, 1.0 / std::sqrt(static_cast<double>(hidden_)));
  // small actor head keeps the initial policy near zero mean
  fill(wm_, act_dim_, hidden_, 0.01 / std::sqrt(static_cast<double>(hidden_)));
  fill(wv_, 1, hidden_, 1.0 / std::sqrt(static_cast<double>(hidden_)));
  for (int i = 0; i < act_dim_; ++i) params_(ls_ + i) = init_log_std;
}

PolicyNetwork::Forward PolicyNetwork::forward(const Vec& obs) const {
  using MapM = Eigen::Map<const Eigen::MatrixXd>;
  using MapV = Eigen::Map<const Vec>;
  MapM W1(params_.data() + w1_, hidden_, obs_dim_);
  MapV B1(params_.data() + b1_, hidden_);
  MapM W2(params_.data() + w2_, hidden_, hidden_);
  MapV B2(params_.data() + b2_, hidden_);
  MapM Wm(params_.data() + wm_, act_dim_, hidden_);
  MapV Bm(params_.data() + bm_, act_dim_);
  MapV Wv(params_.data() + wv_, hidden_);

  Forward f;
  f.obs = obs;
  f.h1 = (W1 * obs + B1).array().tanh();
  f.h2 = (W2 * f.h1 + B2).array().tanh();
  f.mean = Wm * f.h2 + Bm;
  f.value = Wv.dot(f.h2) + params_(bv_);
  return f;
}

Vec PolicyNetwork::log_std() const { return params_.segment(ls_, act_dim_); }

void PolicyNetwork::backward(const Forward& f, const Vec& d_mean,
                             double d_value, const Vec& d_log_std,
                             Vec& grad) const {
  using MapM = Eigen::Map<const Eigen::MatrixXd>;
  using GMapM = Eigen::Map<Eigen::MatrixXd>;
  using GMapV = Eigen::Map<Vec>;
  MapM W2(params_.data() + w2_, hidden_, hidden_);
  MapM Wm(params_.data() + wm_, act_dim_, hidden_);
  Eigen::Map<const Vec> Wv(params_.data() + wv_, hidden_);

  GMapM gW1(grad.data() + w1_, hidden_, obs_dim_);
  GMapV gB1(grad.data() + b1_, hidden_);
  GMapM gW2(grad.data() + w2_, hidden_, hidden_);
  GMapV gB2(grad.data() + b2_, hidden_);
  GMapM gWm(grad.data() + wm_, act_dim_, hidden_);
  GMapV gBm(grad.data() + bm_, act_dim_);
  GMapV gWv(grad.data() + wv_, hidden_);
  GMapV gLs(grad.data() + ls_, act_dim_);

  gWm.noalias() += d_mean * f.h2.transpose();
  gBm += d_mean;
  gWv += d_value * f.h2;
  grad(bv_) += d_value;
  gLs += d_log_std;

  Vec dh2 = Wm.transpose() * d_mean + d_value * Wv;
  Vec dz2 = dh2.array() * (1.0 - f.h2.array().square());
  gW2.noalias() += dz2 * f.h1.transpose();
  gB2 += dz2;

  Vec dh1 = W2.transpose() * dz2;
  Vec dz1 = dh1.array() * (1.0 - f.h1.array().square());
  gW1.noalias() += dz1 * f.obs.transpose();
  gB1 += dz1;
}

double PolicyNetwork::log_prob(const Vec& mean, const Vec& action) const {
  Vec ls = log_std();
  double lp = -0.5 * act_dim_ * kLog2Pi;
  for (int i = 0; i < act_dim_; ++i) {
    double s = std::exp(ls(i));
    double z = (action(i) - mean(i)) / s;
    lp += -0.5 * z * z - ls(i);
  }
  return lp;
}

double PolicyNetwork::entropy() const {
  Vec ls = log_std();
  return ls.sum() + 0.5 * act_dim_ * (kLog2Pi + 1.0);
}

Vec PolicyNetwork::sample_action(const Vec& mean, RandomStream& rng) const {
  Vec ls = log_std();
  Vec a(act_dim_);
  for (int i = 0; i < act_dim_; ++i)
    a(i) = mean(i) + std::exp(ls(i)) * rng.normal();
  return a;
}

void Adam::step(Vec& params, const Vec& grad) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_.array() + (1.0 - beta2_) * grad.array().square();
  double bc1 = 1.0 - std::pow(beta1_, t_);
  double bc2 = 1.0 - std::pow(beta2_, t_);
  params.array() -=
      lr_ * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + eps_);
}

// --- loss pieces -------------------------------------------------------------

std::vector<double> gae(const std::vector<double>& rewards,
                        const std::vector<double>& values,
                        double terminal_value, double gamma, double lambda) {
  const int n = static_cast<int>(rewards.size());
  std::vector<double> adv(n, 0.0);
  double next_adv = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    double next_v = t + 1 < n ? values[t + 1] : terminal_value;
    double delta = rewards[t] + gamma * next_v - values[t];
    next_adv = delta + gamma * lambda * next_adv;
    adv[t] = next_adv;
  }
  return adv;
}

double clip_loss(double ratio, double advantage, double eps) {
  double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  return std::min(ratio * advantage, clipped * advantage);
}

double ca_loss(const Vec& actions, const Vec& targets) {
  if (actions.size() != targets.size())
    throw std::invalid_argument("ca_loss: dimension mismatch");
  if (actions.size() == 0) return 0.0;
  return (targets - actions).squaredNorm() / actions.size();
}

double imitation_schedule(long step, long total_steps, double psi0,
                          const std::string& mode) {
  if (step > total_steps)
    throw std::invalid_argument("imitation_schedule: step > total_steps");
  if (mode == "constant") return psi0;
  double frac = total_steps > 0 ? static_cast<double>(step) / total_steps : 1.0;
  if (mode == "linear") return psi0 * (1.0 - frac);
  if (mode == "exponential") return psi0 * std::exp(-5.0 * frac);
  throw std::invalid_argument("imitation_schedule: unknown mode " + mode);
}

LossParts total_loss(const std::vector<Sample>& batch, const PolicyNetwork& net,
                     const TrainConfig& cfg, double psi, Vec* grad) {
  if (batch.empty()) throw std::invalid_argument("loss: empty batch");
  LossParts parts;
  const int n = static_cast<int>(batch.size());
  const Vec ls = net.log_std();
  const Vec sigma2 = (2.0 * ls.array()).exp();

  for (const Sample& s : batch) {
    PolicyNetwork::Forward f = net.forward(s.obs);
    double logp = net.log_prob(f.mean, s.action);
    double ratio = std::exp(logp - s.logp_old);
    double surr1 = ratio * s.advantage;
    double clipped = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
    double surr2 = clipped * s.advantage;
    parts.trpo += surr1 / n;
    parts.clip += std::min(surr1, surr2) / n;
    double verr = f.value - s.ret;
    parts.vf += verr * verr / n;
    parts.entropy += net.entropy() / n;
    double ca = s.ca_target ? ca_loss(f.mean, *s.ca_target) : 0.0;
    parts.ca += ca / n;

    if (grad) {
      Vec d_mean = Vec::Zero(net.act_dim());
      Vec d_ls = Vec::Zero(net.act_dim());
      if (surr1 <= surr2) {
        // unclipped branch active: differentiate ratio * advantage
        Vec z = (s.action - f.mean).array() / sigma2.array();
        d_mean -= (s.advantage * ratio) * z;
        Vec dls = (s.action - f.mean).array().square() / sigma2.array() - 1.0;
        d_ls -= (s.advantage * ratio) * dls;
      }
      d_ls.array() -= cfg.c2;  // entropy bonus
      if (s.ca_target && psi != 0.0)
        d_mean += (2.0 * psi / net.act_dim()) * (f.mean - *s.ca_target);
      double d_value = cfg.c1 * 2.0 * verr;
      net.backward(f, d_mean / n, d_value / n, d_ls / n, *grad);
    }
  }
  parts.total = -parts.clip + cfg.c1 * parts.vf - cfg.c2 * parts.entropy +
                psi * parts.ca;
  return parts;
}

LossParts ppo_loss(const std::vector<Sample>& batch, const PolicyNetwork& net,
                   const TrainConfig& cfg, Vec* grad) {
  return total_loss(batch, net, cfg, 0.0, grad);
}

// --- action codec ------------------------------------------------------------

int ActionLayout::omega_dim() const {
  int d = 0;
  for (int s : slots_per_ap) d += s * n_ant * 2;
  return d;
}

int ActionLayout::phi_dim() const {
  int d = 0;
  for (int m : elements_per_panel) d += 3 * m;
  return d;
}

DecodedActions decode_actions(const ActionLayout& lay, const Vec& raw_omega,
                              const Vec& raw_phi) {
  if (raw_omega.size() != lay.omega_dim() || raw_phi.size() != lay.phi_dim())
    throw std::invalid_argument("decode_actions: raw dimension mismatch");
  DecodedActions d;
  int idx = 0;
  for (size_t b = 0; b < lay.slots_per_ap.size(); ++b) {
    int len = lay.slots_per_ap[b] * lay.n_ant * 2;
    Vec x(len);
    for (int i = 0; i < len; ++i) x(i) = std::tanh(raw_omega(idx + i));
    double nrm = x.norm();
    if (nrm < 1e-9) {
      x.setOnes();
      nrm = x.norm();
    }
    double scale = std::sqrt(lay.p_max) / nrm;
    std::vector<VecC> beams(lay.slots_per_ap[b]);
    int j = 0;
    for (int k = 0; k < lay.slots_per_ap[b]; ++k) {
      VecC w(lay.n_ant);
      for (int a = 0; a < lay.n_ant; ++a, j += 2)
        w(a) = scale * cd(x(j), x(j + 1));
      beams[k] = w;
    }
    d.omega.push_back(std::move(beams));
    idx += len;
  }

  int p = 0;
  for (size_t l = 0; l < lay.elements_per_panel.size(); ++l) {
    int m = lay.elements_per_panel[l];
    Eigen::VectorXd bf(m), tf(m), tb(m);
    for (int i = 0; i < m; ++i)
      bf(i) = 1.0 / (1.0 + std::exp(-raw_phi(p + i)));
    for (int i = 0; i < m; ++i)
      tf(i) = wrap_two_pi(raw_phi(p + m + i) * M_PI + M_PI);
    for (int i = 0; i < m; ++i)
      tb(i) = wrap_two_pi(raw_phi(p + 2 * m + i) * M_PI + M_PI);
    d.beta_f.push_back(bf);
    d.theta_f.push_back(tf);
    d.theta_b.push_back(tb);
    p += 3 * m;
  }
  return d;
}

Vec encode_omega(const ActionLayout& lay,
                 const std::vector<std::vector<VecC>>& omega) {
  Vec raw = Vec::Zero(lay.omega_dim());
  int idx = 0;
  for (size_t b = 0; b < lay.slots_per_ap.size(); ++b) {
    int slots = lay.slots_per_ap[b];
    int len = slots * lay.n_ant * 2;
    Vec e = Vec::Zero(len);
    double power = 0.0;
    std::vector<int> dead;
    for (int k = 0; k < slots; ++k) {
      const VecC& w = omega[b][k];
      double pk = w.size() ? w.squaredNorm() : 0.0;
      power += pk;
      if (pk < 1e-15) dead.push_back(k);
      for (int a = 0; a < lay.n_ant && a < w.size(); ++a) {
        e(k * lay.n_ant * 2 + 2 * a) = w(a).real();
        e(k * lay.n_ant * 2 + 2 * a + 1) = w(a).imag();
      }
    }
    // the decoder re-normalizes to full power, so park any unused power on
    // idle slots to keep the live beams reproduced exactly
    double deficit = lay.p_max - power;
    if (deficit > 1e-12 && !dead.empty()) {
      double per = std::sqrt(deficit / (dead.size() * lay.n_ant * 2));
      for (int k : dead)
        for (int i = 0; i < lay.n_ant * 2; ++i)
          e(k * lay.n_ant * 2 + i) = per;
    } else if (deficit > 1e-12 && power > 1e-15) {
      e *= std::sqrt(lay.p_max / power);
    }
    double mx = e.cwiseAbs().maxCoeff();
    if (mx > 1e-12) {
      double c = 0.95 / mx;
      for (int i = 0; i < len; ++i) raw(idx + i) = std::atanh(e(i) * c);
    }
    idx += len;
  }
  return raw;
}

Vec encode_phi(const ActionLayout& lay, const StarBeamMatrix& star) {
  Vec raw = Vec::Zero(lay.phi_dim());
  int p = 0;
  for (size_t l = 0; l < lay.elements_per_panel.size(); ++l) {
    int m = lay.elements_per_panel[l];
    for (int i = 0; i < m; ++i) {
      double bf = std::clamp(star.beta_f[l](i), 1e-6, 1.0 - 1e-6);
      raw(p + i) = std::log(bf / (1.0 - bf));
      raw(p + m + i) = (star.theta_f[l](i) - M_PI) / M_PI;
      raw(p + 2 * m + i) = (star.theta_b[l](i) - M_PI) / M_PI;
    }
    p += 3 * m;
  }
  return raw;
}

// --- environment -------------------------------------------------------------

StarNomaEnv::StarNomaEnv(const ScenarioConfig& cfg)
    : cfg_(cfg), master_(cfg.seed) {
  cfg_.validate();
  layout_.slots_per_ap.assign(cfg_.num_aps, cfg_.clusters_per_ap);
  layout_.n_ant = cfg_.antennas_per_ap;
  layout_.elements_per_panel.assign(cfg_.num_ris, cfg_.elements_per_panel());
  layout_.p_max = cfg_.p_max_w;
  reset_episode(0);
}

ScaContext StarNomaEnv::sca_context() const {
  return ScaContext{adj_, ch_, cfg_.p_max_w, cfg_.r_min};
}

void StarNomaEnv::reset_episode(long episode) {
  RandomStream ue_stream =
      master_.substream("ue-pos", static_cast<std::uint64_t>(episode));
  topo_ = build_topology(cfg_, ue_stream);
  adj_ = derive_adjacency(topo_);
  RandomStream ch_stream =
      master_.substream("channel", static_cast<std::uint64_t>(episode));
  ch_ = draw_channels(topo_, adj_, cfg_, ch_stream);
  RandomStream init_stream =
      master_.substream("episode-init", static_cast<std::uint64_t>(episode));
  ScaContext ctx{adj_, ch_, cfg_.p_max_w, cfg_.r_min};
  InitialState st = two_stage_matching(ctx, cfg_, topo_, init_stream);
  as_ = std::move(st.as);
  beams_ = std::move(st.beams);
}

double StarNomaEnv::step(const Vec& raw_omega, const Vec& raw_phi) {
  DecodedActions d = decode_actions(layout_, raw_omega, raw_phi);

  // every decoded action must satisfy the feasibility set exactly
  ++feasibility_checks_;
  bool ok = true;
  for (size_t b = 0; b < d.omega.size(); ++b) {
    double pw = 0.0;
    for (const VecC& w : d.omega[b]) pw += w.squaredNorm();
    if (std::abs(pw - cfg_.p_max_w) > 1e-9 * cfg_.p_max_w) ok = false;
  }
  for (size_t l = 0; l < d.beta_f.size(); ++l)
    for (int m = 0; m < d.beta_f[l].size(); ++m) {
      double bf = d.beta_f[l](m);
      if (bf + (1.0 - bf) != 1.0 || bf < 0.0 || bf > 1.0) ok = false;
      if (d.theta_f[l](m) < 0.0 || d.theta_f[l](m) >= 2.0 * M_PI) ok = false;
      if (d.theta_b[l](m) < 0.0 || d.theta_b[l](m) >= 2.0 * M_PI) ok = false;
    }
  if (!ok) ++feasibility_violations_;

  beams_.omega = std::move(d.omega);
  beams_.star.beta_f = std::move(d.beta_f);
  beams_.star.theta_f = std::move(d.theta_f);
  beams_.star.theta_b = std::move(d.theta_b);

  ChannelGrid h = combined_channels(ch_, adj_, beams_.star);
  refresh_decoding_order(h, as_, beams_, ch_.sigma2);
  RateReport rep = rate_report(h, as_, beams_, ch_.sigma2);
  return reward_min_rate(rep);
}

int StarNomaEnv::obs_dim() const {
  const int B = cfg_.num_aps;
  const int U = cfg_.num_ues;
  int slots = 0;
  for (int s : layout_.slots_per_ap) slots += s;
  return B * U + slots * U + layout_.omega_dim() + layout_.phi_dim() +
         B * U * layout_.n_ant * 2;
}

Vec StarNomaEnv::observation() const {
  const int B = cfg_.num_aps;
  const int U = cfg_.num_ues;
  Vec obs = Vec::Zero(obs_dim());
  int p = 0;
  Eigen::MatrixXi alpha = as_.alpha();
  for (int b = 0; b < B; ++b)
    for (int u = 0; u < U; ++u) obs(p++) = alpha(b, u);
  for (int b = 0; b < B; ++b)
    for (int k = 0; k < as_.num_slots(b); ++k) {
      for (int u : as_.clusters[b][k]) obs(p + u) = 1.0;
      p += U;
    }
  for (int b = 0; b < B; ++b)
    for (const VecC& w : beams_.omega[b])
      for (int a = 0; a < layout_.n_ant; ++a) {
        obs(p++) = a < w.size() ? w(a).real() : 0.0;
        obs(p++) = a < w.size() ? w(a).imag() : 0.0;
      }
  for (int l = 0; l < beams_.star.panels(); ++l) {
    int m = static_cast<int>(beams_.star.beta_f[l].size());
    for (int i = 0; i < m; ++i) obs(p++) = beams_.star.beta_f[l](i);
    for (int i = 0; i < m; ++i) obs(p++) = beams_.star.theta_f[l](i);
    for (int i = 0; i < m; ++i) obs(p++) = beams_.star.theta_b[l](i);
  }
  double inv_sigma = 1.0 / std::sqrt(ch_.sigma2);
  ChannelGrid h = combined_channels(ch_, adj_, beams_.star);
  for (int b = 0; b < B; ++b)
    for (int u = 0; u < U; ++u)
      for (int a = 0; a < layout_.n_ant; ++a) {
        obs(p++) = h[b][u](a).real() * inv_sigma;
        obs(p++) = h[b][u](a).imag() * inv_sigma;
      }
  return obs;
}

// --- training ----------------------------------------------------------------

ImitationProvider make_sca_provider(const ScaOptions& opts) {
  return [opts](const StarNomaEnv& env, RandomStream& rng) {
    ScaContext ctx = env.sca_context();
    ScaResult r =
        sca_optimize(ctx, env.assignment(), env.beams(), rng, opts);
    ImitationTargets t;
    t.raw_omega = encode_omega(env.layout(), r.beams.omega);
    t.raw_phi = encode_phi(env.layout(), r.beams.star);
    return t;
  };
}

namespace {

struct AgentRollout {
  std::vector<Sample> samples;
  std::vector<double> values;
};

double trailing_mean(const std::vector<double>& v, int window) {
  if (v.empty()) return 0.0;
  int n = std::min<int>(window, static_cast<int>(v.size()));
  double s = 0.0;
  for (int i = static_cast<int>(v.size()) - n; i < static_cast<int>(v.size());
       ++i)
    s += v[i];
  return s / n;
}

}  // namespace

double evaluate_policy(StarNomaEnv& env, const std::vector<PolicyNetwork>& nets,
                       const TrainConfig& cfg, int episodes,
                       long episode_offset, bool stochastic,
                       RandomStream& rng) {
  const int od = env.layout().omega_dim();
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    env.reset_episode(episode_offset + e);
    RandomStream act_rng = rng.substream("eval-act", e);
    double ep = 0.0;
    for (int n = 0; n < cfg.steps_per_episode; ++n) {
      Vec obs = env.observation();
      Vec raw;
      if (nets.size() == 1) {
        PolicyNetwork::Forward f = nets[0].forward(obs);
        raw = stochastic ? nets[0].sample_action(f.mean, act_rng) : f.mean;
      } else {
        PolicyNetwork::Forward fo = nets[0].forward(obs);
        PolicyNetwork::Forward fp = nets[1].forward(obs);
        Vec ao = stochastic ? nets[0].sample_action(fo.mean, act_rng) : fo.mean;
        Vec ap = stochastic ? nets[1].sample_action(fp.mean, act_rng) : fp.mean;
        raw = Vec(ao.size() + ap.size());
        raw << ao, ap;
      }
      ep += env.step(raw.head(od), raw.tail(raw.size() - od));
    }
    total += ep / cfg.steps_per_episode;
  }
  return episodes > 0 ? total / episodes : 0.0;
}

TrainResult train(StarNomaEnv& env, const TrainConfig& cfg,
                  const ImitationProvider& provider, RandomStream& rng) {
  const int od = env.layout().omega_dim();
  const int pd = env.layout().phi_dim();
  const int obs_dim = env.obs_dim();

  TrainResult out;
  std::vector<int> act_dims;
  if (cfg.fused_single_agent) {
    act_dims = {od + pd};
  } else {
    act_dims = {od, pd};
  }
  for (size_t i = 0; i < act_dims.size(); ++i) {
    RandomStream init = rng.substream("net-init", i);
    out.nets.emplace_back(obs_dim, act_dims[i], cfg.hidden, init,
                          cfg.init_log_std);
  }

  // frozen random policy baseline, measured in the same harness
  {
    RandomStream base_rng = rng.substream("baseline", 0);
    out.random_baseline =
        evaluate_policy(env, out.nets, cfg, cfg.baseline_episodes, 1000000,
                        true, base_rng);
  }
  out.threshold = 1.2 * out.random_baseline;
  out.steps_to_threshold = cfg.total_steps();

  std::vector<Adam> opts;
  for (const PolicyNetwork& n : out.nets)
    opts.emplace_back(static_cast<int>(n.params().size()), cfg.lr);

  const bool imitating = cfg.imitation && provider != nullptr;
  RandomStream act_rng = rng.substream("actions", 0);
  RandomStream target_rng = rng.substream("imitation", 0);
  long global_step = 0;
  auto t0 = std::chrono::steady_clock::now();

  for (int ep = 0; ep < cfg.episodes; ++ep) {
    env.reset_episode(ep);

    std::optional<ImitationTargets> targets;
    if (imitating) targets = provider(env, target_rng);

    std::vector<AgentRollout> rolls(out.nets.size());
    std::vector<double> rewards;
    for (int n = 0; n < cfg.steps_per_episode; ++n) {
      Vec obs = env.observation();
      std::vector<Vec> actions(out.nets.size());
      for (size_t a = 0; a < out.nets.size(); ++a) {
        PolicyNetwork::Forward f = out.nets[a].forward(obs);
        Vec act = out.nets[a].sample_action(f.mean, act_rng);
        Sample s;
        s.obs = obs;
        s.action = act;
        s.logp_old = out.nets[a].log_prob(f.mean, act);
        if (targets) {
          if (out.nets.size() == 1) {
            Vec t(od + pd);
            t << targets->raw_omega, targets->raw_phi;
            s.ca_target = t;
          } else {
            s.ca_target = a == 0 ? targets->raw_omega : targets->raw_phi;
          }
        }
        rolls[a].values.push_back(f.value);
        rolls[a].samples.push_back(std::move(s));
        actions[a] = std::move(act);
      }
      Vec raw;
      if (out.nets.size() == 1) {
        raw = actions[0];
      } else {
        raw = Vec(od + pd);
        raw << actions[0], actions[1];
      }
      double r = env.step(raw.head(od), raw.tail(pd));
      rewards.push_back(r);
      ++global_step;
    }

    double ep_reward =
        std::accumulate(rewards.begin(), rewards.end(), 0.0) / rewards.size();
    out.episode_rewards.push_back(ep_reward);
    if (!out.reached_threshold &&
        trailing_mean(out.episode_rewards, 10) >= out.threshold) {
      out.reached_threshold = true;
      out.steps_to_threshold = global_step;
    }

    double psi = imitating
                     ? imitation_schedule(global_step, cfg.total_steps(),
                                          cfg.psi0, cfg.psi_mode)
                     : 0.0;

    LossParts mean_parts;
    int part_count = 0;
    for (size_t a = 0; a < out.nets.size(); ++a) {
      AgentRollout& roll = rolls[a];
      std::vector<double> adv =
          gae(rewards, roll.values, 0.0, cfg.gamma, cfg.gae_lambda);
      for (size_t i = 0; i < roll.samples.size(); ++i) {
        roll.samples[i].advantage = adv[i];
        roll.samples[i].ret = adv[i] + roll.values[i];
      }
      if (cfg.norm_advantage && roll.samples.size() > 1) {
        double m = 0.0, m2 = 0.0;
        for (const Sample& s : roll.samples) m += s.advantage;
        m /= roll.samples.size();
        for (const Sample& s : roll.samples)
          m2 += (s.advantage - m) * (s.advantage - m);
        double sd = std::sqrt(m2 / roll.samples.size()) + 1e-8;
        for (Sample& s : roll.samples) s.advantage = (s.advantage - m) / sd;
      }

      const int batch = static_cast<int>(roll.samples.size());
      const int mb = std::min(cfg.minibatch, batch);
      std::vector<int> idx(batch);
      std::iota(idx.begin(), idx.end(), 0);
      RandomStream shuffle_rng =
          rng.substream("shuffle", static_cast<std::uint64_t>(ep) * 16 + a);
      for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (int i = batch - 1; i > 0; --i) {
          int j = static_cast<int>(shuffle_rng.uniform_int(i + 1));
          std::swap(idx[i], idx[j]);
        }
        for (int start = 0; start < batch; start += mb) {
          std::vector<Sample> minibatch;
          for (int i = start; i < std::min(start + mb, batch); ++i)
            minibatch.push_back(roll.samples[idx[i]]);
          Vec grad = Vec::Zero(out.nets[a].params().size());
          LossParts parts =
              total_loss(minibatch, out.nets[a], cfg, psi, &grad);
          if (!std::isfinite(parts.total))
            throw std::runtime_error(
                "train: non-finite loss at step " + std::to_string(global_step));
          opts[a].step(out.nets[a].params(), grad);
          mean_parts.clip += parts.clip;
          mean_parts.trpo += parts.trpo;
          mean_parts.vf += parts.vf;
          mean_parts.entropy += parts.entropy;
          mean_parts.ca += parts.ca;
          ++part_count;
        }
      }
    }

    double dt = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    TrainTraceRow row;
    row.update = ep;
    row.episode = ep;
    row.step = global_step;
    row.reward = ep_reward;
    row.loss_clip = part_count ? mean_parts.clip / part_count : 0.0;
    row.loss_trpo = part_count ? mean_parts.trpo / part_count : 0.0;
    row.loss_vf = part_count ? mean_parts.vf / part_count : 0.0;
    row.entropy = part_count ? mean_parts.entropy / part_count : 0.0;
    row.loss_ca = part_count ? mean_parts.ca / part_count : 0.0;
    row.psi = psi;
    row.time_s = dt;
    out.trace.push_back(row);
  }
  return out;
}

// --- checkpoints ---------------------------------------------------------------

void save_checkpoint(const std::string& path,
                     const std::vector<PolicyNetwork>& nets,
                     std::uint64_t seed, std::uint64_t config_hash) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint for write: " + path);
  const char magic[8] = {'S', 'N', 'C', 'K', 'P', 'T', '1', '\n'};
  f.write(magic, 8);
  auto w64 = [&](std::uint64_t v) {
    f.write(reinterpret_cast<const char*>(&v), 8);
  };
  w64(seed);
  w64(config_hash);
  w64(nets.size());
  for (const PolicyNetwork& n : nets) {
    w64(n.obs_dim());
    w64(n.act_dim());
    w64(n.hidden());
    w64(n.params().size());
    f.write(reinterpret_cast<const char*>(n.params().data()),
            n.params().size() * sizeof(double));
  }
}

std::vector<PolicyNetwork> load_checkpoint(const std::string& path,
                                           std::uint64_t* seed,
                                           std::uint64_t* config_hash) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  f.read(magic, 8);
  if (std::string(magic, 8) != "SNCKPT1\n")
    throw std::runtime_error("bad checkpoint magic in " + path);
  auto r64 = [&]() {
    std::uint64_t v;
    f.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  std::uint64_t s = r64(), h = r64();
  if (seed) *seed = s;
  if (config_hash) *config_hash = h;
  std::uint64_t count = r64();
  std::vector<PolicyNetwork> nets;
  RandomStream dummy(0);
  for (std::uint64_t i = 0; i < count; ++i) {
    int obs = static_cast<int>(r64());
    int act = static_cast<int>(r64());
    int hid = static_cast<int>(r64());
    std::uint64_t np = r64();
    PolicyNetwork net(obs, act, hid, dummy);
    if (np != static_cast<std::uint64_t>(net.params().size()))
      throw std::runtime_error("checkpoint parameter count mismatch");
    f.read(reinterpret_cast<char*>(net.params().data()), np * sizeof(double));
    nets.push_back(std::move(net));
  }
  if (!f) throw std::runtime_error("truncated checkpoint: " + path);
  return nets;
}

}  // namespace starnoma
