#include "starnoma/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace starnoma {

namespace fs = std::filesystem;

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + tmp);
    f << content;
  }
  fs::rename(tmp, path);
}

std::uint64_t config_hash(const ScenarioConfig& cfg) {
  std::string text = dump_config(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open csv: " + path);
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      t.header = cells;
      first = false;
    } else {
      t.rows.push_back(cells);
    }
  }
  return t;
}

namespace {

double now_between(const std::chrono::steady_clock::time_point& a,
                   const std::chrono::steady_clock::time_point& b) {
  return std::chrono::duration<double>(b - a).count();
}

std::string rate_report_csv(const RateReport& rep) { return rep.to_csv(); }

std::string bcd_trace_csv(const BcdResult& res) {
  std::ostringstream o;
  o << "iter,xi,assoc_status,pairing_status,order_status,beam_status,"
       "rmin_violations\n";
  for (const BcdTraceRow& r : res.trace)
    o << r.iter << "," << fmt_num(r.xi) << "," << r.assoc_status << ","
      << r.pairing_status << "," << r.order_status << "," << r.beam_status
      << "," << r.rmin_violations << "\n";
  return o.str();
}

std::string sca_trace_csv(const std::vector<ScaIterRow>& rows) {
  std::ostringstream o;
  o << "iter,xi,active_status,passive_status,min_rank_ratio\n";
  for (const ScaIterRow& r : rows)
    o << r.iter << "," << fmt_num(r.xi) << "," << r.active_status << ","
      << r.passive_status << "," << fmt_num(r.min_rank_ratio) << "\n";
  return o.str();
}

std::string train_trace_csv(const std::vector<TrainTraceRow>& rows) {
  std::ostringstream o;
  o << "update,episode,step,reward,loss_clip,loss_trpo,loss_vf,entropy,"
       "loss_ca,psi,time_s\n";
  for (const TrainTraceRow& r : rows)
    o << r.update << "," << r.episode << "," << r.step << ","
      << fmt_num(r.reward) << "," << fmt_num(r.loss_clip) << ","
      << fmt_num(r.loss_trpo) << "," << fmt_num(r.loss_vf) << ","
      << fmt_num(r.entropy) << "," << fmt_num(r.loss_ca) << ","
      << fmt_num(r.psi) << "," << fmt_num(r.time_s) << "\n";
  return o.str();
}

std::string channels_csv(const ChannelState& ch) {
  std::ostringstream o;
  o << "kind,b,l,u,row,col,re,im\n";
  auto emit = [&](const char* kind, int b, int l, int u, int r, int c, cd v) {
    o << kind << "," << b << "," << l << "," << u << "," << r << "," << c
      << "," << fmt_num(v.real()) << "," << fmt_num(v.imag()) << "\n";
  };
  for (size_t b = 0; b < ch.h_direct.size(); ++b)
    for (size_t u = 0; u < ch.h_direct[b].size(); ++u)
      for (int i = 0; i < ch.h_direct[b][u].size(); ++i)
        emit("h_bu", b, -1, u, i, 0, ch.h_direct[b][u](i));
  for (size_t b = 0; b < ch.g_ap_ris.size(); ++b)
    for (size_t l = 0; l < ch.g_ap_ris[b].size(); ++l)
      for (int i = 0; i < ch.g_ap_ris[b][l].rows(); ++i)
        for (int j = 0; j < ch.g_ap_ris[b][l].cols(); ++j)
          emit("g_bl", b, l, -1, i, j, ch.g_ap_ris[b][l](i, j));
  for (size_t l = 0; l < ch.g_ris_ue.size(); ++l)
    for (size_t u = 0; u < ch.g_ris_ue[l].size(); ++u)
      for (int i = 0; i < ch.g_ris_ue[l][u].size(); ++i)
        emit("g_lu", -1, l, u, i, 0, ch.g_ris_ue[l][u](i));
  return o.str();
}

struct SummaryRow {
  std::string algo;
  double p_max;
  std::uint64_t seed;
  double mean_rate;
  double min_rate;
  long steps_to_threshold;
  int reached;
  double time_train_s;
  double time_infer_s;
  double time_sca_s;
};

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream o;
  o << "algorithm,p_max_w,seed,mean_rate,min_rate,steps_to_threshold,"
       "reached,time_train_s,time_infer_s,time_sca_s\n";
  for (const SummaryRow& r : rows)
    o << r.algo << "," << fmt_num(r.p_max) << "," << r.seed << ","
      << fmt_num(r.mean_rate) << "," << fmt_num(r.min_rate) << ","
      << r.steps_to_threshold << "," << r.reached << ","
      << fmt_num(r.time_train_s) << "," << fmt_num(r.time_infer_s) << ","
      << fmt_num(r.time_sca_s) << "\n";
  return o.str();
}

std::string run_tag(const std::string& algo, std::uint64_t seed,
                    double p_max) {
  std::ostringstream o;
  o << algo << "_s" << seed << "_p" << fmt_num(p_max);
  return o.str();
}

TrainConfig train_config_for(const ExperimentSpec& spec,
                             const ScenarioConfig& cfg) {
  (void)cfg;
  TrainConfig tc;
  tc.episodes = static_cast<int>(spec.budget / tc.steps_per_episode);
  if (spec.algo == "camappo") {
    tc.imitation = true;
  } else if (spec.algo == "mappo") {
    tc.imitation = false;
  } else if (spec.algo == "ppo") {
    tc.imitation = false;
    tc.fused_single_agent = true;
  }
  return tc;
}

// mean UE throughput / min rate of the policy on fresh eval instances, plus
// wall-time per policy inference and per fresh convex solve
struct EvalMetrics {
  double mean_rate = 0.0;
  double min_rate = 0.0;
  double time_infer_s = 0.0;
  double time_sca_s = 0.0;
};

EvalMetrics eval_policy_metrics(StarNomaEnv& env,
                                const std::vector<PolicyNetwork>& nets,
                                const TrainConfig& tc, int episodes,
                                long offset) {
  EvalMetrics m;
  const int od = env.layout().omega_dim();
  int infer_count = 0;
  for (int e = 0; e < episodes; ++e) {
    env.reset_episode(offset + e);
    double ep_min = 0.0, ep_mean = 0.0;
    for (int n = 0; n < tc.steps_per_episode; ++n) {
      Vec obs = env.observation();
      auto t0 = std::chrono::steady_clock::now();
      Vec raw;
      if (nets.size() == 1) {
        raw = nets[0].forward(obs).mean;
      } else {
        Vec ao = nets[0].forward(obs).mean;
        Vec ap = nets[1].forward(obs).mean;
        raw = Vec(ao.size() + ap.size());
        raw << ao, ap;
      }
      auto t1 = std::chrono::steady_clock::now();
      m.time_infer_s += now_between(t0, t1);
      ++infer_count;
      ep_min += env.step(raw.head(od), raw.tail(raw.size() - od));
    }
    ep_min /= tc.steps_per_episode;
    // final-state rate report for the mean UE throughput
    ChannelGrid h = combined_channels(env.channels(), env.adjacency(),
                                      env.beams().star);
    RateReport rep =
        rate_report(h, env.assignment(), env.beams(), env.channels().sigma2);
    for (double r : rep.ue_rate) ep_mean += r;
    if (!rep.ue_rate.empty()) ep_mean /= rep.ue_rate.size();
    m.mean_rate += ep_mean;
    m.min_rate += ep_min;
  }
  if (episodes > 0) {
    m.mean_rate /= episodes;
    m.min_rate /= episodes;
    m.time_infer_s /= std::max(infer_count, 1);
  }
  // fresh convex-approximation solve on the last eval instance
  {
    env.reset_episode(offset);
    RandomStream rng(12345);
    auto t0 = std::chrono::steady_clock::now();
    ScaContext ctx = env.sca_context();
    sca_optimize(ctx, env.assignment(), env.beams(), rng);
    auto t1 = std::chrono::steady_clock::now();
    m.time_sca_s = now_between(t0, t1);
  }
  return m;
}

}  // namespace

RunStatus run_experiment(const ExperimentSpec& spec, std::string* error) {
  try {
    ScenarioConfig base = load_config(spec.scenario_path);
    if (spec.seed_override) base.seed = *spec.seed_override;

    fs::path out(spec.out_dir);
    fs::path summary_path = out / "summary.csv";
    if (fs::exists(summary_path) && !spec.force) {
      if (error)
        *error = "refusing to overwrite " + summary_path.string() +
                 " (use --force)";
      return RunStatus::kRefused;
    }
    fs::create_directories(out);

    std::vector<double> powers = spec.power_sweep;
    if (powers.empty()) powers.push_back(base.p_max_w);

    std::vector<SummaryRow> rows;
    for (std::uint64_t seed : spec.seeds) {
      for (double p : powers) {
        ScenarioConfig cfg = base;
        cfg.seed = seed;
        cfg.p_max_w = p;
        std::string tag = run_tag(spec.algo, seed, p);

        if (spec.dump_channels) {
          StarNomaEnv env(cfg);
          write_file_atomic((out / ("channels_" + tag + ".csv")).string(),
                            channels_csv(env.channels()));
        }

        SummaryRow row{};
        row.algo = spec.algo;
        row.p_max = p;
        row.seed = seed;

        if (spec.algo == "ca") {
          StarNomaEnv env(cfg);
          RandomStream rng = RandomStream(seed).substream("bcd", 0);
          ScaContext ctx = env.sca_context();
          auto t0 = std::chrono::steady_clock::now();
          BcdResult bcd =
              bcd_optimize(ctx, cfg, env.topology(), env.assignment(),
                           env.beams(), BeamProviderKind::kSca, nullptr, rng);
          auto t1 = std::chrono::steady_clock::now();
          row.time_sca_s = now_between(t0, t1);

          ChannelGrid h = combined_channels(env.channels(), env.adjacency(),
                                            bcd.beams.star);
          RateReport rep =
              rate_report(h, bcd.as, bcd.beams, env.channels().sigma2);
          double mean = 0.0;
          for (double r : rep.ue_rate) mean += r;
          if (!rep.ue_rate.empty()) mean /= rep.ue_rate.size();
          row.mean_rate = mean;
          row.min_rate = rep.min_ue_rate;
          row.reached = 1;
          row.steps_to_threshold = 0;

          write_file_atomic((out / ("trace_bcd_" + tag + ".csv")).string(),
                            bcd_trace_csv(bcd));
          write_file_atomic((out / ("trace_sca_" + tag + ".csv")).string(),
                            sca_trace_csv(bcd.sca_trace));
          write_file_atomic((out / ("rate_report_" + tag + ".csv")).string(),
                            rate_report_csv(rep));
        } else if (spec.algo == "camappo" || spec.algo == "mappo" ||
                   spec.algo == "ppo") {
          StarNomaEnv env(cfg);
          TrainConfig tc = train_config_for(spec, cfg);
          RandomStream rng = RandomStream(seed).substream("train", 0);
          ScaOptions provider_opts;
          provider_opts.epsilon = 5e-3;
          provider_opts.max_outer = 8;
          provider_opts.solve_budget = 1200;
          ImitationProvider provider =
              tc.imitation ? make_sca_provider(provider_opts)
                           : ImitationProvider{};
          auto t0 = std::chrono::steady_clock::now();
          TrainResult tr = train(env, tc, provider, rng);
          auto t1 = std::chrono::steady_clock::now();
          row.time_train_s = now_between(t0, t1);
          row.steps_to_threshold = tr.steps_to_threshold;
          row.reached = tr.reached_threshold ? 1 : 0;

          EvalMetrics m = eval_policy_metrics(env, tr.nets, tc,
                                              spec.eval_episodes, 2000000);
          row.mean_rate = m.mean_rate;
          row.min_rate = m.min_rate;
          row.time_infer_s = m.time_infer_s;
          row.time_sca_s = m.time_sca_s;

          write_file_atomic((out / ("trace_train_" + tag + ".csv")).string(),
                            train_trace_csv(tr.trace));
          save_checkpoint((out / ("checkpoint_" + tag + ".bin")).string(),
                          tr.nets, seed, config_hash(cfg));
        } else {
          if (error) *error = "unknown algorithm: " + spec.algo;
          return RunStatus::kFailure;
        }
        rows.push_back(row);
      }
    }
    write_file_atomic(summary_path.string(), summary_csv(rows));
    return RunStatus::kOk;
  } catch (const std::exception& e) {
    if (error) *error = e.what();
    return RunStatus::kFailure;
  }
}

std::string compare_summaries(const std::vector<std::string>& summary_paths,
                              std::string* error) {
  try {
    if (summary_paths.size() < 2)
      throw std::runtime_error("compare needs at least two summaries");
    struct Key {
      std::string algo;
      double p;
      bool operator<(const Key& o) const {
        if (algo != o.algo) return algo < o.algo;
        return p < o.p;
      }
    };
    struct Acc {
      std::vector<double> mean_rate, min_rate, infer, sca;
    };
    std::map<Key, Acc> groups;
    std::map<std::string, std::vector<double>> algo_powers;
    for (const std::string& path : summary_paths) {
      CsvTable t = read_csv(path);
      auto col = [&](const char* name) {
        auto it = std::find(t.header.begin(), t.header.end(), name);
        if (it == t.header.end())
          throw std::runtime_error(std::string("missing column ") + name +
                                   " in " + path);
        return static_cast<int>(it - t.header.begin());
      };
      int c_algo = col("algorithm"), c_p = col("p_max_w"),
          c_mean = col("mean_rate"), c_min = col("min_rate"),
          c_inf = col("time_infer_s"), c_sca = col("time_sca_s");
      for (const auto& r : t.rows) {
        Key k{r[c_algo], std::stod(r[c_p])};
        Acc& a = groups[k];
        a.mean_rate.push_back(std::stod(r[c_mean]));
        a.min_rate.push_back(std::stod(r[c_min]));
        a.infer.push_back(std::stod(r[c_inf]));
        a.sca.push_back(std::stod(r[c_sca]));
        algo_powers[k.algo].push_back(k.p);
      }
    }
    // a power point is mismatched when some algorithm lacks it
    auto has_power = [&](const std::string& algo, double p) {
      for (double q : algo_powers[algo])
        if (std::abs(q - p) < 1e-12) return true;
      return false;
    };
    auto stats = [](const std::vector<double>& v) {
      double m = 0.0;
      for (double x : v) m += x;
      m /= v.size();
      double s2 = 0.0;
      for (double x : v) s2 += (x - m) * (x - m);
      return std::make_pair(m, v.size() > 1 ? std::sqrt(s2 / (v.size() - 1))
                                            : 0.0);
    };
    std::ostringstream o;
    o << "algorithm,p_max_w,n_runs,mean_rate_mean,mean_rate_std,"
         "min_rate_mean,min_rate_std,time_infer_s,time_sca_s,sweep_mismatch\n";
    for (const auto& [k, a] : groups) {
      auto [mm, ms] = stats(a.mean_rate);
      auto [nm, ns] = stats(a.min_rate);
      auto [im, _is] = stats(a.infer);
      auto [sm, _ss] = stats(a.sca);
      int mismatch = 0;
      for (const auto& [algo, _] : algo_powers)
        if (!has_power(algo, k.p)) mismatch = 1;
      o << k.algo << "," << fmt_num(k.p) << "," << a.mean_rate.size() << ","
        << fmt_num(mm) << "," << fmt_num(ms) << "," << fmt_num(nm) << ","
        << fmt_num(ns) << "," << fmt_num(im) << "," << fmt_num(sm) << ","
        << mismatch << "\n";
    }
    return o.str();
  } catch (const std::exception& e) {
    if (error) *error = e.what();
    return "";
  }
}

std::string dump_scenario_text(const ScenarioConfig& cfg) {
  Topology topo = build_topology(cfg);
  AdjacencyIndicators adj = derive_adjacency(topo);
  std::ostringstream o;
  o << "# resolved configuration\n" << dump_config(cfg) << "\n";
  o << "# rooms (x0,y0,x1,y1)\n";
  for (const Room& r : topo.rooms)
    o << r.x0 << "," << r.y0 << "," << r.x1 << "," << r.y1 << "\n";
  o << "# walls (ax,ay,bx,by,panel)\n";
  for (const Wall& w : topo.walls)
    o << w.ax << "," << w.ay << "," << w.bx << "," << w.by << "," << w.panel
      << "\n";
  o << "# aps (x,y,z)\n";
  for (const Vec3& p : topo.aps)
    o << p.x() << "," << p.y() << "," << p.z() << "\n";
  o << "# panels (cx,cy,cz,nx,ny,nz,Mh,Mv)\n";
  for (const RisPanel& p : topo.panels)
    o << p.center.x() << "," << p.center.y() << "," << p.center.z() << ","
      << p.normal.x() << "," << p.normal.y() << "," << p.normal.z() << ","
      << p.elements_h << "," << p.elements_v << "\n";
  o << "# ues (x,y)\n";
  for (const auto& u : topo.ues) o << u.x() << "," << u.y() << "\n";
  auto dump_mat = [&](const char* name, const Eigen::MatrixXi& m) {
    o << "# " << name << "\n";
    for (int i = 0; i < m.rows(); ++i) {
      for (int j = 0; j < m.cols(); ++j)
        o << m(i, j) << (j + 1 < m.cols() ? "," : "");
      o << "\n";
    }
  };
  dump_mat("c_bu", adj.c_bu);
  dump_mat("c_bl", adj.c_bl);
  dump_mat("c_lfu", adj.c_lfu);
  dump_mat("c_lbu", adj.c_lbu);
  return o.str();
}

}  // namespace starnoma
