#include "starnoma/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace starnoma {

double ScenarioConfig::rician_linear() const {
  return std::pow(10.0, rician_db / 10.0);
}

double ScenarioConfig::noise_power_w() const {
  double dbm = noise_dbm_hz + 10.0 * std::log10(bandwidth_hz);
  return std::pow(10.0, (dbm - 30.0) / 10.0);
}

void ScenarioConfig::validate() const {
  auto pos = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument(std::string("config: ") + name +
                                  " must be positive");
  };
  pos(region_w, "region_w");
  pos(region_h, "region_h");
  pos(carrier_ghz, "carrier_ghz");
  pos(bandwidth_hz, "bandwidth_hz");
  pos(p_max_w, "p_max_w");
  pos(element_w, "element_w");
  pos(element_h, "element_h");
  pos(ue_height, "ue_height");
  pos(ap_height, "ap_height");
  pos(ris_height, "ris_height");
  if (rooms_x < 1 || rooms_y < 1)
    throw std::invalid_argument("config: rooms_x/rooms_y must be >= 1");
  if (num_aps < 1) throw std::invalid_argument("config: num_aps must be >= 1");
  if (num_ris < 0 || num_ues < 0)
    throw std::invalid_argument("config: counts must be non-negative");
  if (antennas_per_ap < 1 || clusters_per_ap < 1 || quota_per_ap < 1)
    throw std::invalid_argument("config: per-AP counts must be >= 1");
  if (elements_h < 1 || elements_v < 1)
    throw std::invalid_argument("config: element grid must be >= 1x1");
  if (r_min < 0.0) throw std::invalid_argument("config: r_min must be >= 0");
  if (quota_semantics != "clusters" && quota_semantics != "ues")
    throw std::invalid_argument("config: quota_semantics must be clusters|ues");
  if (quota_semantics == "clusters" &&
      static_cast<long>(num_aps) * quota_per_ap <
          static_cast<long>(num_aps) * clusters_per_ap)
    throw std::invalid_argument(
        "config: total quota below total cluster count");
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
  ScenarioConfig cfg;
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  auto take_d = [&](const char* k, double& dst) {
    auto it = kv.find(k);
    if (it == kv.end()) return;
    dst = std::stod(it->second);
    kv.erase(it);
  };
  auto take_i = [&](const char* k, int& dst) {
    auto it = kv.find(k);
    if (it == kv.end()) return;
    dst = std::stoi(it->second);
    kv.erase(it);
  };
  auto take_b = [&](const char* k, bool& dst) {
    auto it = kv.find(k);
    if (it == kv.end()) return;
    std::string v = it->second;
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "true" || v == "1")
      dst = true;
    else if (v == "false" || v == "0")
      dst = false;
    else
      throw std::invalid_argument(std::string("config: bad bool for ") + k);
    kv.erase(it);
  };

  auto it = kv.find("seed");
  if (it != kv.end()) {
    cfg.seed = std::stoull(it->second);
    kv.erase(it);
  }
  it = kv.find("quota_semantics");
  if (it != kv.end()) {
    cfg.quota_semantics = it->second;
    kv.erase(it);
  }
  take_d("region_w", cfg.region_w);
  take_d("region_h", cfg.region_h);
  take_i("rooms_x", cfg.rooms_x);
  take_i("rooms_y", cfg.rooms_y);
  take_d("ue_height", cfg.ue_height);
  take_d("ap_height", cfg.ap_height);
  take_d("ris_height", cfg.ris_height);
  take_i("num_aps", cfg.num_aps);
  take_i("num_ris", cfg.num_ris);
  take_i("num_ues", cfg.num_ues);
  take_i("antennas_per_ap", cfg.antennas_per_ap);
  take_i("clusters_per_ap", cfg.clusters_per_ap);
  take_i("quota_per_ap", cfg.quota_per_ap);
  take_i("elements_h", cfg.elements_h);
  take_i("elements_v", cfg.elements_v);
  take_d("element_w", cfg.element_w);
  take_d("element_h", cfg.element_h);
  take_d("carrier_ghz", cfg.carrier_ghz);
  take_d("bandwidth_hz", cfg.bandwidth_hz);
  take_d("noise_dbm_hz", cfg.noise_dbm_hz);
  take_d("rician_db", cfg.rician_db);
  take_d("p_max_w", cfg.p_max_w);
  take_d("r_min", cfg.r_min);
  take_b("pairing_persistent", cfg.pairing_persistent);

  if (!kv.empty())
    throw std::invalid_argument("config: unknown key '" + kv.begin()->first +
                                "'");
  cfg.validate();
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const ScenarioConfig& c) {
  std::ostringstream o;
  o << "seed = " << c.seed << "\n";
  o << "region_w = " << c.region_w << "\n";
  o << "region_h = " << c.region_h << "\n";
  o << "rooms_x = " << c.rooms_x << "\n";
  o << "rooms_y = " << c.rooms_y << "\n";
  o << "ue_height = " << c.ue_height << "\n";
  o << "ap_height = " << c.ap_height << "\n";
  o << "ris_height = " << c.ris_height << "\n";
  o << "num_aps = " << c.num_aps << "\n";
  o << "num_ris = " << c.num_ris << "\n";
  o << "num_ues = " << c.num_ues << "\n";
  o << "antennas_per_ap = " << c.antennas_per_ap << "\n";
  o << "clusters_per_ap = " << c.clusters_per_ap << "\n";
  o << "quota_per_ap = " << c.quota_per_ap << "\n";
  o << "quota_semantics = " << c.quota_semantics << "\n";
  o << "elements_h = " << c.elements_h << "\n";
  o << "elements_v = " << c.elements_v << "\n";
  o << "element_w = " << c.element_w << "\n";
  o << "element_h = " << c.element_h << "\n";
  o << "carrier_ghz = " << c.carrier_ghz << "\n";
  o << "bandwidth_hz = " << c.bandwidth_hz << "\n";
  o << "noise_dbm_hz = " << c.noise_dbm_hz << "\n";
  o << "rician_db = " << c.rician_db << "\n";
  o << "p_max_w = " << c.p_max_w << "\n";
  o << "r_min = " << c.r_min << "\n";
  o << "pairing_persistent = " << (c.pairing_persistent ? "true" : "false")
    << "\n";
  return o.str();
}

Vec3 Topology::element_pos(int l, int m) const {
  const RisPanel& p = panels[l];
  int i = m % p.elements_h;
  int j = m / p.elements_h;
  double dh = (i - (p.elements_h - 1) / 2.0) * (p.width / p.elements_h);
  double dv = (j - (p.elements_v - 1) / 2.0) * (p.height / p.elements_v);
  return p.center + dh * p.tangent_h + dv * p.tangent_v;
}

namespace {

// Interior walls of a rooms_x x rooms_y grid: vertical walls first
// (left-to-right, bottom-to-top), then horizontal walls.
std::vector<Wall> interior_walls(const ScenarioConfig& cfg) {
  std::vector<Wall> walls;
  double rw = cfg.region_w / cfg.rooms_x;
  double rh = cfg.region_h / cfg.rooms_y;
  for (int gx = 1; gx < cfg.rooms_x; ++gx)
    for (int gy = 0; gy < cfg.rooms_y; ++gy)
      walls.push_back({gx * rw, gy * rh, gx * rw, (gy + 1) * rh, -1});
  for (int gy = 1; gy < cfg.rooms_y; ++gy)
    for (int gx = 0; gx < cfg.rooms_x; ++gx)
      walls.push_back({gx * rw, gy * rh, (gx + 1) * rw, gy * rh, -1});
  return walls;
}

}  // namespace

Topology build_topology(const ScenarioConfig& cfg) {
  RandomStream master(cfg.seed);
  RandomStream ue_stream = master.substream("ue-pos", 0);
  return build_topology(cfg, ue_stream);
}

Topology build_topology(const ScenarioConfig& cfg, RandomStream& ue_stream) {
  cfg.validate();
  Topology topo;
  topo.ue_height = cfg.ue_height;

  double rw = cfg.region_w / cfg.rooms_x;
  double rh = cfg.region_h / cfg.rooms_y;
  for (int gy = 0; gy < cfg.rooms_y; ++gy)
    for (int gx = 0; gx < cfg.rooms_x; ++gx)
      topo.rooms.push_back({gx * rw, gy * rh, (gx + 1) * rw, (gy + 1) * rh});

  topo.walls = interior_walls(cfg);
  if (cfg.num_ris > static_cast<int>(topo.walls.size()))
    throw std::invalid_argument(
        "config: more RIS panels than interior walls to host them");

  for (int l = 0; l < cfg.num_ris; ++l) {
    Wall& w = topo.walls[l];
    RisPanel p;
    p.wall = l;
    p.center = Vec3(0.5 * (w.ax + w.bx), 0.5 * (w.ay + w.by), cfg.ris_height);
    double wx = w.bx - w.ax, wy = w.by - w.ay;
    double len = std::hypot(wx, wy);
    p.tangent_h = Vec3(wx / len, wy / len, 0.0);
    p.tangent_v = Vec3(0.0, 0.0, 1.0);
    // normal = tangent rotated +90 degrees in plan; for the grid layout this
    // points in +x (vertical walls) or -y... rotate so it is +x/+y.
    p.normal = Vec3(-p.tangent_h.y(), p.tangent_h.x(), 0.0);
    if (p.normal.x() + p.normal.y() < 0.0) p.normal = -p.normal;
    p.elements_h = cfg.elements_h;
    p.elements_v = cfg.elements_v;
    p.width = cfg.elements_h * cfg.element_w;
    p.height = cfg.elements_v * cfg.element_h;
    w.panel = l;
    topo.panels.push_back(p);
  }

  // APs at the centers of the first rooms (cycling when B > #rooms),
  // arrays oriented along x.
  for (int b = 0; b < cfg.num_aps; ++b) {
    const Room& r = topo.rooms[b % topo.rooms.size()];
    topo.aps.push_back(
        Vec3(0.5 * (r.x0 + r.x1), 0.5 * (r.y0 + r.y1), cfg.ap_height));
    topo.ap_array_axis.push_back(Vec3(1.0, 0.0, 0.0));
  }

  // UEs uniform over the whole region (margin keeps them off wall lines),
  // which is uniform per room conditioned on the room.
  const double margin = 0.05;
  for (int u = 0; u < cfg.num_ues; ++u) {
    int room = static_cast<int>(ue_stream.uniform_int(topo.rooms.size()));
    const Room& r = topo.rooms[room];
    double x = ue_stream.uniform(r.x0 + margin, r.x1 - margin);
    double y = ue_stream.uniform(r.y0 + margin, r.y1 - margin);
    topo.ues.push_back(Eigen::Vector2d(x, y));
  }

  validate_topology(topo);
  return topo;
}

void validate_topology(const Topology& topo) {
  // rooms must not overlap
  for (size_t i = 0; i < topo.rooms.size(); ++i)
    for (size_t j = i + 1; j < topo.rooms.size(); ++j) {
      const Room& a = topo.rooms[i];
      const Room& b = topo.rooms[j];
      bool disjoint = a.x1 <= b.x0 || b.x1 <= a.x0 || a.y1 <= b.y0 ||
                      b.y1 <= a.y0;
      if (!disjoint)
        throw std::invalid_argument("topology: rooms " + std::to_string(i) +
                                    " and " + std::to_string(j) + " overlap");
    }

  for (size_t u = 0; u < topo.ues.size(); ++u) {
    int count = 0;
    for (const Room& r : topo.rooms)
      if (r.contains(topo.ues[u].x(), topo.ues[u].y())) ++count;
    if (count != 1)
      throw std::invalid_argument("topology: UE " + std::to_string(u) +
                                  " lies in " + std::to_string(count) +
                                  " rooms");
  }

  for (size_t l = 0; l < topo.panels.size(); ++l) {
    const RisPanel& p = topo.panels[l];
    if (p.elements() < 1)
      throw std::invalid_argument("topology: panel with no elements");
    if (p.wall < 0 || p.wall >= static_cast<int>(topo.walls.size()))
      throw std::invalid_argument("topology: panel not hosted on a wall");
    const Wall& w = topo.walls[p.wall];
    if (p.width > w.length() + 1e-9)
      throw std::invalid_argument("topology: panel " + std::to_string(l) +
                                  " exceeds its wall");
    // center must sit on the wall segment
    double wx = w.bx - w.ax, wy = w.by - w.ay;
    double len2 = wx * wx + wy * wy;
    double t = ((p.center.x() - w.ax) * wx + (p.center.y() - w.ay) * wy) / len2;
    double px = w.ax + t * wx, py = w.ay + t * wy;
    if (t < -1e-9 || t > 1.0 + 1e-9 ||
        std::hypot(px - p.center.x(), py - p.center.y()) > 1e-6)
      throw std::invalid_argument("topology: panel " + std::to_string(l) +
                                  " is not on its wall");
  }

  for (const Vec3& p : topo.aps)
    if (!p.allFinite())
      throw std::invalid_argument("topology: non-finite AP position");
  for (const auto& p : topo.ues)
    if (!p.allFinite())
      throw std::invalid_argument("topology: non-finite UE position");
}

bool segment_blocked_by_wall(double ax, double ay, double bx, double by,
                             const Wall& w) {
  // 2D segment intersection; touching the wall at one of the wall's
  // endpoints does not block.
  double r_x = bx - ax, r_y = by - ay;
  double s_x = w.bx - w.ax, s_y = w.by - w.ay;
  double denom = r_x * s_y - r_y * s_x;
  double q_px = w.ax - ax, q_py = w.ay - ay;
  const double eps = 1e-12;
  if (std::abs(denom) < eps) return false;  // parallel or collinear
  double t = (q_px * s_y - q_py * s_x) / denom;  // along the query segment
  double v = (q_px * r_y - q_py * r_x) / denom;  // along the wall
  return t > eps && t < 1.0 - eps && v > 1e-9 && v < 1.0 - 1e-9;
}

int room_of_point(const Topology& topo, double x, double y) {
  for (size_t i = 0; i < topo.rooms.size(); ++i)
    if (topo.rooms[i].contains(x, y)) return static_cast<int>(i);
  return -1;
}

AdjacencyIndicators derive_adjacency(const Topology& topo) {
  const int B = static_cast<int>(topo.aps.size());
  const int L = static_cast<int>(topo.panels.size());
  const int U = static_cast<int>(topo.ues.size());
  AdjacencyIndicators adj;
  adj.c_bu = Eigen::MatrixXi::Zero(B, U);
  adj.c_bl = Eigen::MatrixXi::Zero(B, L);
  adj.c_lfu = Eigen::MatrixXi::Zero(L, U);
  adj.c_lbu = Eigen::MatrixXi::Zero(L, U);

  auto clear_path = [&](double ax, double ay, double bx, double by,
                        int skip_wall) {
    for (size_t w = 0; w < topo.walls.size(); ++w) {
      if (static_cast<int>(w) == skip_wall) continue;
      if (segment_blocked_by_wall(ax, ay, bx, by, topo.walls[w])) return false;
    }
    return true;
  };

  for (int b = 0; b < B; ++b) {
    for (int u = 0; u < U; ++u)
      adj.c_bu(b, u) = clear_path(topo.aps[b].x(), topo.aps[b].y(),
                                  topo.ues[u].x(), topo.ues[u].y(), -1)
                           ? 1
                           : 0;
    for (int l = 0; l < L; ++l) {
      const RisPanel& p = topo.panels[l];
      adj.c_bl(b, l) = clear_path(topo.aps[b].x(), topo.aps[b].y(),
                                  p.center.x(), p.center.y(), p.wall)
                           ? 1
                           : 0;
    }
  }

  for (int l = 0; l < L; ++l) {
    const RisPanel& p = topo.panels[l];
    for (int u = 0; u < U; ++u) {
      Vec3 d = topo.ue_pos3(u) - p.center;
      // points on the panel plane count as backward
      if (d.dot(p.normal) > 0.0)
        adj.c_lfu(l, u) = 1;
      else
        adj.c_lbu(l, u) = 1;
    }
  }
  return adj;
}

}  // namespace starnoma
