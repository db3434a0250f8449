#ifndef STARNOMA_SCENARIO_HPP
#define STARNOMA_SCENARIO_HPP

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "starnoma/rng.hpp"

namespace starnoma {

using Vec3 = Eigen::Vector3d;

// All the knobs of a simulated deployment. Defaults reproduce the standard
// four-room indoor benchmark: 3 APs, 4 wall panels, 20 UEs.
struct ScenarioConfig {
  std::uint64_t seed = 1;

  // geometry
  double region_w = 20.0;  // meters
  double region_h = 20.0;
  int rooms_x = 2;
  int rooms_y = 2;
  double ue_height = 1.5;
  double ap_height = 2.5;
  double ris_height = 1.5;

  // population
  int num_aps = 3;        // B
  int num_ris = 4;        // L, one panel per interior wall in order
  int num_ues = 20;       // U
  int antennas_per_ap = 4;  // N_b (shared by all APs)
  int clusters_per_ap = 4;  // K_b
  int quota_per_ap = 4;     // Q_b
  std::string quota_semantics = "clusters";  // "clusters" or "ues"

  // STAR-RIS element grid
  int elements_h = 13;  // M_h
  int elements_v = 2;   // M_v
  double element_w = 0.2;  // physical spacing, meters
  double element_h = 0.1;

  // radio
  double carrier_ghz = 6.0;
  double bandwidth_hz = 1.0e7;
  double noise_dbm_hz = -100.0;
  double rician_db = 4.0;
  double p_max_w = 1.0;
  double r_min = 0.0;  // bits/s/Hz per UE

  bool pairing_persistent = false;

  int elements_per_panel() const { return elements_h * elements_v; }
  double rician_linear() const;
  double noise_power_w() const;  // sigma^2 over the configured bandwidth

  // Throws std::invalid_argument when a physical quantity is out of range.
  void validate() const;
};

// human-readable "key = value" config file
ScenarioConfig load_config(const std::string& path);
ScenarioConfig parse_config(const std::string& text);
std::string dump_config(const ScenarioConfig& cfg);

struct RisPanel {
  Vec3 center;
  Vec3 normal;       // unit; defines the forward face half-space
  Vec3 tangent_h;    // unit, along the wall
  Vec3 tangent_v;    // unit, vertical
  double width = 0.0;
  double height = 0.0;
  int elements_h = 0;
  int elements_v = 0;
  int wall = -1;  // hosting wall index

  int elements() const { return elements_h * elements_v; }
};

struct Room {
  double x0, y0, x1, y1;
  bool contains(double x, double y) const {
    return x >= x0 && x < x1 && y >= y0 && y < y1;
  }
};

struct Wall {
  // 2D segment in the floor plan
  double ax, ay, bx, by;
  int panel = -1;  // index of hosted panel, -1 if bare
  double length() const { return std::hypot(bx - ax, by - ay); }
};

struct Topology {
  std::vector<Vec3> aps;
  std::vector<Vec3> ap_array_axis;  // ULA orientation per AP
  std::vector<RisPanel> panels;
  std::vector<Eigen::Vector2d> ues;  // plan positions; height in config
  double ue_height = 1.5;
  std::vector<Room> rooms;
  std::vector<Wall> walls;

  Vec3 ue_pos3(int u) const {
    return Vec3(ues[u].x(), ues[u].y(), ue_height);
  }
  // 3D position of element m (row-major over the M_h x M_v grid) of panel l
  Vec3 element_pos(int l, int m) const;
};

struct AdjacencyIndicators {
  Eigen::MatrixXi c_bu;   // B x U direct line of sight
  Eigen::MatrixXi c_bl;   // B x L
  Eigen::MatrixXi c_lfu;  // L x U, UE on forward face
  Eigen::MatrixXi c_lbu;  // L x U, UE on backward face
};

// Deterministic world construction; UE positions drawn uniformly in rooms.
Topology build_topology(const ScenarioConfig& cfg);
Topology build_topology(const ScenarioConfig& cfg, RandomStream& ue_stream);

// Structural checks: rooms disjoint, every UE in exactly one room, panels
// within their walls. Throws std::invalid_argument on violation.
void validate_topology(const Topology& topo);

AdjacencyIndicators derive_adjacency(const Topology& topo);

// true if the open segment (ax,ay)-(bx,by) crosses wall w away from
// w's endpoints
bool segment_blocked_by_wall(double ax, double ay, double bx, double by,
                             const Wall& w);

int room_of_point(const Topology& topo, double x, double y);  // -1 if none

}  // namespace starnoma

#endif  // STARNOMA_SCENARIO_HPP
