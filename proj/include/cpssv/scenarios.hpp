#pragma once

// Generators for the three case studies: capture-the-flag, honeybee swarm, UAV rescue.
// All tunables are generator inputs with calibrated defaults.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cpssv/model.hpp"

namespace cpssv {

struct Scenario {
  std::string model_text;
  std::string deployment_text;
  ModelDocument model;
  Deployment deployment;
};

// ---------------------------------------------------------------------------
// Capture the flag

struct CaptureFlagSpec {
  std::vector<std::string> flags = {"RB", "RD", "RC"};
  std::vector<std::string> cameras = {"RB", "RD"};
  double move_rate = 1.25;      // spatial sojourns are exp(move_rate)
  double notify_success = 0.8;  // delivery probability of a camera notification
};

/// Rooms RA RB RC RD, hallways HA HB (RA-HA, RC-HA, HA-HB, RB-HB, RD-HB); robots start in
/// RA and RC.
Scenario gen_capture_flag(const CaptureFlagSpec& spec = {});

inline constexpr const char* kCaptureFlagProperty = "F[SystemTime<=10](numFlag==3 && robotSFNum<=1)";

// ---------------------------------------------------------------------------
// Honeybee swarm

struct GridSpec {
  int width = 10;
  int height = 10;
  /// Row-major, width*height entries; empty selects the default field (warm spot near one
  /// corner, coldest at the opposite one).
  std::vector<double> temperature;
  double t_min = 22.0;
  double t_max = 36.0;
  double rest_min = 1.0;  // mean rest at t_min
  double rest_max = 6.0;  // mean rest at t_max
  double move_rate = 1.0;

  double temp(int cell) const;
  /// Throws std::invalid_argument.
  void validate() const;
};

/// Linear map of temperature to mean resting time.
double resting_time(const GridSpec& g, double temperature);

/// More than two thirds of n when n <= 15, otherwise 15.
std::int64_t cluster_threshold(std::int64_t n);

/// Default 10x10 field.
std::vector<double> default_temperature_field(int width, int height, double t_min, double t_max);

/// Cell whose temperature is closest to `t` (lowest index on ties).
int cell_near_temperature(const GridSpec& g, double t);

struct BeeStart {
  /// -1: uniform over all cells; otherwise every robot starts in this cell.
  int cell = -1;
};

/// Throws std::invalid_argument if n_robots < 1 or exceeds the number of cells.
Scenario gen_honeybee(const GridSpec& grid, int n_robots, BeeStart start = {});

inline constexpr const char* kHoneybeeProperty = "F[SystemTime<=1000](OptimalClusterNum>=threshold)";

// ---------------------------------------------------------------------------
// UAV search and rescue

enum class Protocol { Bluetooth, ZigBee };

struct CitySpec {
  int buildings = 20;
  /// Keep only the first `area` locations in breadth-first order from the victim zone
  /// (0: all).
  int area = 0;
  std::uint64_t seed = 7;
  int victims = 50;
  int victim_zone = 5;     // locations where victims may be
  int base = 12;           // breadth-first index of the common UAV starting point
  /// Each location outside the zone is dangerous with this probability (seeded draw).
  double danger_fraction = 0.25;
  double hazard_high = 0.2;  // per-visit hazard probability at dangerous locations
  double hazard_low = 0.0;
  double crash_given_hazard = 0.15;
  int battery = 12;
  int consume_min = 1;
  int consume_max = 2;
  double avoid_period = 30.0;
  double horizon = 20.0;
  double bluetooth_delivery = 0.35;
  int zigbee_relays = 4;  // extra delivery attempts through the mesh

  void validate() const;
};

/// `distance`: place UAVs exactly that many hops from the victim zone instead of at the base.
Scenario gen_city(const CitySpec& spec, int n_uavs, int n_stations, Protocol protocol,
                  std::optional<int> distance = std::nullopt);

/// Adjacency of the generated city (location ids in breadth-first order from the zone).
std::vector<std::vector<int>> city_graph(const CitySpec& spec);

std::string city_property(const CitySpec& spec);

}  // namespace cpssv
