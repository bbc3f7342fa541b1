#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flexsan/sim.hpp"

namespace flexsan {

/// A single-slot instance small enough for the exact oracle. Capacities are
/// scaled to the drawn users so that either resource may bind.
struct CheckInstance {
  SatelliteConfig satellite;
  std::vector<UserDemand> users;
  double load_factor = 0.0;  // drawn demand / capacity at the rate floors
};

/// n_users == 0 draws N uniformly in [2, oracle max_users].
CheckInstance random_instance(std::size_t n_users, const SimConfig& base, std::uint64_t seed);

struct CheckRow {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::size_t users = 0;
  double load_factor = 0.0;
  std::size_t tago_admitted = 0;
  std::size_t oracle_admitted = 0;
  double tago_gops = 0.0;
  double oracle_gops = 0.0;
  bool tago_feasible = false;
  bool oracle_feasible = false;
  std::size_t du_floor_breaches = 0;  // sub-F1 users tago put on the DU split
  std::string branch;
  double tago_runtime_s = 0.0;

  long gap() const { return static_cast<long>(oracle_admitted) - static_cast<long>(tago_admitted); }
  bool both_full() const { return tago_admitted == users && oracle_admitted == users; }
  /// tago GOPS over oracle GOPS when both admit everyone.
  std::optional<double> cost_ratio() const;
};

struct CheckThresholds {
  long max_gap = 1;
  double min_gap_fraction = 0.90;
  double max_cost_ratio = 1.15;
  double min_cost_fraction = 0.90;
};

struct CheckReport {
  std::vector<CheckRow> rows;
  CheckThresholds thresholds;
  double wall_s = 0.0;

  std::size_t within_gap() const;
  std::size_t full_pairs() const;
  std::size_t within_cost() const;
  /// Rows where either solution failed the checker.
  std::size_t infeasible() const;
  bool gap_ok() const;
  bool cost_ok() const;
  bool passed() const { return gap_ok() && cost_ok() && infeasible() == 0; }
};

CheckReport run_check(const SimConfig& base, std::size_t instances, std::size_t n_users, std::uint64_t seed,
                      bool record_runtime = true);

std::string check_csv(const CheckReport& report);

}  // namespace flexsan
