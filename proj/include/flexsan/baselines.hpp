#pragma once

#include <span>

#include "flexsan/model.hpp"
#include "flexsan/orchestrator.hpp"

namespace flexsan {

/// Single-architecture payload. Users are taken in composite-score order, each
/// at its rate floor, and admitted whenever the caps and the coupled delay
/// check still hold.
SlotSolution static_solve(ArchKind arch_fixed, std::span<const UserDemand> users, const SatelliteConfig& config,
                          const CostModel& cost_model, const TagoParams& params);

/// Repeatedly admits the user whose cheapest currently-feasible configuration
/// adds the least GOPS (ties by id) until nobody fits. No refinement.
SlotSolution naive_greedy(std::span<const UserDemand> users, const SatelliteConfig& config,
                          const CostModel& cost_model, const TagoParams& params);

struct OracleConfig {
  int max_users = 5;
  int bandwidth_levels = 3;       // grid levels per user, starting at w_min
  double level_step_hz = 5e4;
  long long max_candidates = 1'000'000;

  void validate() const;
  /// (1 + 2 L)^N: reject, or one of two splits at one of L levels, per user.
  long long candidate_count(std::size_t n_users) const;
};

struct OracleResult {
  SlotSolution solution;
  std::size_t admitted = 0;
  double total_gops = 0.0;
  long long evaluated = 0;
};

/// Exhaustive search over admission x architecture x bandwidth level. Picks the
/// feasible candidate with the most admissions, then the least total GOPS, then
/// the lexicographically smallest decision vector. Throws InvalidArgument when
/// the instance exceeds the configured limits.
OracleResult exact_oracle(std::span<const UserDemand> users, const SatelliteConfig& config,
                          const CostModel& cost_model, const OracleConfig& oracle_config,
                          double wmin_tolerance_hz = 1e4);

}  // namespace flexsan
