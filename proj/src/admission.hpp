#pragma once

// Incremental bookkeeping for greedy admission under the coupled queue.
//
// With every admitted user's fixed latency known, the shared M/M/1 delay
// G / (mu - lambda) must fit inside the smallest remaining slack, which turns
// the per-user delay constraints into a single load ceiling
//     lambda <= min_u (mu - G / slack_u).
// Admitting a user only ever lowers that ceiling, so one running minimum is
// enough.

#include <algorithm>
#include <limits>
#include <optional>

#include "flexsan/model.hpp"
#include "flexsan/orchestrator.hpp"

namespace flexsan::detail {

// Guard band below the ceiling so that re-summing loads in a different order
// cannot push a boundary solution over the checker's delay tolerance.
inline double load_guard(const SatelliteConfig& config) { return 1e-9 * config.mu(); }

inline double f1_delay(ArchKind arch, const SatelliteConfig& config) {
  return arch == ArchKind::OnboardGnbDu ? config.t_f1 : 0.0;
}

/// Propagation + transfer + F1, i.e. everything except queueing.
inline double fixed_latency(const UserBasis& basis, ArchKind arch, double bandwidth_hz,
                            const SatelliteConfig& config) {
  return basis.propagation_s + config.s_p / (bandwidth_hz * basis.spectral_efficiency) +
         f1_delay(arch, config);
}

/// Largest aggregate load at which this user still meets t_max.
inline std::optional<double> load_ceiling(double t_max, double fixed_s, const SatelliteConfig& config) {
  const double slack = t_max - fixed_s;
  if (!(slack > 0.0)) return std::nullopt;
  return config.mu() - config.job_gop / slack;
}

struct Option {
  ArchKind arch;
  double cost;
  double ceiling;
};

/// Feasible (arch, cost, ceiling) options of one user at a fixed bandwidth,
/// cheapest first with gNB winning cost ties. A positive du_min_slack drops the
/// DU option unless its slack exceeds it: a nearly-tight DU user drags the
/// shared load ceiling far below capacity.
inline int user_options(const UserDemand& user, const UserBasis& basis, double bandwidth_hz,
                        const SatelliteConfig& config, const CostModel& cost_model, Option out[2],
                        std::optional<ArchKind> forced = std::nullopt, double du_min_slack = 0.0) {
  int n = 0;
  const double c0 = per_user_cost(ArchKind::OnboardGnb, bandwidth_hz, cost_model);
  const double c1 = per_user_cost(ArchKind::OnboardGnbDu, bandwidth_hz, cost_model);
  const ArchKind first = c1 < c0 ? ArchKind::OnboardGnbDu : ArchKind::OnboardGnb;
  const ArchKind second = first == ArchKind::OnboardGnb ? ArchKind::OnboardGnbDu : ArchKind::OnboardGnb;
  for (ArchKind arch : {first, second}) {
    if (forced && arch != *forced) continue;
    const double fixed = fixed_latency(basis, arch, bandwidth_hz, config);
    if (arch == ArchKind::OnboardGnbDu && du_min_slack > 0.0 && !(user.t_max - fixed > du_min_slack)) continue;
    auto ceiling = load_ceiling(user.t_max, fixed, config);
    if (!ceiling) continue;
    out[n++] = {arch, arch == ArchKind::OnboardGnb ? c0 : c1, *ceiling};
  }
  return n;
}

class AdmissionState {
 public:
  explicit AdmissionState(const SatelliteConfig& config) : config_(config) {}

  bool fits(double cost, double bandwidth_hz, double user_ceiling) const {
    if (bandwidth_ + bandwidth_hz > config_.b_s) return false;
    const double next = lambda_ + cost;
    if (next > config_.c_cap) return false;
    return next <= std::min(ceiling_, user_ceiling) - load_guard(config_);
  }

  void add(double cost, double bandwidth_hz, double user_ceiling) {
    lambda_ += cost;
    bandwidth_ += bandwidth_hz;
    ceiling_ = std::min(ceiling_, user_ceiling);
  }

  /// Changes an admitted user's cost in place (architecture switch).
  void adjust(double cost_delta, double new_ceiling) {
    lambda_ += cost_delta;
    ceiling_ = std::min(ceiling_, new_ceiling);
  }

  double lambda() const noexcept { return lambda_; }
  double bandwidth() const noexcept { return bandwidth_; }
  double ceiling() const noexcept { return ceiling_; }

 private:
  const SatelliteConfig& config_;
  double lambda_ = 0.0;
  double bandwidth_ = 0.0;
  double ceiling_ = std::numeric_limits<double>::infinity();
};

}  // namespace flexsan::detail
