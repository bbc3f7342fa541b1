#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <vector>

#include "flexsan/model.hpp"

namespace flexsan {

struct TagoParams {
  double sigma_light = 0.7;
  double sigma_heavy = 1.0;
  double tau_strict = 0.010;    // s, CEO wall-clock budget in the marginal band
  double tau_margin = 0.005;    // s
  double eta_hz = 5e4;          // bandwidth step
  double omega_eff = 0.6;
  double omega_flex = 0.4;
  std::optional<double> alpha_hz_per_gop;  // unset: b_s / c_cap
  double t_bar = 0.1;           // s
  int k_max_bandwidth = 12;
  int k_max_refine = 3;
  double wmin_tolerance_hz = 1e4;

  double alpha(const SatelliteConfig& config) const {
    return alpha_hz_per_gop.value_or(config.b_s / config.c_cap);
  }
  void validate() const;
};

enum class Branch : std::uint8_t { Ceo, CeoThenSmo, Smo };

const char* to_string(Branch branch) noexcept;

struct OrchestrationTrace {
  double sigma = 0.0;
  Branch branch = Branch::Ceo;
  bool ceo_ran = false;
  bool ceo_feasible = false;
  bool ceo_timed_out = false;
  int ceo_iterations = 0;
  int smo_refine_passes = 0;
  int smo_swaps = 0;
  double wall_s = 0.0;
};

/// Per-user quantities every solver needs: the rate floor and its cost.
struct UserBasis {
  std::optional<double> w_min;  // unset when the rate floor exceeds b_s
  double spectral_efficiency = 0.0;  // log2(1 + snr)
  double propagation_s = 0.0;
  double cost_gnb_min = 0.0;  // C_0(w_min)
  double cost_du_min = 0.0;   // C_1(w_min)

  bool satisfiable() const noexcept { return w_min.has_value(); }
};

UserBasis user_basis(const UserDemand& user, const SatelliteConfig& config, const CostModel& cost_model,
                     const TagoParams& params);
std::vector<UserBasis> user_bases(std::span<const UserDemand> users, const SatelliteConfig& config,
                                  const CostModel& cost_model, const TagoParams& params);

// ---------------------------------------------------------------------------
// Congestion routing

/// Optimistic utilisation: every user on the DU split at its rate floor.
/// A user whose floor exceeds b_s contributes b_s (and the DU cost at b_s).
double congestion_score(std::span<const UserDemand> users, const SatelliteConfig& config,
                        const CostModel& cost_model, const TagoParams& params);

struct TagoResult {
  SlotSolution solution;
  OrchestrationTrace trace;
};

TagoResult tago(std::span<const UserDemand> users, const SatelliteConfig& config, const CostModel& cost_model,
                const TagoParams& params);

// ---------------------------------------------------------------------------
// Cost-efficient orchestration (all users admitted, minimum GOPS)

/// T_max - t_fixed(g) - t_queue(rho), with t_fixed evaluated at bandwidth_hz and
/// t_queue = G / (mu (1 - rho)). Throws QueueUnstable for rho outside [0, 1).
double delay_margin_at(const UserDemand& user, ArchKind arch, double bandwidth_hz, double rho,
                       const SatelliteConfig& config);

/// delay_margin_at evaluated at the user's rate floor.
double delay_margin(const UserDemand& user, ArchKind arch, double rho, const SatelliteConfig& config,
                    const TagoParams& params);

/// DU iff its margin clears tau_margin and it is strictly cheaper; ties go to gNB.
ArchKind select_architecture(double margin_du, double cost_du, double cost_gnb, const TagoParams& params);

/// dC/dw in GOPS per Hz.
double cost_gradient(ArchKind arch, double bandwidth_hz, const CostModel& cost_model);

struct CompressionResult {
  SlotSolution solution;
  bool within_caps = false;
  int steps = 0;
};

/// Walks admitted users in descending cost-gradient order (ties by id) and
/// applies w <- w - eta * grad / max_grad until both capacity caps hold. No user
/// goes below its rate floor or below the bandwidth its delay budget needs.
/// within_caps == false signals that compression was insufficient.
CompressionResult gradient_compress(const SlotSolution& solution, std::span<const UserDemand> users,
                                    const SatelliteConfig& config, const CostModel& cost_model,
                                    const TagoParams& params);

struct CeoResult {
  bool feasible = false;
  SlotSolution solution;
  bool timed_out = false;
  int iterations = 0;
};

CeoResult ceo(std::span<const UserDemand> users, const SatelliteConfig& config, const CostModel& cost_model,
              const TagoParams& params,
              std::optional<std::chrono::duration<double>> time_budget = std::nullopt);

// ---------------------------------------------------------------------------
// Service-maximising orchestration (admission under congestion)

struct PopulationStats {
  double mean_blended_demand = 0.0;  // mean of w_min + alpha * C_min, Hz
  std::size_t satisfiable = 0;
};

PopulationStats population_stats(std::span<const UserBasis> bases, double alpha);

/// omega_eff * E_ref / (w_min + alpha C_min) + omega_flex * t_max / t_bar,
/// with E_ref the population mean blended demand.
double composite_score(double t_max, double w_min, double c_min, const PopulationStats& stats, double alpha,
                       const TagoParams& params);

double composite_score(const UserDemand& user, const PopulationStats& stats, const SatelliteConfig& config,
                       const CostModel& cost_model, const TagoParams& params);

/// Satisfiable user indices sorted by descending composite score, ties by id.
std::vector<std::size_t> score_order(std::span<const UserDemand> users, std::span<const UserBasis> bases,
                                     const SatelliteConfig& config, const TagoParams& params);

struct SmoResult {
  SlotSolution solution;
  std::vector<std::size_t> phase1_order;  // user indices in admission-attempt order
  int refine_passes = 0;
  int swaps = 0;
};

/// Score-ordered greedy admission at the rate floor, then smo_refine on the
/// rejected users. DU is offered only with slack above tau_margin.
SmoResult smo(std::span<const UserDemand> users, const SatelliteConfig& config, const CostModel& cost_model,
              const TagoParams& params);

struct RefineResult {
  SlotSolution solution;
  int passes = 0;
  int swaps = 0;
};

/// SMO's second phase on an arbitrary feasible starting point: for each
/// rejected user in the given priority order, switch admitted gNB users to the
/// DU split until the freed compute admits the rejected user. Only users whose
/// DU slack exceeds tau_margin are switched or admitted on DU, since a thin
/// slack would pull the shared queue ceiling down for everyone.
RefineResult smo_refine(const SlotSolution& start, std::span<const std::size_t> rejected_priority,
                        std::span<const UserDemand> users, const SatelliteConfig& config,
                        const CostModel& cost_model, const TagoParams& params);

}  // namespace flexsan
