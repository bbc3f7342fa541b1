#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace flexsan {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Zero bandwidth: the achievable rate is zero, so transfer time is undefined.
class RateUndefined : public Error {
 public:
  using Error::Error;
};

/// Aggregate load reached the service rate of the on-board M/M/1 queue.
class QueueUnstable : public Error {
 public:
  using Error::Error;
};

class ThroughputUnsatisfiable : public Error {
 public:
  using Error::Error;
};

class NotAdmitted : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Regenerative payload split. The underlying value is the g index.
enum class ArchKind : std::uint8_t {
  OnboardGnb = 0,
  OnboardGnbDu = 1,
};

const char* to_string(ArchKind arch) noexcept;

using UserId = std::uint32_t;

/// One user's QoS contract plus its channel state for the current slot.
struct UserDemand {
  UserId id = 0;
  double r_min = 1e6;          // bits/s
  double t_max = 0.1;          // s
  double snr_linear = 1.0;     // dimensionless, > 0
  double distance_m = 550e3;   // service-link slant range

  void validate() const;
};

struct SatelliteConfig {
  double b_s = 20e6;          // Hz
  double c_cap = 32000.0;     // GOPS; also the queue service rate
  double t_f1 = 0.09;         // s, F1 round trip for the DU split
  double t_f1_min = 0.08;
  double t_f1_max = 0.10;
  double s_p = 8192.0;        // bits
  double job_gop = 1.0;       // Gop per queued job
  double light_speed = 299792458.0;

  void validate() const;
  double mu() const noexcept { return c_cap; }
};

struct ProcessingFunction {
  std::string name;
  double slope = 0.0;   // GOPS per MHz of allocated bandwidth
  double base = 0.0;    // GOPS per admitted user
  bool in_sat = false;  // stays on board under the DU split
};

/// Per-function affine GOPS model. C_0 sums every function, C_1 only the
/// functions that remain on board when the CU is moved to the ground.
class CostModel {
 public:
  CostModel();  // default protocol-stack calibration
  explicit CostModel(std::vector<ProcessingFunction> functions);

  /// Two aggregate functions: one on board, one on the ground.
  static CostModel two_tier(double slope_all, double base_all, double slope_sat,
                            double base_sat);

  const std::vector<ProcessingFunction>& functions() const noexcept { return functions_; }

  double slope_all() const noexcept { return slope_all_; }
  double base_all() const noexcept { return base_all_; }
  double slope_sat() const noexcept { return slope_sat_; }
  double base_sat() const noexcept { return base_sat_; }

  void validate() const;

 private:
  std::vector<ProcessingFunction> functions_;
  double slope_all_ = 0.0;
  double base_all_ = 0.0;
  double slope_sat_ = 0.0;
  double base_sat_ = 0.0;
};

/// Decision for one user. arch is set iff the user is admitted.
struct UserDecision {
  bool admitted = false;
  std::optional<ArchKind> arch;
  double bandwidth_hz = 0.0;

  static UserDecision reject() { return {}; }
  static UserDecision admit(ArchKind arch, double bandwidth_hz) {
    return {true, arch, bandwidth_hz};
  }
};

/// Orchestrator output for one slot, index-aligned with the user list.
struct SlotSolution {
  std::vector<UserDecision> decisions;

  SlotSolution() = default;
  explicit SlotSolution(std::size_t n) : decisions(n) {}

  std::size_t size() const noexcept { return decisions.size(); }
  std::size_t admitted_count() const noexcept;
  double total_bandwidth() const noexcept;
};

enum class Violation : std::uint8_t {
  Delay,
  Throughput,
  Association,
  BandwidthCap,
  ComputeCap,
  QueueStability,
};

const char* to_string(Violation v) noexcept;

struct ViolationRecord {
  Violation kind;
  std::optional<std::size_t> user_index;  // unset for system-wide constraints

  friend bool operator==(const ViolationRecord&, const ViolationRecord&) = default;
};

struct FeasibilityReport {
  std::vector<double> latency_s;  // NaN where not admitted or undefined
  std::vector<double> rate_bps;
  std::vector<ViolationRecord> violations;
  double total_gops = 0.0;
  double total_bandwidth_hz = 0.0;

  bool feasible() const noexcept { return violations.empty(); }
  std::string describe() const;
};

// ---------------------------------------------------------------------------
// Link, cost and queueing math
// ---------------------------------------------------------------------------

/// Shannon rate w * log2(1 + snr).
double achievable_rate(double bandwidth_hz, double snr_linear);

/// Propagation plus the time to push one packet at the achievable rate.
/// Throws RateUndefined for zero bandwidth.
double transmission_delay(double distance_m, double bandwidth_hz, double snr_linear,
                          double packet_bits, double light_speed = 299792458.0);

double per_user_cost(ArchKind arch, double bandwidth_hz, const CostModel& cost_model);

/// Sum of per-user costs over admitted users.
double aggregate_load(const SlotSolution& solution, const CostModel& cost_model);

/// M/M/1 sojourn G / (mu - lambda). Throws QueueUnstable when lambda >= mu.
double queuing_delay(double lambda_gops, const SatelliteConfig& config);

/// Queueing plus the F1 round trip when the DU split is selected.
double processing_delay(ArchKind arch, double lambda_gops, const SatelliteConfig& config);

/// Transmission plus processing delay of users[index], with the queue load
/// taken over the full solution.
double end_to_end_latency(std::span<const UserDemand> users, std::size_t index,
                          const SlotSolution& solution, const SatelliteConfig& config,
                          const CostModel& cost_model);

/// Smallest grid-aligned bandwidth (multiples of tolerance_hz, anchored at 0)
/// whose achievable rate meets r_min. Binary search over the grid bounded by
/// max_bandwidth_hz; throws ThroughputUnsatisfiable when the answer exceeds it.
double min_bandwidth(double r_min, double snr_linear, double tolerance_hz = 1e4,
                     double max_bandwidth_hz = 20e6);

/// Non-throwing variant: nullopt when unsatisfiable.
std::optional<double> try_min_bandwidth(double r_min, double snr_linear,
                                        double tolerance_hz, double max_bandwidth_hz);

/// Evaluates every constraint of the per-slot problem against the solution.
/// Violations are returned as data; each is listed exactly once.
FeasibilityReport check_feasibility(const SlotSolution& solution,
                                    std::span<const UserDemand> users,
                                    const SatelliteConfig& config,
                                    const CostModel& cost_model);

}  // namespace flexsan
