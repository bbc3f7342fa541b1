#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flexsan/baselines.hpp"
#include "flexsan/model.hpp"
#include "flexsan/orchestrator.hpp"
#include "flexsan/scenarios.hpp"

namespace flexsan {

class SimulationError : public Error {
 public:
  using Error::Error;
};

enum class Algorithm : std::uint8_t { Tago, StaticGnb, StaticDu, Greedy, Oracle };

const char* to_string(Algorithm algorithm) noexcept;
/// Throws InvalidArgument listing the valid names.
Algorithm parse_algorithm(std::string_view name);
std::vector<Algorithm> parse_algorithm_list(std::string_view comma_separated);

struct Scenario {
  std::string id = "constant";
  TrafficKind traffic = TrafficKind::Constant;
  int constant_users = 50;
  ServiceProfile profile = ServiceProfile::of(ProfileKind::Strict);
  RateRange rates;
  PassGeometry geometry;
  double snr_zenith_linear = 300.0;
  double shadow_sigma_db = 2.0;
  // Optional replays. A distance trace replaces the per-user geometry (every
  // user sees the replayed range); a traffic trace replaces the analytic curve.
  std::optional<std::filesystem::path> distance_csv;
  std::optional<std::filesystem::path> traffic_csv;

  void validate() const;
  /// Target active users per slot.
  std::vector<int> user_counts() const;
};

struct SimConfig {
  SatelliteConfig satellite;
  CostModel cost_model;
  TagoParams tago;
  OracleConfig oracle;
  Scenario scenario;

  void validate() const;
};

/// Order-independent FNV-1a digest of the canonical JSON form.
std::string config_digest(const SimConfig& config);

struct SlotMetrics {
  double t_s = 0.0;
  std::size_t active = 0;
  std::size_t admitted = 0;
  double adm_rate = 0.0;
  double gops = 0.0;
  double gops_util = 0.0;
  double bw_util = 0.0;
  double frac_gnb = 0.0;  // of admitted users
  double frac_du = 0.0;
  double lat_p50 = 0.0;   // s, over admitted users
  double lat_p95 = 0.0;
  double runtime_s = 0.0;
};

struct Stat {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct RunSummary {
  std::string scenario_id;
  Algorithm algorithm = Algorithm::Tago;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::vector<SlotMetrics> metrics;
  std::filesystem::path metrics_path;  // set by write_outputs

  Stat adm_rate;
  Stat gops;
  Stat gops_util;
  Stat bw_util;
  Stat runtime_s;
  std::size_t total_active = 0;    // user-slots
  std::size_t total_admitted = 0;
  // Users with t_max below the F1 round trip that were put on the DU split.
  std::size_t du_floor_breaches = 0;
  // tago only: slots per branch (CEO, CEO-then-SMO, SMO).
  std::array<std::size_t, 3> branch_slots{};

  /// Admitted user-slots over active user-slots; 0 when nobody was active.
  double pooled_admission() const;
};

/// What an observer sees after each validated slot.
struct SlotView {
  std::size_t slot = 0;
  double t_s = 0.0;
  std::span<const UserDemand> users;
  const SlotSolution& solution;
  const FeasibilityReport& report;
  const OrchestrationTrace* trace = nullptr;  // tago only
};

struct RunOptions {
  bool record_runtime = true;  // false writes zeros so outputs are byte-stable
  std::function<void(const SlotView&)> observer;
};

/// Slot loop over the pass. Every solution is validated and any violation
/// aborts with SimulationError. Deterministic for a fixed seed.
RunSummary run_simulation(const SimConfig& config, Algorithm algorithm, std::uint64_t seed,
                          const RunOptions& options = {});

/// One algorithm invocation on a fixed user set.
SlotSolution solve_slot(Algorithm algorithm, std::span<const UserDemand> users, const SimConfig& config,
                        OrchestrationTrace* trace = nullptr);

/// Seed for one sweep cell; shared across algorithms so they see the same users.
std::uint64_t cell_seed(std::uint64_t seed, int count);

struct SweepOptions {
  RunOptions run;
  unsigned threads = 1;
};

/// Constant-traffic runs over counts x algorithms x seeds, in that nesting order.
std::vector<RunSummary> sweep(std::span<const int> counts, std::span<const Algorithm> algorithms,
                              const SimConfig& config, std::span<const std::uint64_t> seeds,
                              const SweepOptions& options = {});

/// Writes metrics.csv and summary.json into out_dir (created if missing) and
/// records the metrics path on the summary. Returns the two paths.
std::vector<std::filesystem::path> write_outputs(RunSummary& summary, const std::filesystem::path& out_dir);

std::string metrics_csv(std::span<const SlotMetrics> metrics);
std::string summary_json(const RunSummary& summary);

/// Shortest round-trip decimal form.
std::string format_number(double value);

}  // namespace flexsan
