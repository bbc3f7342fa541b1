#include "flexsan/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace flexsan {

namespace {

constexpr double kHzPerMhz = 1e6;
// Slack for sums whose evaluation order differs between the solvers and the checker.
constexpr double kCapRelTol = 1e-9;
constexpr double kDelayAbsTol = 1e-12;

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

const char* to_string(ArchKind arch) noexcept {
  switch (arch) {
    case ArchKind::OnboardGnb:
      return "gnb";
    case ArchKind::OnboardGnbDu:
      return "du";
  }
  return "?";
}

const char* to_string(Violation v) noexcept {
  switch (v) {
    case Violation::Delay:
      return "delay";
    case Violation::Throughput:
      return "throughput";
    case Violation::Association:
      return "association";
    case Violation::BandwidthCap:
      return "bandwidth-cap";
    case Violation::ComputeCap:
      return "compute-cap";
    case Violation::QueueStability:
      return "queue-stability";
  }
  return "?";
}

void UserDemand::validate() const {
  if (!positive_finite(r_min)) throw InvalidArgument("user " + std::to_string(id) + ": r_min must be > 0");
  if (!positive_finite(t_max)) throw InvalidArgument("user " + std::to_string(id) + ": t_max must be > 0");
  if (!positive_finite(snr_linear))
    throw InvalidArgument("user " + std::to_string(id) + ": snr_linear must be > 0");
  if (!std::isfinite(distance_m) || distance_m < 0.0)
    throw InvalidArgument("user " + std::to_string(id) + ": distance_m must be >= 0");
}

void SatelliteConfig::validate() const {
  if (!positive_finite(b_s)) throw InvalidArgument("satellite.b_s must be > 0");
  if (!positive_finite(c_cap)) throw InvalidArgument("satellite.c_cap must be > 0");
  if (!positive_finite(s_p)) throw InvalidArgument("satellite.s_p must be > 0");
  if (!positive_finite(job_gop)) throw InvalidArgument("satellite.job_gop must be > 0");
  if (!positive_finite(light_speed)) throw InvalidArgument("satellite.light_speed must be > 0");
  if (!positive_finite(t_f1_min) || !positive_finite(t_f1_max) || t_f1_min > t_f1_max)
    throw InvalidArgument("satellite.t_f1_min/t_f1_max must be positive and ordered");
  if (!positive_finite(t_f1) || t_f1 < t_f1_min || t_f1 > t_f1_max)
    throw InvalidArgument("satellite.t_f1 must lie in [t_f1_min, t_f1_max]");
}

// ---------------------------------------------------------------------------

CostModel::CostModel()
    : CostModel({
          {"phy", 600.0, 60.0, true},
          {"mac", 120.0, 36.0, true},
          {"rlc", 80.0, 24.0, true},
          {"pdcp", 150.0, 18.0, false},
          {"rrc_sdap", 50.0, 12.0, false},
      }) {}

CostModel::CostModel(std::vector<ProcessingFunction> functions) : functions_(std::move(functions)) {
  for (const auto& f : functions_) {
    slope_all_ += f.slope;
    base_all_ += f.base;
    if (f.in_sat) {
      slope_sat_ += f.slope;
      base_sat_ += f.base;
    }
  }
  validate();
}

CostModel CostModel::two_tier(double slope_all, double base_all, double slope_sat, double base_sat) {
  return CostModel({
      {"onboard", slope_sat, base_sat, true},
      {"ground", slope_all - slope_sat, base_all - base_sat, false},
  });
}

void CostModel::validate() const {
  if (functions_.empty()) throw InvalidArgument("cost_model: at least one function required");
  for (const auto& f : functions_) {
    if (!std::isfinite(f.slope) || !std::isfinite(f.base) || f.slope < 0.0 || f.base < 0.0)
      throw InvalidArgument("cost_model." + f.name + ": coefficients must be finite and >= 0");
  }
  // The DU split must be strictly cheaper on board in at least one coefficient
  // and never more expensive in either.
  if (!(slope_sat_ <= slope_all_ && base_sat_ <= base_all_ &&
        (slope_sat_ < slope_all_ || base_sat_ < base_all_)))
    throw InvalidArgument("cost_model: on-board subset must be strictly cheaper than the full stack");
}

// ---------------------------------------------------------------------------

std::size_t SlotSolution::admitted_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(decisions.begin(), decisions.end(), [](const UserDecision& d) { return d.admitted; }));
}

double SlotSolution::total_bandwidth() const noexcept {
  double sum = 0.0;
  for (const auto& d : decisions)
    if (d.admitted) sum += d.bandwidth_hz;
  return sum;
}

std::string FeasibilityReport::describe() const {
  if (violations.empty()) return "feasible";
  std::ostringstream os;
  os << violations.size() << " violation(s):";
  for (const auto& v : violations) {
    os << ' ' << to_string(v.kind);
    if (v.user_index) os << "[user#" << *v.user_index << ']';
  }
  os << " (total_gops=" << total_gops << ", total_bw_hz=" << total_bandwidth_hz << ')';
  return os.str();
}

// ---------------------------------------------------------------------------

double achievable_rate(double bandwidth_hz, double snr_linear) {
  return bandwidth_hz * std::log2(1.0 + snr_linear);
}

double transmission_delay(double distance_m, double bandwidth_hz, double snr_linear, double packet_bits,
                          double light_speed) {
  const double rate = achievable_rate(bandwidth_hz, snr_linear);
  if (!(rate > 0.0)) throw RateUndefined("transmission_delay: zero bandwidth, rate undefined");
  return distance_m / light_speed + packet_bits / rate;
}

double per_user_cost(ArchKind arch, double bandwidth_hz, const CostModel& cost_model) {
  const double mhz = bandwidth_hz / kHzPerMhz;
  double total = 0.0;
  for (const auto& f : cost_model.functions()) {
    if (arch == ArchKind::OnboardGnbDu && !f.in_sat) continue;
    total += f.slope * mhz + f.base;
  }
  return total;
}

double aggregate_load(const SlotSolution& solution, const CostModel& cost_model) {
  double lambda = 0.0;
  for (const auto& d : solution.decisions) {
    if (d.admitted && d.arch) lambda += per_user_cost(*d.arch, d.bandwidth_hz, cost_model);
  }
  return lambda;
}

double queuing_delay(double lambda_gops, const SatelliteConfig& config) {
  const double mu = config.mu();
  if (lambda_gops >= mu)
    throw QueueUnstable("queue unstable: load " + std::to_string(lambda_gops) + " >= service rate " +
                        std::to_string(mu));
  return config.job_gop / (mu - lambda_gops);
}

double processing_delay(ArchKind arch, double lambda_gops, const SatelliteConfig& config) {
  const double f1 = arch == ArchKind::OnboardGnbDu ? config.t_f1 : 0.0;
  return queuing_delay(lambda_gops, config) + f1;
}

double end_to_end_latency(std::span<const UserDemand> users, std::size_t index, const SlotSolution& solution,
                          const SatelliteConfig& config, const CostModel& cost_model) {
  if (index >= users.size() || solution.size() != users.size())
    throw InvalidArgument("end_to_end_latency: solution shape does not match user set");
  const UserDecision& d = solution.decisions[index];
  if (!d.admitted) throw NotAdmitted("user " + std::to_string(users[index].id) + " is not admitted");
  if (!d.arch) throw InvalidArgument("admitted user without architecture");
  const UserDemand& u = users[index];
  const double lambda = aggregate_load(solution, cost_model);
  return transmission_delay(u.distance_m, d.bandwidth_hz, u.snr_linear, config.s_p, config.light_speed) +
         processing_delay(*d.arch, lambda, config);
}

std::optional<double> try_min_bandwidth(double r_min, double snr_linear, double tolerance_hz,
                                        double max_bandwidth_hz) {
  if (!positive_finite(r_min) || !positive_finite(snr_linear) || !positive_finite(tolerance_hz))
    throw InvalidArgument("min_bandwidth: r_min, snr and tolerance must be > 0");
  const auto max_steps = static_cast<std::int64_t>(std::floor(max_bandwidth_hz / tolerance_hz + 1e-9));
  const auto meets = [&](std::int64_t k) {
    return achievable_rate(static_cast<double>(k) * tolerance_hz, snr_linear) >= r_min;
  };
  if (max_steps < 1 || !meets(max_steps)) return std::nullopt;
  // Smallest k in [1, max_steps] with meets(k); meets is monotone in k.
  std::int64_t lo = 1;
  std::int64_t hi = max_steps;
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (meets(mid)) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return static_cast<double>(lo) * tolerance_hz;
}

double min_bandwidth(double r_min, double snr_linear, double tolerance_hz, double max_bandwidth_hz) {
  auto w = try_min_bandwidth(r_min, snr_linear, tolerance_hz, max_bandwidth_hz);
  if (!w)
    throw ThroughputUnsatisfiable("throughput unsatisfiable: r_min " + std::to_string(r_min) +
                                  " bit/s needs more than " + std::to_string(max_bandwidth_hz) + " Hz");
  return *w;
}

// ---------------------------------------------------------------------------

FeasibilityReport check_feasibility(const SlotSolution& solution, std::span<const UserDemand> users,
                                    const SatelliteConfig& config, const CostModel& cost_model) {
  if (solution.size() != users.size())
    throw InvalidArgument("check_feasibility: solution has " + std::to_string(solution.size()) +
                          " decisions for " + std::to_string(users.size()) + " users");
  const std::size_t n = users.size();
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  FeasibilityReport report;
  report.latency_s.assign(n, nan);
  report.rate_bps.assign(n, nan);

  std::vector<bool> well_formed(n, false);
  double lambda = 0.0;
  double bandwidth = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const UserDecision& d = solution.decisions[i];
    const bool bw_ok = std::isfinite(d.bandwidth_hz) && d.bandwidth_hz >= 0.0;
    const bool consistent = bw_ok && (d.admitted == d.arch.has_value()) && (d.admitted == (d.bandwidth_hz > 0.0));
    if (!consistent) report.violations.push_back({Violation::Association, i});
    if (!d.admitted) continue;
    if (bw_ok) bandwidth += d.bandwidth_hz;
    if (d.arch && bw_ok) lambda += per_user_cost(*d.arch, d.bandwidth_hz, cost_model);
    well_formed[i] = consistent;
  }
  report.total_gops = lambda;
  report.total_bandwidth_hz = bandwidth;

  if (bandwidth > config.b_s * (1.0 + kCapRelTol)) report.violations.push_back({Violation::BandwidthCap, {}});
  if (lambda > config.c_cap * (1.0 + kCapRelTol)) report.violations.push_back({Violation::ComputeCap, {}});
  const bool stable = lambda < config.mu();
  if (!stable) report.violations.push_back({Violation::QueueStability, {}});
  const double t_queue = stable ? config.job_gop / (config.mu() - lambda) : std::numeric_limits<double>::infinity();

  for (std::size_t i = 0; i < n; ++i) {
    const UserDecision& d = solution.decisions[i];
    if (!d.admitted) continue;
    const UserDemand& u = users[i];
    const double bw = std::isfinite(d.bandwidth_hz) ? std::max(d.bandwidth_hz, 0.0) : 0.0;
    const double rate = achievable_rate(bw, u.snr_linear);
    report.rate_bps[i] = rate;
    if (rate < u.r_min) report.violations.push_back({Violation::Throughput, i});

    double latency = std::numeric_limits<double>::infinity();
    if (well_formed[i] && rate > 0.0) {
      const double f1 = *d.arch == ArchKind::OnboardGnbDu ? config.t_f1 : 0.0;
      latency = u.distance_m / config.light_speed + config.s_p / rate + t_queue + f1;
    }
    report.latency_s[i] = latency;
    if (!(latency <= u.t_max + kDelayAbsTol)) report.violations.push_back({Violation::Delay, i});
  }
  return report;
}

}  // namespace flexsan
