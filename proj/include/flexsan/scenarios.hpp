#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "flexsan/model.hpp"

namespace flexsan {

// ---------------------------------------------------------------------------
// Service profiles

enum class ProfileKind : std::uint8_t { Strict, Mixed, Relaxed };

struct ServiceProfile {
  static constexpr std::array<double, 3> kDelayTiers{0.05, 0.1, 0.2};  // s

  ProfileKind kind = ProfileKind::Strict;
  std::array<double, 3> weights{0.7, 0.15, 0.15};

  static ServiceProfile of(ProfileKind kind);
  void validate() const;
};

const char* to_string(ProfileKind kind) noexcept;
ProfileKind parse_profile(std::string_view name);

struct RateRange {
  double lo = 0.5e6;  // bits/s
  double hi = 2e6;
};

/// n users with t_max drawn from the profile's tier weights and r_min uniform in
/// the range. Channel fields are placeholders until a slot refreshes them.
/// Deterministic for a fixed seed.
std::vector<UserDemand> gen_users(std::size_t n, const ServiceProfile& profile, RateRange rates,
                                  std::uint64_t seed);

// ---------------------------------------------------------------------------
// Pass geometry and channel

struct PassGeometry {
  double altitude_m = 550e3;
  double user_radius_m = 25e3;
  double duration_s = 300.0;
  double granularity_s = 0.1;
  double earth_radius_m = 6371e3;
  double earth_gm = 3.986004418e14;  // m^3/s^2

  void validate() const;
  std::size_t slots() const;
  double slot_time(std::size_t k) const { return static_cast<double>(k) * granularity_s; }
  /// Orbital angular rate of a circular orbit at this altitude.
  double angular_rate() const;
};

/// Earth-central-angle form of the slant range from a ground point to the
/// satellite when the two are separated by central_angle_rad.
double slant_range_at_angle(const PassGeometry& geometry, double central_angle_rad);

/// Ground-station slant range for an overhead pass: zenith (d = h) at mid-pass,
/// symmetric about it. Throws InvalidArgument outside [0, duration].
double slant_range(const PassGeometry& geometry, double t_s);

/// A user's fixed ground offset from the station and its per-pass shadowing.
struct UserPlacement {
  double along_m = 0.0;
  double cross_m = 0.0;
  double shadow_linear = 1.0;
};

/// Uniform placement in the user disk, lognormal shadowing with sigma in dB.
std::vector<UserPlacement> place_users(std::size_t n, const PassGeometry& geometry, double shadow_sigma_db,
                                       std::uint64_t seed);

double user_distance(const UserPlacement& placement, const PassGeometry& geometry, double t_s);

/// Square-law SNR scaling relative to zenith times the user's shadowing.
double snr_at(const UserPlacement& placement, const PassGeometry& geometry, double t_s, double snr_zenith_linear);

/// snr_at sampled on every slot of the pass.
std::vector<double> snr_trace(const UserPlacement& placement, const PassGeometry& geometry,
                              double snr_zenith_linear);

// ---------------------------------------------------------------------------
// Traffic

enum class TrafficKind : std::uint8_t { Emergency, EventDriven, Tidal, Constant };

const char* to_string(TrafficKind kind) noexcept;
TrafficKind parse_traffic(std::string_view name);

struct TrafficParams {
  double duration_s = 300.0;
  double granularity_s = 0.1;
  int constant_users = 50;
};

struct TrafficTrace {
  TrafficKind kind = TrafficKind::Constant;
  double granularity_s = 0.1;
  std::vector<int> counts;  // target active users per slot
};

/// Analytic load curve value (users) at time t.
double traffic_value(TrafficKind kind, double t_s, const TrafficParams& params);

/// Per-slot active-user targets. The curves are deterministic; seed is kept for
/// interface stability with stochastic variants.
TrafficTrace traffic_trace(TrafficKind kind, const TrafficParams& params, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// CSV traces (`t_s,value`)

class TraceFormatError : public Error {
 public:
  TraceFormatError(const std::filesystem::path& path, std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct TracePoint {
  double t_s;
  double value;
};

struct SampledTrace {
  double t0 = 0.0;
  double granularity_s = 0.1;
  std::vector<double> values;

  /// Linear interpolation between samples, clamped at both ends.
  double at(double t_s) const;
};

/// Linear-interpolation resampling onto t0 + k * granularity up to the last point.
SampledTrace resample(const std::vector<TracePoint>& points, double granularity_s);

std::vector<TracePoint> parse_trace_csv(const std::filesystem::path& path);

SampledTrace ingest_trace_csv(const std::filesystem::path& path, double granularity_s);

// ---------------------------------------------------------------------------

/// Draws users one at a time for churn: QoS from the demand stream, position
/// and shadowing from an independent placement stream.
class UserFactory {
 public:
  UserFactory(const ServiceProfile& profile, RateRange rates, const PassGeometry& geometry,
              double shadow_sigma_db, std::uint64_t seed);

  struct Drawn {
    UserDemand demand;
    UserPlacement placement;
  };

  Drawn next();

 private:
  ServiceProfile profile_;
  RateRange rates_;
  PassGeometry geometry_;
  double shadow_sigma_db_;
  std::mt19937_64 demand_rng_;
  std::mt19937_64 place_rng_;
  UserId next_id_ = 0;
};

}  // namespace flexsan
