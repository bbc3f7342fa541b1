#include "flexsan/scenarios.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>

namespace flexsan {

namespace {

constexpr std::uint64_t kPlacementSalt = 0x9e3779b97f4a7c15ULL;

UserDemand draw_demand(std::mt19937_64& rng, const ServiceProfile& profile, RateRange rates, UserId id) {
  std::discrete_distribution<int> tier(profile.weights.begin(), profile.weights.end());
  std::uniform_real_distribution<double> rate(rates.lo, rates.hi);
  UserDemand u;
  u.id = id;
  u.t_max = ServiceProfile::kDelayTiers[static_cast<std::size_t>(tier(rng))];
  u.r_min = rate(rng);
  return u;
}

UserPlacement draw_placement(std::mt19937_64& rng, const PassGeometry& geometry, double shadow_sigma_db) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> shadow_db(0.0, 1.0);
  const double r = geometry.user_radius_m * std::sqrt(unit(rng));
  const double theta = 2.0 * std::numbers::pi * unit(rng);
  UserPlacement p;
  p.along_m = r * std::cos(theta);
  p.cross_m = r * std::sin(theta);
  p.shadow_linear = std::pow(10.0, shadow_sigma_db * shadow_db(rng) / 10.0);
  return p;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

bool parse_double(std::string_view text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace

// ---------------------------------------------------------------------------

ServiceProfile ServiceProfile::of(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::Strict:
      return {kind, {0.7, 0.15, 0.15}};
    case ProfileKind::Mixed:
      return {kind, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
    case ProfileKind::Relaxed:
      return {kind, {0.15, 0.15, 0.7}};
  }
  throw InvalidArgument("unknown service profile");
}

void ServiceProfile::validate() const {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidArgument("profile weights must be >= 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("profile weights must sum to 1");
}

const char* to_string(ProfileKind kind) noexcept {
  switch (kind) {
    case ProfileKind::Strict:
      return "STRICT";
    case ProfileKind::Mixed:
      return "MIXED";
    case ProfileKind::Relaxed:
      return "RELAXED";
  }
  return "?";
}

ProfileKind parse_profile(std::string_view name) {
  if (name == "STRICT" || name == "strict") return ProfileKind::Strict;
  if (name == "MIXED" || name == "mixed") return ProfileKind::Mixed;
  if (name == "RELAXED" || name == "relaxed") return ProfileKind::Relaxed;
  throw InvalidArgument("unknown service profile '" + std::string(name) + "' (STRICT, MIXED, RELAXED)");
}

std::vector<UserDemand> gen_users(std::size_t n, const ServiceProfile& profile, RateRange rates,
                                  std::uint64_t seed) {
  profile.validate();
  if (!(rates.lo > 0.0 && rates.lo <= rates.hi)) throw InvalidArgument("gen_users: invalid r_min range");
  std::mt19937_64 rng(seed);
  std::vector<UserDemand> users;
  users.reserve(n);
  for (std::size_t i = 0; i < n; ++i) users.push_back(draw_demand(rng, profile, rates, static_cast<UserId>(i)));
  return users;
}

// ---------------------------------------------------------------------------

void PassGeometry::validate() const {
  if (!(altitude_m > 0.0)) throw InvalidArgument("geometry.altitude_m must be > 0");
  if (!(user_radius_m >= 0.0)) throw InvalidArgument("geometry.user_radius_m must be >= 0");
  if (!(duration_s > 0.0 && granularity_s > 0.0)) throw InvalidArgument("geometry: duration and granularity must be > 0");
  const double ratio = duration_s / granularity_s;
  if (std::abs(ratio - std::round(ratio)) > 1e-6)
    throw InvalidArgument("geometry: duration must be an integral number of slots");
  if (!(earth_radius_m > 0.0 && earth_gm > 0.0)) throw InvalidArgument("geometry: earth constants must be > 0");
}

std::size_t PassGeometry::slots() const {
  return static_cast<std::size_t>(std::llround(duration_s / granularity_s));
}

double PassGeometry::angular_rate() const {
  const double r = earth_radius_m + altitude_m;
  return std::sqrt(earth_gm / (r * r * r));
}

double slant_range_at_angle(const PassGeometry& g, double central_angle_rad) {
  const double re = g.earth_radius_m;
  const double rs = g.earth_radius_m + g.altitude_m;
  const double d2 = re * re + rs * rs - 2.0 * re * rs * std::cos(central_angle_rad);
  return std::sqrt(std::max(d2, 0.0));
}

double slant_range(const PassGeometry& g, double t_s) {
  if (!(t_s >= 0.0 && t_s <= g.duration_s))
    throw InvalidArgument("slant_range: t = " + std::to_string(t_s) + " s outside the pass");
  const double phi = g.angular_rate() * (t_s - 0.5 * g.duration_s);
  if (phi == 0.0) return g.altitude_m;
  return slant_range_at_angle(g, phi);
}

std::vector<UserPlacement> place_users(std::size_t n, const PassGeometry& geometry, double shadow_sigma_db,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ kPlacementSalt);
  std::vector<UserPlacement> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(draw_placement(rng, geometry, shadow_sigma_db));
  return out;
}

double user_distance(const UserPlacement& p, const PassGeometry& g, double t_s) {
  if (!(t_s >= 0.0 && t_s <= g.duration_s))
    throw InvalidArgument("user_distance: t = " + std::to_string(t_s) + " s outside the pass");
  // Satellite ground track runs along the 'along' axis through the station.
  const double track_m = g.angular_rate() * (t_s - 0.5 * g.duration_s) * g.earth_radius_m;
  const double dx = track_m - p.along_m;
  const double ground_m = std::hypot(dx, p.cross_m);
  if (ground_m == 0.0) return g.altitude_m;
  return slant_range_at_angle(g, ground_m / g.earth_radius_m);
}

double snr_at(const UserPlacement& p, const PassGeometry& g, double t_s, double snr_zenith_linear) {
  if (!(snr_zenith_linear > 0.0)) throw InvalidArgument("snr_zenith must be > 0");
  const double ratio = g.altitude_m / user_distance(p, g, t_s);
  return snr_zenith_linear * ratio * ratio * p.shadow_linear;
}

std::vector<double> snr_trace(const UserPlacement& p, const PassGeometry& g, double snr_zenith_linear) {
  g.validate();
  std::vector<double> out(g.slots());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = snr_at(p, g, g.slot_time(k), snr_zenith_linear);
  return out;
}

// ---------------------------------------------------------------------------

const char* to_string(TrafficKind kind) noexcept {
  switch (kind) {
    case TrafficKind::Emergency:
      return "emergency";
    case TrafficKind::EventDriven:
      return "event-driven";
    case TrafficKind::Tidal:
      return "tidal";
    case TrafficKind::Constant:
      return "constant";
  }
  return "?";
}

TrafficKind parse_traffic(std::string_view name) {
  if (name == "emergency") return TrafficKind::Emergency;
  if (name == "event-driven" || name == "event_driven" || name == "eventdriven") return TrafficKind::EventDriven;
  if (name == "tidal") return TrafficKind::Tidal;
  if (name == "constant") return TrafficKind::Constant;
  throw InvalidArgument("unknown traffic kind '" + std::string(name) +
                        "' (emergency, event-driven, tidal, constant)");
}

double traffic_value(TrafficKind kind, double t, const TrafficParams& params) {
  // Curves are laid out on the default 300 s window and stretched to duration.
  const double scale = params.duration_s / 300.0;
  const double x = t / scale;
  switch (kind) {
    case TrafficKind::Constant:
      return params.constant_users;
    case TrafficKind::Emergency:
      // Steady 100, spike to 375 within 30 s, hold, recover over 150 s.
      if (x < 60.0) return 100.0;
      if (x < 90.0) return 100.0 + 275.0 * (x - 60.0) / 30.0;
      if (x < 150.0) return 375.0;
      return 375.0 - 275.0 * std::min(x - 150.0, 150.0) / 150.0;
    case TrafficKind::EventDriven:
      // Linear 50->70, quadratic rise to 280, +-20 ripple at the peak, sharp drop.
      if (x < 90.0) return 50.0 + 20.0 * x / 90.0;
      if (x < 150.0) {
        const double u = (x - 90.0) / 60.0;
        return 70.0 + 210.0 * u * u;
      }
      if (x < 240.0) return 280.0 + 20.0 * std::sin(2.0 * std::numbers::pi * (x - 150.0) / 20.0);
      if (x < 250.0) return 280.0 - 230.0 * (x - 240.0) / 10.0;
      return 50.0;
    case TrafficKind::Tidal: {
      // Four half-sine humps of 75 s each.
      static constexpr std::array<double, 4> kAmplitudes{150.0, 250.0, 300.0, 200.0};
      const int hump = std::clamp(static_cast<int>(x / 75.0), 0, 3);
      const double tau = x - 75.0 * hump;
      return kAmplitudes[static_cast<std::size_t>(hump)] * std::sin(std::numbers::pi * tau / 75.0);
    }
  }
  throw InvalidArgument("unknown traffic kind");
}

TrafficTrace traffic_trace(TrafficKind kind, const TrafficParams& params, std::uint64_t /*seed*/) {
  if (!(params.duration_s > 0.0 && params.granularity_s > 0.0))
    throw InvalidArgument("traffic: duration and granularity must be > 0");
  if (params.constant_users < 0) throw InvalidArgument("traffic.constant_users must be >= 0");
  const auto slots = static_cast<std::size_t>(std::llround(params.duration_s / params.granularity_s));
  TrafficTrace trace{kind, params.granularity_s, std::vector<int>(slots)};
  for (std::size_t k = 0; k < slots; ++k) {
    const double v = traffic_value(kind, static_cast<double>(k) * params.granularity_s, params);
    trace.counts[k] = static_cast<int>(std::max(0L, std::lround(v)));
  }
  return trace;
}

// ---------------------------------------------------------------------------

TraceFormatError::TraceFormatError(const std::filesystem::path& path, std::size_t line, const std::string& what)
    : Error(path.string() + ":" + std::to_string(line) + ": " + what), line_(line) {}

double SampledTrace::at(double t_s) const {
  if (values.empty()) throw InvalidArgument("SampledTrace: empty");
  const double pos = (t_s - t0) / granularity_s;
  if (pos <= 0.0) return values.front();
  const auto last = static_cast<double>(values.size() - 1);
  if (pos >= last) return values.back();
  const auto k = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(k);
  return values[k] + frac * (values[k + 1] - values[k]);
}

SampledTrace resample(const std::vector<TracePoint>& points, double granularity_s) {
  if (points.empty()) throw InvalidArgument("resample: no points");
  if (!(granularity_s > 0.0)) throw InvalidArgument("resample: granularity must be > 0");
  SampledTrace out;
  out.t0 = points.front().t_s;
  out.granularity_s = granularity_s;
  const double span = points.back().t_s - out.t0;
  const auto n = static_cast<std::size_t>(std::floor(span / granularity_s + 1e-9)) + 1;
  out.values.resize(n);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = out.t0 + static_cast<double>(k) * granularity_s;
    while (seg + 1 < points.size() && points[seg + 1].t_s < t) ++seg;
    if (seg + 1 >= points.size()) {
      out.values[k] = points.back().value;
      continue;
    }
    const auto& a = points[seg];
    const auto& b = points[seg + 1];
    const double frac = std::clamp((t - a.t_s) / (b.t_s - a.t_s), 0.0, 1.0);
    out.values[k] = a.value + frac * (b.value - a.value);
  }
  return out;
}

std::vector<TracePoint> parse_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TraceFormatError(path, 0, "cannot open file");
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw TraceFormatError(path, 1, "empty file (expected header 't_s,value')");
  ++line_no;
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (trim(line) != "t_s,value") throw TraceFormatError(path, 1, "expected header 't_s,value'");

  std::vector<TracePoint> points;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw TraceFormatError(path, line_no, "expected two comma-separated fields");
    TracePoint p{};
    if (!parse_double(std::string_view(line).substr(0, comma), p.t_s))
      throw TraceFormatError(path, line_no, "malformed t_s");
    if (!parse_double(std::string_view(line).substr(comma + 1), p.value))
      throw TraceFormatError(path, line_no, "malformed value");
    if (!points.empty() && !(p.t_s > points.back().t_s))
      throw TraceFormatError(path, line_no, "timestamps must be strictly increasing");
    points.push_back(p);
  }
  if (points.empty()) throw TraceFormatError(path, line_no + 1, "no data rows");
  return points;
}

SampledTrace ingest_trace_csv(const std::filesystem::path& path, double granularity_s) {
  return resample(parse_trace_csv(path), granularity_s);
}

// ---------------------------------------------------------------------------

UserFactory::UserFactory(const ServiceProfile& profile, RateRange rates, const PassGeometry& geometry,
                         double shadow_sigma_db, std::uint64_t seed)
    : profile_(profile),
      rates_(rates),
      geometry_(geometry),
      shadow_sigma_db_(shadow_sigma_db),
      demand_rng_(seed),
      place_rng_(seed ^ kPlacementSalt) {
  profile_.validate();
}

UserFactory::Drawn UserFactory::next() {
  Drawn d;
  d.demand = draw_demand(demand_rng_, profile_, rates_, next_id_++);
  d.placement = draw_placement(place_rng_, geometry_, shadow_sigma_db_);
  return d;
}

}  // namespace flexsan
