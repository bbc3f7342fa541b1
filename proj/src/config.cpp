#include "flexsan/config.hpp"

#include <charconv>
#include <fstream>
#include <set>

namespace flexsan {

using nlohmann::json;

namespace {

// Reads the members of one object, remembering which keys were used so that
// anything left over can be reported with its full path.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError("'" + display() + "' must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError("'" + child(key) + "' has the wrong type");
    }
  }

  template <class T>
  void get_optional(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    if (it->is_null()) {
      out.reset();
      return;
    }
    T value{};
    get(key, value);
    out = value;
  }

  const json* sub(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  std::string child(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + child(it.key()) + "'");
  }

 private:
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  const json& obj_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

json satellite_json(const SatelliteConfig& s) {
  return {{"b_s", s.b_s},       {"c_cap", s.c_cap},     {"t_f1", s.t_f1},       {"t_f1_min", s.t_f1_min},
          {"t_f1_max", s.t_f1_max}, {"s_p", s.s_p},      {"job_gop", s.job_gop}, {"light_speed", s.light_speed}};
}

void read_satellite(const json& j, const std::string& path, SatelliteConfig& s) {
  Reader r(j, path);
  r.get("b_s", s.b_s);
  r.get("c_cap", s.c_cap);
  r.get("t_f1", s.t_f1);
  r.get("t_f1_min", s.t_f1_min);
  r.get("t_f1_max", s.t_f1_max);
  r.get("s_p", s.s_p);
  r.get("job_gop", s.job_gop);
  r.get("light_speed", s.light_speed);
  r.finish();
}

json cost_json(const CostModel& c) {
  json fns = json::array();
  for (const auto& f : c.functions())
    fns.push_back({{"name", f.name}, {"slope", f.slope}, {"base", f.base}, {"in_sat", f.in_sat}});
  return {{"functions", fns}};
}

void read_cost(const json& j, const std::string& path, CostModel& c) {
  Reader r(j, path);
  if (const json* fns = r.sub("functions")) {
    if (!fns->is_array()) throw ConfigError("'" + r.child("functions") + "' must be an array");
    std::vector<ProcessingFunction> out;
    for (std::size_t i = 0; i < fns->size(); ++i) {
      ProcessingFunction f;
      Reader fr((*fns)[i], r.child("functions") + "." + std::to_string(i));
      fr.get("name", f.name);
      fr.get("slope", f.slope);
      fr.get("base", f.base);
      fr.get("in_sat", f.in_sat);
      fr.finish();
      out.push_back(std::move(f));
    }
    c = CostModel(std::move(out));
  }
  r.finish();
}

json tago_json(const TagoParams& p) {
  return {{"sigma_light", p.sigma_light},
          {"sigma_heavy", p.sigma_heavy},
          {"tau_strict", p.tau_strict},
          {"tau_margin", p.tau_margin},
          {"eta_hz", p.eta_hz},
          {"omega_eff", p.omega_eff},
          {"omega_flex", p.omega_flex},
          {"alpha_hz_per_gop", p.alpha_hz_per_gop ? json(*p.alpha_hz_per_gop) : json(nullptr)},
          {"t_bar", p.t_bar},
          {"k_max_bandwidth", p.k_max_bandwidth},
          {"k_max_refine", p.k_max_refine},
          {"wmin_tolerance_hz", p.wmin_tolerance_hz}};
}

void read_tago(const json& j, const std::string& path, TagoParams& p) {
  Reader r(j, path);
  r.get("sigma_light", p.sigma_light);
  r.get("sigma_heavy", p.sigma_heavy);
  r.get("tau_strict", p.tau_strict);
  r.get("tau_margin", p.tau_margin);
  r.get("eta_hz", p.eta_hz);
  r.get("omega_eff", p.omega_eff);
  r.get("omega_flex", p.omega_flex);
  r.get_optional("alpha_hz_per_gop", p.alpha_hz_per_gop);
  r.get("t_bar", p.t_bar);
  r.get("k_max_bandwidth", p.k_max_bandwidth);
  r.get("k_max_refine", p.k_max_refine);
  r.get("wmin_tolerance_hz", p.wmin_tolerance_hz);
  r.finish();
}

json oracle_json(const OracleConfig& o) {
  return {{"max_users", o.max_users},
          {"bandwidth_levels", o.bandwidth_levels},
          {"level_step_hz", o.level_step_hz},
          {"max_candidates", o.max_candidates}};
}

void read_oracle(const json& j, const std::string& path, OracleConfig& o) {
  Reader r(j, path);
  r.get("max_users", o.max_users);
  r.get("bandwidth_levels", o.bandwidth_levels);
  r.get("level_step_hz", o.level_step_hz);
  r.get("max_candidates", o.max_candidates);
  r.finish();
}

json path_json(const std::optional<std::filesystem::path>& p) { return p ? json(p->string()) : json(nullptr); }

json scenario_json(const Scenario& s) {
  const auto& g = s.geometry;
  return {{"id", s.id},
          {"traffic", to_string(s.traffic)},
          {"constant_users", s.constant_users},
          {"profile", to_string(s.profile.kind)},
          {"profile_weights", s.profile.weights == ServiceProfile::of(s.profile.kind).weights
                                  ? json(nullptr)
                                  : json(s.profile.weights)},
          {"r_min_lo", s.rates.lo},
          {"r_min_hi", s.rates.hi},
          {"snr_zenith_linear", s.snr_zenith_linear},
          {"shadow_sigma_db", s.shadow_sigma_db},
          {"distance_csv", path_json(s.distance_csv)},
          {"traffic_csv", path_json(s.traffic_csv)},
          {"geometry",
           {{"altitude_m", g.altitude_m},
            {"user_radius_m", g.user_radius_m},
            {"duration_s", g.duration_s},
            {"granularity_s", g.granularity_s},
            {"earth_radius_m", g.earth_radius_m},
            {"earth_gm", g.earth_gm}}}};
}

void read_scenario(const json& j, const std::string& path, Scenario& s) {
  Reader r(j, path);
  r.get("id", s.id);
  std::string traffic = to_string(s.traffic);
  r.get("traffic", traffic);
  std::string profile = to_string(s.profile.kind);
  r.get("profile", profile);
  std::optional<std::array<double, 3>> weights;
  r.get_optional("profile_weights", weights);
  try {
    s.traffic = parse_traffic(traffic);
    s.profile = ServiceProfile::of(parse_profile(profile));
  } catch (const InvalidArgument& e) {
    throw ConfigError(r.child("traffic/profile") + ": " + e.what());
  }
  if (weights) s.profile.weights = *weights;
  r.get("constant_users", s.constant_users);
  r.get("r_min_lo", s.rates.lo);
  r.get("r_min_hi", s.rates.hi);
  r.get("snr_zenith_linear", s.snr_zenith_linear);
  r.get("shadow_sigma_db", s.shadow_sigma_db);
  std::optional<std::string> distance_csv = s.distance_csv ? std::optional(s.distance_csv->string()) : std::nullopt;
  std::optional<std::string> traffic_csv = s.traffic_csv ? std::optional(s.traffic_csv->string()) : std::nullopt;
  r.get_optional("distance_csv", distance_csv);
  r.get_optional("traffic_csv", traffic_csv);
  s.distance_csv = distance_csv ? std::optional<std::filesystem::path>(*distance_csv) : std::nullopt;
  s.traffic_csv = traffic_csv ? std::optional<std::filesystem::path>(*traffic_csv) : std::nullopt;
  if (const json* g = r.sub("geometry")) {
    Reader gr(*g, r.child("geometry"));
    gr.get("altitude_m", s.geometry.altitude_m);
    gr.get("user_radius_m", s.geometry.user_radius_m);
    gr.get("duration_s", s.geometry.duration_s);
    gr.get("granularity_s", s.geometry.granularity_s);
    gr.get("earth_radius_m", s.geometry.earth_radius_m);
    gr.get("earth_gm", s.geometry.earth_gm);
    gr.finish();
  }
  r.finish();
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  static constexpr char kHex[] = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = kHex[h & 0xF];
    h >>= 4;
  }
  buf[16] = '\0';
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------

nlohmann::json to_json(const SimConfig& c) {
  return {{"satellite", satellite_json(c.satellite)},
          {"cost_model", cost_json(c.cost_model)},
          {"tago", tago_json(c.tago)},
          {"oracle", oracle_json(c.oracle)},
          {"scenario", scenario_json(c.scenario)}};
}

nlohmann::json to_json(const RootConfig& c) {
  json j = to_json(c.sim);
  j["algorithm"] = to_string(c.algorithm);
  j["output_dir"] = c.output_dir.string();
  j["seeds"] = c.seeds;
  j["record_runtime"] = c.record_runtime;
  return j;
}

std::string config_digest(const SimConfig& config) {
  // nlohmann objects are key-sorted, so the dump is canonical.
  return fnv1a_hex(to_json(config).dump());
}

void RootConfig::validate() const {
  sim.validate();
  if (seeds.empty()) throw InvalidArgument("seeds must be non-empty");
  if (output_dir.empty()) throw InvalidArgument("output_dir must be non-empty");
}

RootConfig root_config_from_json(const nlohmann::json& doc) {
  RootConfig c;
  Reader r(doc, "");
  if (const json* j = r.sub("satellite")) read_satellite(*j, "satellite", c.sim.satellite);
  if (const json* j = r.sub("cost_model")) read_cost(*j, "cost_model", c.sim.cost_model);
  if (const json* j = r.sub("tago")) read_tago(*j, "tago", c.sim.tago);
  if (const json* j = r.sub("oracle")) read_oracle(*j, "oracle", c.sim.oracle);
  if (const json* j = r.sub("scenario")) read_scenario(*j, "scenario", c.sim.scenario);
  std::string algorithm = to_string(c.algorithm);
  r.get("algorithm", algorithm);
  try {
    c.algorithm = parse_algorithm(algorithm);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("algorithm: ") + e.what());
  }
  std::string out_dir = c.output_dir.string();
  r.get("output_dir", out_dir);
  c.output_dir = out_dir;
  r.get("seeds", c.seeds);
  r.get("record_runtime", c.record_runtime);
  r.finish();
  return c;
}

void apply_override(nlohmann::json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override '" + std::string(assignment) + "' must look like dotted.path=value");
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (node->is_object()) {
      auto it = node->find(part);
      if (it == node->end()) throw ConfigError("unknown config key '" + key + "'");
      node = &*it;
    } else if (node->is_array()) {
      std::size_t idx = 0;
      const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), idx);
      if (ec != std::errc() || ptr != part.data() + part.size() || idx >= node->size())
        throw ConfigError("unknown config key '" + key + "'");
      node = &(*node)[idx];
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = text;
  *node = std::move(value);
}

RootConfig load_config(const nlohmann::json& doc, std::span<const std::string> overrides) {
  RootConfig c = root_config_from_json(doc);
  if (!overrides.empty()) {
    json full = to_json(c);
    for (const auto& o : overrides) apply_override(full, o);
    c = root_config_from_json(full);
  }
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return c;
}

RootConfig load_config(const std::filesystem::path* path, std::span<const std::string> overrides) {
  json doc = json::object();
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot open config file '" + path->string() + "'");
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config file '" + path->string() + "' is not valid JSON: " + e.what());
    }
  }
  return load_config(doc, overrides);
}

}  // namespace flexsan
