#include "flexsan/sim.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

namespace flexsan {

namespace {

constexpr std::array<const char*, 5> kAlgorithmNames{"tago", "static-gnb", "static-du", "greedy", "oracle"};

std::string valid_algorithm_names() {
  std::string out;
  for (const char* n : kAlgorithmNames) {
    if (!out.empty()) out += ", ";
    out += n;
  }
  return out;
}

double percentile(std::vector<double>& values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

template <class Get>
Stat stat_of(std::span<const SlotMetrics> metrics, Get get) {
  Stat s;
  if (metrics.empty()) return s;
  s.min = s.max = get(metrics.front());
  double sum = 0.0;
  for (const auto& m : metrics) {
    const double v = get(m);
    sum += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  s.mean = sum / static_cast<double>(metrics.size());
  return s;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
  out.close();
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

nlohmann::ordered_json stat_json(const Stat& s) {
  nlohmann::ordered_json j;
  j["mean"] = s.mean;
  j["min"] = s.min;
  j["max"] = s.max;
  return j;
}

}  // namespace

const char* to_string(Algorithm algorithm) noexcept {
  return kAlgorithmNames[static_cast<std::size_t>(algorithm)];
}

Algorithm parse_algorithm(std::string_view name) {
  for (std::size_t i = 0; i < kAlgorithmNames.size(); ++i)
    if (name == kAlgorithmNames[i]) return static_cast<Algorithm>(i);
  throw InvalidArgument("unknown algorithm '" + std::string(name) + "' (valid: " + valid_algorithm_names() + ")");
}

std::vector<Algorithm> parse_algorithm_list(std::string_view text) {
  std::vector<Algorithm> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto item = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    out.push_back(parse_algorithm(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------

void Scenario::validate() const {
  profile.validate();
  geometry.validate();
  if (constant_users < 0) throw InvalidArgument("scenario.constant_users must be >= 0");
  if (!(rates.lo > 0.0 && rates.lo <= rates.hi)) throw InvalidArgument("scenario: r_min range must satisfy 0 < lo <= hi");
  if (!(snr_zenith_linear > 0.0)) throw InvalidArgument("scenario.snr_zenith_linear must be > 0");
  if (!(shadow_sigma_db >= 0.0)) throw InvalidArgument("scenario.shadow_sigma_db must be >= 0");
}

std::vector<int> Scenario::user_counts() const {
  const std::size_t slots = geometry.slots();
  if (traffic_csv) {
    const auto trace = ingest_trace_csv(*traffic_csv, geometry.granularity_s);
    std::vector<int> counts(slots);
    for (std::size_t k = 0; k < slots; ++k)
      counts[k] = static_cast<int>(std::max(0L, std::lround(trace.at(geometry.slot_time(k)))));
    return counts;
  }
  TrafficParams p;
  p.duration_s = geometry.duration_s;
  p.granularity_s = geometry.granularity_s;
  p.constant_users = constant_users;
  auto counts = traffic_trace(traffic, p).counts;
  counts.resize(slots, counts.empty() ? 0 : counts.back());
  return counts;
}

void SimConfig::validate() const {
  satellite.validate();
  cost_model.validate();
  tago.validate();
  oracle.validate();
  scenario.validate();
}

double RunSummary::pooled_admission() const {
  if (total_active == 0) return 0.0;
  return static_cast<double>(total_admitted) / static_cast<double>(total_active);
}

// ---------------------------------------------------------------------------

SlotSolution solve_slot(Algorithm algorithm, std::span<const UserDemand> users, const SimConfig& config,
                        OrchestrationTrace* trace) {
  switch (algorithm) {
    case Algorithm::Tago: {
      auto r = tago(users, config.satellite, config.cost_model, config.tago);
      if (trace) *trace = r.trace;
      return std::move(r.solution);
    }
    case Algorithm::StaticGnb:
      return static_solve(ArchKind::OnboardGnb, users, config.satellite, config.cost_model, config.tago);
    case Algorithm::StaticDu:
      return static_solve(ArchKind::OnboardGnbDu, users, config.satellite, config.cost_model, config.tago);
    case Algorithm::Greedy:
      return naive_greedy(users, config.satellite, config.cost_model, config.tago);
    case Algorithm::Oracle:
      return exact_oracle(users, config.satellite, config.cost_model, config.oracle, config.tago.wmin_tolerance_hz)
          .solution;
  }
  throw InvalidArgument("unknown algorithm");
}

RunSummary run_simulation(const SimConfig& config, Algorithm algorithm, std::uint64_t seed,
                          const RunOptions& options) {
  config.validate();
  const Scenario& sc = config.scenario;
  const auto counts = sc.user_counts();
  if (algorithm == Algorithm::Oracle) {
    const int peak = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
    if (peak > config.oracle.max_users)
      throw InvalidArgument("oracle supports at most " + std::to_string(config.oracle.max_users) +
                            " users per slot but the scenario peaks at " + std::to_string(peak));
  }
  std::optional<SampledTrace> distance;
  if (sc.distance_csv) distance = ingest_trace_csv(*sc.distance_csv, sc.geometry.granularity_s);

  RunSummary summary;
  summary.scenario_id = sc.id;
  summary.algorithm = algorithm;
  summary.seed = seed;
  summary.config_digest = config_digest(config);
  summary.metrics.reserve(counts.size());

  UserFactory factory(sc.profile, sc.rates, sc.geometry, sc.shadow_sigma_db, seed);
  std::vector<UserFactory::Drawn> active;
  std::vector<UserDemand> users;
  const double h = sc.geometry.altitude_m;

  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double t = sc.geometry.slot_time(k);
    const auto target = static_cast<std::size_t>(counts[k]);
    while (active.size() < target) active.push_back(factory.next());
    if (active.size() > target) active.resize(target);  // latest arrivals leave first

    users.resize(active.size());
    for (std::size_t i = 0; i < active.size(); ++i) {
      users[i] = active[i].demand;
      if (distance) {
        const double d = distance->at(t);
        users[i].distance_m = d;
        users[i].snr_linear = sc.snr_zenith_linear * (h / d) * (h / d) * active[i].placement.shadow_linear;
      } else {
        users[i].distance_m = user_distance(active[i].placement, sc.geometry, t);
        users[i].snr_linear = snr_at(active[i].placement, sc.geometry, t, sc.snr_zenith_linear);
      }
    }

    OrchestrationTrace trace;
    const auto start = std::chrono::steady_clock::now();
    SlotSolution solution = solve_slot(algorithm, users, config, &trace);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

    const auto report = check_feasibility(solution, users, config.satellite, config.cost_model);
    if (!report.feasible())
      throw SimulationError(std::string(to_string(algorithm)) + " produced an infeasible solution at slot " +
                            std::to_string(k) + " (t = " + format_number(t) + " s, " +
                            std::to_string(users.size()) + " users, seed " + std::to_string(seed) +
                            "): " + report.describe());

    SlotMetrics m;
    m.t_s = t;
    m.active = users.size();
    std::size_t n_du = 0;
    std::vector<double> latencies;
    for (std::size_t i = 0; i < users.size(); ++i) {
      const auto& d = solution.decisions[i];
      if (!d.admitted) continue;
      ++m.admitted;
      latencies.push_back(report.latency_s[i]);
      if (*d.arch == ArchKind::OnboardGnbDu) {
        ++n_du;
        if (users[i].t_max < config.satellite.t_f1) ++summary.du_floor_breaches;
      }
    }
    if (m.active > 0) {
      m.adm_rate = static_cast<double>(m.admitted) / static_cast<double>(m.active);
      m.gops = report.total_gops;
      m.gops_util = report.total_gops / config.satellite.c_cap;
      m.bw_util = report.total_bandwidth_hz / config.satellite.b_s;
    }
    if (m.admitted > 0) {
      m.frac_du = static_cast<double>(n_du) / static_cast<double>(m.admitted);
      m.frac_gnb = 1.0 - m.frac_du;
      m.lat_p50 = percentile(latencies, 0.5);
      m.lat_p95 = percentile(latencies, 0.95);
    }
    m.runtime_s = options.record_runtime ? elapsed.count() : 0.0;
    summary.metrics.push_back(m);
    summary.total_active += m.active;
    summary.total_admitted += m.admitted;
    if (algorithm == Algorithm::Tago && m.active > 0) ++summary.branch_slots[static_cast<std::size_t>(trace.branch)];

    if (options.observer)
      options.observer(SlotView{k, t, users, solution, report, algorithm == Algorithm::Tago ? &trace : nullptr});
  }

  const std::span<const SlotMetrics> ms(summary.metrics);
  summary.adm_rate = stat_of(ms, [](const SlotMetrics& m) { return m.adm_rate; });
  summary.gops = stat_of(ms, [](const SlotMetrics& m) { return m.gops; });
  summary.gops_util = stat_of(ms, [](const SlotMetrics& m) { return m.gops_util; });
  summary.bw_util = stat_of(ms, [](const SlotMetrics& m) { return m.bw_util; });
  summary.runtime_s = stat_of(ms, [](const SlotMetrics& m) { return m.runtime_s; });
  return summary;
}

// ---------------------------------------------------------------------------

std::uint64_t cell_seed(std::uint64_t seed, int count) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(count)));
}

std::vector<RunSummary> sweep(std::span<const int> counts, std::span<const Algorithm> algorithms,
                              const SimConfig& config, std::span<const std::uint64_t> seeds,
                              const SweepOptions& options) {
  if (counts.empty() || algorithms.empty() || seeds.empty())
    throw InvalidArgument("sweep: counts, algorithms and seeds must be non-empty");
  for (int c : counts)
    if (c < 0) throw InvalidArgument("sweep: user counts must be >= 0");

  struct Cell {
    int count;
    Algorithm algorithm;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (int c : counts)
    for (Algorithm a : algorithms)
      for (std::uint64_t s : seeds) cells.push_back({c, a, s});

  std::vector<RunSummary> out(cells.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) {
      try {
        SimConfig cfg = config;
        cfg.scenario.traffic = TrafficKind::Constant;
        cfg.scenario.traffic_csv.reset();
        cfg.scenario.constant_users = cells[i].count;
        cfg.scenario.id = "constant-" + std::to_string(cells[i].count);
        out[i] = run_simulation(cfg, cells[i].algorithm, cell_seed(cells[i].seed, cells[i].count), options.run);
        out[i].seed = cells[i].seed;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = cells.size();
      }
    }
  };
  const unsigned threads = std::max(1U, std::min<unsigned>(options.threads, static_cast<unsigned>(cells.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

// ---------------------------------------------------------------------------

std::string format_number(double value) {
  if (value == 0.0) return "0";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::string metrics_csv(std::span<const SlotMetrics> metrics) {
  std::string out = "t_s,active,admitted,adm_rate,gops,gops_util,bw_util,frac_gnb,frac_du,lat_p50,lat_p95,runtime_s\n";
  out.reserve(out.size() + metrics.size() * 96);
  for (const auto& m : metrics) {
    out += format_number(m.t_s);
    out += ',';
    out += std::to_string(m.active);
    out += ',';
    out += std::to_string(m.admitted);
    for (double v : {m.adm_rate, m.gops, m.gops_util, m.bw_util, m.frac_gnb, m.frac_du, m.lat_p50, m.lat_p95,
                     m.runtime_s}) {
      out += ',';
      out += format_number(v);
    }
    out += '\n';
  }
  return out;
}

std::string summary_json(const RunSummary& s) {
  nlohmann::ordered_json j;
  j["scenario_id"] = s.scenario_id;
  j["algorithm"] = to_string(s.algorithm);
  j["seed"] = s.seed;
  j["config_digest"] = s.config_digest;
  j["metrics_path"] = s.metrics_path.empty() ? std::string() : s.metrics_path.filename().string();
  j["slots"] = s.metrics.size();
  j["total_active"] = s.total_active;
  j["total_admitted"] = s.total_admitted;
  j["pooled_admission"] = s.pooled_admission();
  j["adm_rate"] = stat_json(s.adm_rate);
  j["gops"] = stat_json(s.gops);
  j["gops_util"] = stat_json(s.gops_util);
  j["bw_util"] = stat_json(s.bw_util);
  j["runtime_s"] = stat_json(s.runtime_s);
  j["du_floor_breaches"] = s.du_floor_breaches;
  if (s.algorithm == Algorithm::Tago) {
    j["branch_slots"] = {{to_string(Branch::Ceo), s.branch_slots[0]},
                         {to_string(Branch::CeoThenSmo), s.branch_slots[1]},
                         {to_string(Branch::Smo), s.branch_slots[2]}};
  }
  return j.dump(2) + "\n";
}

std::vector<std::filesystem::path> write_outputs(RunSummary& summary, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create output directory '" + out_dir.string() + "': " + ec.message());
  const auto metrics_path = out_dir / "metrics.csv";
  const auto summary_path = out_dir / "summary.json";
  write_file(metrics_path, metrics_csv(summary.metrics));
  summary.metrics_path = metrics_path;
  write_file(summary_path, summary_json(summary));
  return {metrics_path, summary_path};
}

}  // namespace flexsan
