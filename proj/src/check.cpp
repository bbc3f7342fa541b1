#include "flexsan/check.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

namespace flexsan {

CheckInstance random_instance(std::size_t n_users, const SimConfig& base, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  if (n_users == 0) {
    std::uniform_int_distribution<int> pick(2, std::max(2, base.oracle.max_users));
    n_users = static_cast<std::size_t>(pick(rng));
  }
  const auto& sc = base.scenario;
  CheckInstance inst;
  inst.satellite = base.satellite;
  inst.users = gen_users(n_users, sc.profile, sc.rates, rng());

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> shadow_db(0.0, sc.shadow_sigma_db);
  double sum_w = 0.0;
  double max_w = 0.0;
  double sum_c = 0.0;
  for (auto& u : inst.users) {
    const double d = slant_range(sc.geometry, unit(rng) * sc.geometry.duration_s);
    const double h = sc.geometry.altitude_m;
    u.distance_m = d;
    u.snr_linear = sc.snr_zenith_linear * (h / d) * (h / d) * std::pow(10.0, shadow_db(rng) / 10.0);
    const auto w = try_min_bandwidth(u.r_min, u.snr_linear, base.tago.wmin_tolerance_hz, base.satellite.b_s);
    const double wv = w.value_or(base.satellite.b_s);
    sum_w += wv;
    max_w = std::max(max_w, wv);
    sum_c += per_user_cost(ArchKind::OnboardGnb, wv, base.cost_model);
  }

  // Demand-to-capacity ratio around 1 so that admission and cost both matter.
  std::uniform_real_distribution<double> load(0.4, 1.6);
  std::uniform_real_distribution<double> jitter(0.8, 1.2);
  inst.load_factor = load(rng);
  const double grid = base.tago.wmin_tolerance_hz;
  const double b_s = std::max(max_w, sum_w / (inst.load_factor * jitter(rng)));
  inst.satellite.b_s = std::ceil(b_s / grid) * grid;
  inst.satellite.c_cap = sum_c / (inst.load_factor * jitter(rng));
  return inst;
}

std::optional<double> CheckRow::cost_ratio() const {
  if (!both_full() || !(oracle_gops > 0.0)) return std::nullopt;
  return tago_gops / oracle_gops;
}

std::size_t CheckReport::within_gap() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [&](const CheckRow& r) { return r.gap() <= thresholds.max_gap; }));
}

std::size_t CheckReport::full_pairs() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const CheckRow& r) { return r.cost_ratio().has_value(); }));
}

std::size_t CheckReport::within_cost() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [&](const CheckRow& r) {
    const auto c = r.cost_ratio();
    return c && *c <= thresholds.max_cost_ratio;
  }));
}

std::size_t CheckReport::infeasible() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const CheckRow& r) { return !r.tago_feasible || !r.oracle_feasible; }));
}

bool CheckReport::gap_ok() const {
  return static_cast<double>(within_gap()) >= thresholds.min_gap_fraction * static_cast<double>(rows.size());
}

bool CheckReport::cost_ok() const {
  return static_cast<double>(within_cost()) >= thresholds.min_cost_fraction * static_cast<double>(full_pairs());
}

CheckReport run_check(const SimConfig& base, std::size_t instances, std::size_t n_users, std::uint64_t seed,
                      bool record_runtime) {
  base.validate();
  if (n_users > static_cast<std::size_t>(base.oracle.max_users))
    throw InvalidArgument("check: " + std::to_string(n_users) + " users exceeds the oracle limit of " +
                          std::to_string(base.oracle.max_users));
  if (n_users == 1) throw InvalidArgument("check: instances need at least 2 users");

  CheckReport report;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < instances; ++i) {
    CheckRow row;
    row.index = i;
    row.seed = cell_seed(seed, static_cast<int>(i));
    const auto inst = random_instance(n_users, base, row.seed);
    row.users = inst.users.size();
    row.load_factor = inst.load_factor;

    const auto t0 = std::chrono::steady_clock::now();
    const auto t = tago(inst.users, inst.satellite, base.cost_model, base.tago);
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    const auto rep = check_feasibility(t.solution, inst.users, inst.satellite, base.cost_model);
    row.tago_feasible = rep.feasible();
    for (std::size_t k = 0; k < inst.users.size(); ++k) {
      const auto& d = t.solution.decisions[k];
      if (d.admitted && *d.arch == ArchKind::OnboardGnbDu && inst.users[k].t_max < inst.satellite.t_f1)
        ++row.du_floor_breaches;
    }
    row.tago_admitted = t.solution.admitted_count();
    row.tago_gops = rep.total_gops;
    row.branch = to_string(t.trace.branch);
    row.tago_runtime_s = record_runtime ? dt.count() : 0.0;

    const auto o = exact_oracle(inst.users, inst.satellite, base.cost_model, base.oracle, base.tago.wmin_tolerance_hz);
    row.oracle_admitted = o.admitted;
    row.oracle_gops = o.total_gops;
    row.oracle_feasible = check_feasibility(o.solution, inst.users, inst.satellite, base.cost_model).feasible();
    report.rows.push_back(std::move(row));
  }
  const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
  report.wall_s = record_runtime ? wall.count() : 0.0;
  return report;
}

std::string check_csv(const CheckReport& report) {
  std::string out =
      "instance,seed,users,load_factor,branch,tago_admitted,oracle_admitted,gap,tago_gops,oracle_gops,cost_ratio,"
      "tago_feasible,tago_runtime_s\n";
  for (const auto& r : report.rows) {
    const auto ratio = r.cost_ratio();
    out += std::to_string(r.index) + ',' + std::to_string(r.seed) + ',' + std::to_string(r.users) + ',' +
           format_number(r.load_factor) + ',' + r.branch + ',' + std::to_string(r.tago_admitted) + ',' +
           std::to_string(r.oracle_admitted) + ',' + std::to_string(r.gap()) + ',' + format_number(r.tago_gops) +
           ',' + format_number(r.oracle_gops) + ',' + (ratio ? format_number(*ratio) : std::string()) + ',' +
           (r.tago_feasible ? "1" : "0") + ',' + format_number(r.tago_runtime_s) + '\n';
  }
  return out;
}

}  // namespace flexsan
