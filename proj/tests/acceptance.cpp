// Acceptance gate: one PASS/FAIL line per criterion, exit status = failures.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "flexsan/check.hpp"
#include "flexsan/sim.hpp"
#include "support/instances.hpp"
#include "support/reference.hpp"

using namespace flexsan;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Solutions seen, checker violations and DU floor breaches across all runs.
struct Audit {
  std::size_t solutions = 0;
  std::size_t violations = 0;
  std::size_t du_floor = 0;
  std::vector<std::string> failures;

  void note(const SlotSolution& s, std::span<const UserDemand> users, const SatelliteConfig& cfg,
            const CostModel& cm) {
    ++solutions;
    if (!check_feasibility(s, users, cfg, cm).feasible()) ++violations;
    for (std::size_t i = 0; i < users.size(); ++i) {
      const auto& d = s.decisions[i];
      if (d.admitted && *d.arch == ArchKind::OnboardGnbDu && users[i].t_max < cfg.t_f1) ++du_floor;
    }
  }
};

Audit audit;
int failed = 0;

void report(int n, bool pass, const std::string& detail) {
  std::printf("CRITERION %d %s  %s\n", n, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failed;
}

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::optional<RunSummary> simulate(const SimConfig& cfg, Algorithm a, std::uint64_t seed) {
  RunOptions opt;
  opt.observer = [](const SlotView&) { ++audit.solutions; };
  try {
    auto s = run_simulation(cfg, a, seed, opt);
    audit.du_floor += s.du_floor_breaches;
    return s;
  } catch (const SimulationError& e) {
    // run_simulation validates every slot and throws on the first violation.
    ++audit.violations;
    audit.failures.push_back(e.what());
    return std::nullopt;
  }
}

bool every_slot_full(const RunSummary& s) {
  return std::all_of(s.metrics.begin(), s.metrics.end(), [](const SlotMetrics& m) { return m.adm_rate == 1.0; });
}

void oracle_gap() {
  const auto t0 = Clock::now();
  const SimConfig base;
  const auto r = run_check(base, 100, 0, 1);
  const double wall = since(t0);
  for (const auto& row : r.rows) {
    audit.solutions += 2;
    audit.violations += (row.tago_feasible ? 0 : 1) + (row.oracle_feasible ? 0 : 1);
    audit.du_floor += row.du_floor_breaches;
  }
  const std::size_t need_gap = 90;
  const bool cost_ok = r.full_pairs() == 0 || r.within_cost() * 10 >= r.full_pairs() * 9;
  const bool pass = r.within_gap() >= need_gap && cost_ok && wall < 60.0;
  report(1, pass,
         "gap<=1 on " + std::to_string(r.within_gap()) + "/100 (need 90); GOPS<=1.15x oracle on " +
             std::to_string(r.within_cost()) + "/" + std::to_string(r.full_pairs()) + " fully-admitted (need 90%); " +
             fmt(wall, 2) + " s (limit 60)");
}

void light_load() {
  const auto t0 = Clock::now();
  const SimConfig cfg;
  bool all_full = true;
  double tago_gops = 0.0, gnb_gops = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto t = simulate(cfg, Algorithm::Tago, seed);
    const auto g = simulate(cfg, Algorithm::StaticGnb, seed);
    if (!t || !g) {
      all_full = false;
      continue;
    }
    all_full = all_full && every_slot_full(*t) && every_slot_full(*g);
    tago_gops += t->gops.mean / 5.0;
    gnb_gops += g->gops.mean / 5.0;
  }
  const double wall = since(t0);
  const double ratio = gnb_gops > 0 ? tago_gops / gnb_gops : 0.0;
  report(2, all_full && ratio <= 0.90 && wall < 30.0,
         std::string("100% admission every slot: ") + (all_full ? "yes" : "no") + "; tago/static-gnb mean GOPS " +
             fmt(ratio) + " (need <= 0.900; " + fmt(tago_gops, 0) + " vs " + fmt(gnb_gops, 0) + "); " + fmt(wall, 2) +
             " s (limit 30)");
}

void heavy_load() {
  const auto t0 = Clock::now();
  SimConfig cfg;
  cfg.scenario.constant_users = 250;
  double adm[3] = {0, 0, 0};
  const Algorithm algs[3] = {Algorithm::Tago, Algorithm::StaticGnb, Algorithm::StaticDu};
  for (std::uint64_t seed = 1; seed <= 5; ++seed)
    for (int a = 0; a < 3; ++a)
      if (const auto s = simulate(cfg, algs[a], seed)) adm[a] += s->adm_rate.mean / 5.0;
  const double wall = since(t0);
  const double best = std::max(adm[1], adm[2]);
  const double ratio = best > 0 ? adm[0] / best : 0.0;
  report(3, ratio >= 1.20 && wall < 60.0,
         "tago " + fmt(adm[0]) + " vs static-gnb " + fmt(adm[1]) + ", static-du " + fmt(adm[2]) + "; ratio " +
             fmt(ratio) + " (need >= 1.200); " + fmt(wall, 2) + " s (limit 60)");
}

void dynamic_traces() {
  const auto t0 = Clock::now();
  bool pass = true;
  std::string detail;
  for (auto kind : {TrafficKind::Emergency, TrafficKind::EventDriven, TrafficKind::Tidal}) {
    SimConfig cfg;
    cfg.scenario.traffic = kind;
    cfg.scenario.id = to_string(kind);
    const auto t = simulate(cfg, Algorithm::Tago, 1);
    const auto g = simulate(cfg, Algorithm::StaticGnb, 1);
    const auto d = simulate(cfg, Algorithm::StaticDu, 1);
    if (!t || !g || !d) {
      pass = false;
      continue;
    }
    // Time averages over slots with at least one active user.
    double mt = 0, mg = 0, md = 0;
    std::size_t busy = 0, at_least = 0;
    for (std::size_t k = 0; k < t->metrics.size(); ++k) {
      const double a = t->metrics[k].adm_rate;
      const double best = std::max(g->metrics[k].adm_rate, d->metrics[k].adm_rate);
      if (a >= best) ++at_least;
      if (t->metrics[k].active == 0) continue;
      ++busy;
      mt += a;
      mg += g->metrics[k].adm_rate;
      md += d->metrics[k].adm_rate;
    }
    const double n = static_cast<double>(std::max<std::size_t>(busy, 1));
    mt /= n, mg /= n, md /= n;
    const double ratio = std::max(mg, md) > 0 ? mt / std::max(mg, md) : 0.0;
    const double slot_frac = static_cast<double>(at_least) / static_cast<double>(t->metrics.size());
    pass = pass && ratio >= 1.15 && slot_frac >= 0.95;
    detail += std::string(to_string(kind)) + ": ratio " + fmt(ratio) + " (tago " + fmt(mt) + ", best static " +
              fmt(std::max(mg, md)) + "), slots >= static " + fmt(100 * slot_frac, 1) + "%; ";
  }
  const double wall = since(t0);
  report(4, pass && wall < 300.0, detail + "need ratio >= 1.150 and >= 95.0%; " + fmt(wall, 2) + " s (limit 300)");
}

void runtime_budget() {
  auto median_at = [](int n) {
    SimConfig cfg;
    cfg.scenario.constant_users = n;
    cfg.scenario.geometry.duration_s = 3.0;
    std::vector<double> times;
    if (const auto s = simulate(cfg, Algorithm::Tago, 1))
      for (const auto& m : s->metrics) times.push_back(m.runtime_s);
    if (times.empty()) return -1.0;
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
  };
  const double m200 = median_at(200);
  const double m2000 = median_at(2000);
  const double scale = m200 > 0 ? m2000 / m200 : 0.0;
  report(5, m200 >= 0 && m200 < 0.100 && m2000 >= 0 && scale <= 15.0,
         "median tago time N=200 " + fmt(1e3 * m200, 3) + " ms (limit 100 ms); N=2000 " + fmt(1e3 * m2000, 3) +
             " ms, ratio " + fmt(scale, 2) + " (limit 15)");
}

void min_bandwidth_suite() {
  ref::Gen g(20241015);
  constexpr double kTol = 1e4;
  int good = 0;
  for (int i = 0; i < 1000; ++i) {
    const double r = g.uniform(1e4, 2e7);
    const double snr = g.log_uniform(1e-2, 1e3);
    const double w = min_bandwidth(r, snr, kTol, 1e12);
    if (ref::rate(w, snr) >= r && ref::rate(w - kTol, snr) < r) ++good;
  }
  report(7, good == 1000, std::to_string(good) + "/1000 samples meet the floor and are minimal on the 0.01 MHz grid");
}

void routing() {
  const CostModel cm;
  int hits[3] = {0, 0, 0};
  const double sigmas[3] = {0.5, 0.85, 1.2};
  const Branch want[3] = {Branch::Ceo, Branch::CeoThenSmo, Branch::Smo};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (int k = 0; k < 3; ++k) {
      TagoParams p;
      if (k == 1) p.tau_strict = 0.0;  // force the CEO budget to expire
      const auto inst = fixtures::at_sigma(sigmas[k], seed, cm);
      const auto r = tago(inst.users, inst.config, cm, p);
      audit.note(r.solution, inst.users, inst.config, cm);
      if (r.trace.branch == want[k]) ++hits[k];
    }
  }
  report(8, hits[0] == 10 && hits[1] == 10 && hits[2] == 10,
         "sigma 0.5 -> ceo " + std::to_string(hits[0]) + "/10; 0.85 forced timeout -> ceo-then-smo " +
             std::to_string(hits[1]) + "/10; 1.2 -> smo " + std::to_string(hits[2]) + "/10");
}

}  // namespace

int main() {
  oracle_gap();
  light_load();
  heavy_load();
  dynamic_traces();
  runtime_budget();
  report(6, audit.violations == 0,
         std::to_string(audit.violations) + " violations over " + std::to_string(audit.solutions) +
             " validated solutions from criteria 1-5");
  for (const auto& f : audit.failures) std::printf("  %s\n", f.c_str());
  min_bandwidth_suite();
  routing();
  report(9, audit.du_floor == 0,
         std::to_string(audit.du_floor) + " sub-F1 users placed on the DU split across all runs above");
  std::printf("%d criteria failed\n", failed);
  return failed;
}
