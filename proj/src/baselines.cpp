#include "flexsan/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <tuple>

#include "admission.hpp"

namespace flexsan {

using detail::AdmissionState;
using detail::Option;

SlotSolution static_solve(ArchKind arch_fixed, std::span<const UserDemand> users, const SatelliteConfig& config,
                          const CostModel& cost_model, const TagoParams& params) {
  SlotSolution s(users.size());
  const auto bases = user_bases(users, config, cost_model, params);
  AdmissionState state(config);
  for (std::size_t i : score_order(users, bases, config, params)) {
    const double w = *bases[i].w_min;
    Option opt[2];
    if (detail::user_options(users[i], bases[i], w, config, cost_model, opt, arch_fixed) == 0) continue;
    if (!state.fits(opt[0].cost, w, opt[0].ceiling)) continue;
    state.add(opt[0].cost, w, opt[0].ceiling);
    s.decisions[i] = UserDecision::admit(arch_fixed, w);
  }
  return s;
}

SlotSolution naive_greedy(std::span<const UserDemand> users, const SatelliteConfig& config,
                          const CostModel& cost_model, const TagoParams& params) {
  SlotSolution s(users.size());
  const auto bases = user_bases(users, config, cost_model, params);
  AdmissionState state(config);

  // Cheapest option that fits the current state. The state only tightens as
  // users are admitted, so a user's best cost never decreases and a lazy heap
  // reproduces the "re-scan everyone each step" rule exactly.
  const auto best = [&](std::size_t i) -> std::optional<Option> {
    Option opts[2];
    const int n = detail::user_options(users[i], bases[i], *bases[i].w_min, config, cost_model, opts);
    std::optional<Option> pick;
    for (int k = 0; k < n; ++k) {
      if (!state.fits(opts[k].cost, *bases[i].w_min, opts[k].ceiling)) continue;
      if (!pick || opts[k].cost < pick->cost) pick = opts[k];
    }
    return pick;
  };

  using Entry = std::tuple<double, UserId, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (!bases[i].satisfiable()) continue;
    if (auto o = best(i)) heap.emplace(o->cost, users[i].id, i);
  }
  while (!heap.empty()) {
    const auto [key, id, i] = heap.top();
    heap.pop();
    const auto o = best(i);
    if (!o) continue;
    if (o->cost > key) {
      heap.emplace(o->cost, id, i);
      continue;
    }
    state.add(o->cost, *bases[i].w_min, o->ceiling);
    s.decisions[i] = UserDecision::admit(o->arch, *bases[i].w_min);
  }
  return s;
}

// ---------------------------------------------------------------------------

void OracleConfig::validate() const {
  if (max_users < 0 || max_users > 5) throw InvalidArgument("oracle.max_users must lie in [0, 5]");
  if (bandwidth_levels < 1) throw InvalidArgument("oracle.bandwidth_levels must be >= 1");
  if (!(level_step_hz > 0.0)) throw InvalidArgument("oracle.level_step_hz must be > 0");
  if (candidate_count(static_cast<std::size_t>(max_users)) > max_candidates)
    throw InvalidArgument("oracle: max_users x bandwidth_levels exceeds the candidate budget");
}

long long OracleConfig::candidate_count(std::size_t n_users) const {
  long long total = 1;
  for (std::size_t i = 0; i < n_users; ++i) total *= 1 + 2LL * bandwidth_levels;
  return total;
}

OracleResult exact_oracle(std::span<const UserDemand> users, const SatelliteConfig& config,
                          const CostModel& cost_model, const OracleConfig& oracle_config, double wmin_tolerance_hz) {
  oracle_config.validate();
  const std::size_t n = users.size();
  if (n > static_cast<std::size_t>(oracle_config.max_users))
    throw InvalidArgument("exact_oracle: " + std::to_string(n) + " users exceeds the limit of " +
                          std::to_string(oracle_config.max_users));

  const int levels = oracle_config.bandwidth_levels;
  const int radix = 1 + 2 * levels;
  std::vector<std::optional<double>> w_min(n);
  for (std::size_t i = 0; i < n; ++i)
    w_min[i] = try_min_bandwidth(users[i].r_min, users[i].snr_linear, wmin_tolerance_hz, config.b_s);

  // Code 0 rejects; 1..L is gNB at level code-1; L+1..2L is DU at level code-L-1.
  const auto decode = [&](std::size_t i, int code) {
    if (code == 0 || !w_min[i]) return UserDecision::reject();
    const bool du = code > levels;
    const int level = du ? code - levels - 1 : code - 1;
    return UserDecision::admit(du ? ArchKind::OnboardGnbDu : ArchKind::OnboardGnb,
                               *w_min[i] + level * oracle_config.level_step_hz);
  };

  OracleResult best;
  best.solution = SlotSolution(n);
  std::vector<int> best_code(n, 0);
  std::vector<int> code(n, 0);
  SlotSolution candidate(n);
  bool have_best = false;
  for (;;) {
    bool skip = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (code[i] != 0 && !w_min[i]) skip = true;
      candidate.decisions[i] = decode(i, code[i]);
    }
    if (!skip) {
      ++best.evaluated;
      const auto report = check_feasibility(candidate, users, config, cost_model);
      if (report.feasible()) {
        const std::size_t admitted = candidate.admitted_count();
        const double gops = report.total_gops;
        const double tol = 1e-9 * std::max(1.0, std::abs(best.total_gops));
        bool better = !have_best || admitted > best.admitted;
        if (have_best && admitted == best.admitted) {
          if (gops < best.total_gops - tol) {
            better = true;
          } else if (std::abs(gops - best.total_gops) <= tol) {
            better = code < best_code;
          }
        }
        if (better) {
          have_best = true;
          best.admitted = admitted;
          best.total_gops = gops;
          best.solution = candidate;
          best_code = code;
        }
      }
    }
    // Mixed-radix increment, last user fastest.
    bool wrapped = true;
    for (std::size_t k = n; k-- > 0;) {
      if (++code[k] < radix) {
        wrapped = false;
        break;
      }
      code[k] = 0;
    }
    if (wrapped) break;
  }
  return best;
}

}  // namespace flexsan
