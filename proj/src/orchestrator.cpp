#include "flexsan/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "admission.hpp"

namespace flexsan {

using detail::AdmissionState;
using detail::fixed_latency;
using detail::load_ceiling;
using detail::Option;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kHzPerMhz = 1e6;

double snap_up(double value, double grid) { return std::ceil(value / grid - 1e-9) * grid; }

bool by_id(const UserDemand& a, const UserDemand& b) { return a.id < b.id; }

}  // namespace

void TagoParams::validate() const {
  if (!(sigma_light > 0.0 && sigma_heavy > 0.0 && sigma_light < sigma_heavy))
    throw InvalidArgument("tago: require 0 < sigma_light < sigma_heavy");
  if (!(tau_strict >= 0.0)) throw InvalidArgument("tago.tau_strict must be >= 0");
  if (!(tau_margin > 0.0)) throw InvalidArgument("tago.tau_margin must be > 0");
  if (!(eta_hz > 0.0)) throw InvalidArgument("tago.eta_hz must be > 0");
  if (!(omega_eff >= 0.0 && omega_flex >= 0.0) || std::abs(omega_eff + omega_flex - 1.0) > 1e-9)
    throw InvalidArgument("tago: omega_eff + omega_flex must equal 1");
  if (alpha_hz_per_gop && !(*alpha_hz_per_gop > 0.0)) throw InvalidArgument("tago.alpha_hz_per_gop must be > 0");
  if (!(t_bar > 0.0)) throw InvalidArgument("tago.t_bar must be > 0");
  if (k_max_bandwidth < 0 || k_max_refine < 0) throw InvalidArgument("tago: iteration limits must be >= 0");
  if (!(wmin_tolerance_hz > 0.0)) throw InvalidArgument("tago.wmin_tolerance_hz must be > 0");
}

const char* to_string(Branch branch) noexcept {
  switch (branch) {
    case Branch::Ceo:
      return "CEO";
    case Branch::CeoThenSmo:
      return "CEO-then-SMO";
    case Branch::Smo:
      return "SMO";
  }
  return "?";
}

UserBasis user_basis(const UserDemand& user, const SatelliteConfig& config, const CostModel& cost_model,
                     const TagoParams& params) {
  UserBasis b;
  b.spectral_efficiency = std::log2(1.0 + user.snr_linear);
  b.propagation_s = user.distance_m / config.light_speed;
  b.w_min = try_min_bandwidth(user.r_min, user.snr_linear, params.wmin_tolerance_hz, config.b_s);
  if (b.w_min) {
    b.cost_gnb_min = per_user_cost(ArchKind::OnboardGnb, *b.w_min, cost_model);
    b.cost_du_min = per_user_cost(ArchKind::OnboardGnbDu, *b.w_min, cost_model);
  }
  return b;
}

std::vector<UserBasis> user_bases(std::span<const UserDemand> users, const SatelliteConfig& config,
                                  const CostModel& cost_model, const TagoParams& params) {
  std::vector<UserBasis> out;
  out.reserve(users.size());
  for (const auto& u : users) out.push_back(user_basis(u, config, cost_model, params));
  return out;
}

// ---------------------------------------------------------------------------

double congestion_score(std::span<const UserDemand> users, const SatelliteConfig& config,
                        const CostModel& cost_model, const TagoParams& params) {
  double compute = 0.0;
  double bandwidth = 0.0;
  for (const auto& u : users) {
    const auto w = try_min_bandwidth(u.r_min, u.snr_linear, params.wmin_tolerance_hz, config.b_s);
    const double w_eff = w.value_or(config.b_s);
    bandwidth += w_eff;
    compute += per_user_cost(ArchKind::OnboardGnbDu, w_eff, cost_model);
  }
  return std::max(compute / config.c_cap, bandwidth / config.b_s);
}

TagoResult tago(std::span<const UserDemand> users, const SatelliteConfig& config, const CostModel& cost_model,
                const TagoParams& params) {
  const auto start = Clock::now();
  TagoResult result;
  auto& trace = result.trace;
  trace.sigma = congestion_score(users, config, cost_model, params);

  auto run_smo = [&](Branch branch) {
    SmoResult s = smo(users, config, cost_model, params);
    result.solution = std::move(s.solution);
    trace.branch = branch;
    trace.smo_refine_passes = s.refine_passes;
    trace.smo_swaps = s.swaps;
  };
  auto run_ceo = [&](std::optional<std::chrono::duration<double>> budget) {
    CeoResult c = ceo(users, config, cost_model, params, budget);
    trace.ceo_ran = true;
    trace.ceo_feasible = c.feasible;
    trace.ceo_timed_out = c.timed_out;
    trace.ceo_iterations = c.iterations;
    const bool full = c.feasible && c.solution.admitted_count() == users.size();
    if (full) {
      result.solution = std::move(c.solution);
      trace.branch = Branch::Ceo;
    }
    return full;
  };

  if (trace.sigma < params.sigma_light) {
    // CEO can still fail under light load (a user's own delay budget); fall back.
    if (!run_ceo(std::nullopt)) run_smo(Branch::CeoThenSmo);
  } else if (trace.sigma <= params.sigma_heavy) {
    if (!run_ceo(std::chrono::duration<double>(params.tau_strict))) run_smo(Branch::CeoThenSmo);
  } else {
    run_smo(Branch::Smo);
  }
  trace.wall_s = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

// ---------------------------------------------------------------------------

double delay_margin_at(const UserDemand& user, ArchKind arch, double bandwidth_hz, double rho,
                       const SatelliteConfig& config) {
  if (!(rho >= 0.0 && rho < 1.0))
    throw QueueUnstable("delay_margin: utilisation estimate " + std::to_string(rho) + " outside [0, 1)");
  const double t_fixed =
      transmission_delay(user.distance_m, bandwidth_hz, user.snr_linear, config.s_p, config.light_speed) +
      detail::f1_delay(arch, config);
  const double t_queue = config.job_gop / (config.mu() * (1.0 - rho));
  return user.t_max - t_fixed - t_queue;
}

double delay_margin(const UserDemand& user, ArchKind arch, double rho, const SatelliteConfig& config,
                    const TagoParams& params) {
  const double w_min = min_bandwidth(user.r_min, user.snr_linear, params.wmin_tolerance_hz, config.b_s);
  return delay_margin_at(user, arch, w_min, rho, config);
}

ArchKind select_architecture(double margin_du, double cost_du, double cost_gnb, const TagoParams& params) {
  return (margin_du > params.tau_margin && cost_du < cost_gnb) ? ArchKind::OnboardGnbDu : ArchKind::OnboardGnb;
}

double cost_gradient(ArchKind arch, double /*bandwidth_hz*/, const CostModel& cost_model) {
  // Affine per function, so the derivative is the slope sum.
  const double per_mhz = arch == ArchKind::OnboardGnb ? cost_model.slope_all() : cost_model.slope_sat();
  return per_mhz / kHzPerMhz;
}

namespace {

struct CapStatus {
  double lambda = 0.0;
  double bandwidth = 0.0;
  bool ok = false;
};

CapStatus cap_status(const SlotSolution& s, const SatelliteConfig& config, const CostModel& cost_model) {
  CapStatus st;
  st.lambda = aggregate_load(s, cost_model);
  st.bandwidth = s.total_bandwidth();
  st.ok = st.bandwidth <= config.b_s && st.lambda <= config.c_cap && st.lambda < config.mu();
  return st;
}

/// Lowest bandwidth that keeps user i within its rate floor and delay budget at
/// the given queue delay, snapped up to the tolerance grid.
double bandwidth_floor(const UserDemand& u, const UserBasis& b, ArchKind arch, double current_w, double t_queue,
                       const SatelliteConfig& config, const TagoParams& params) {
  const double w_min = b.w_min.value_or(current_w);
  const double budget = u.t_max - b.propagation_s - detail::f1_delay(arch, config) - t_queue;
  if (!(budget > 0.0)) return current_w;
  const double w_delay = snap_up(config.s_p / (b.spectral_efficiency * budget), params.wmin_tolerance_hz);
  return std::min(current_w, std::max(w_min, w_delay));
}

/// Shared walk behind gradient compression and donor rebalancing.
template <class Eligible>
int compress_walk(SlotSolution& s, std::span<const UserDemand> users, std::span<const UserBasis> bases,
                  const SatelliteConfig& config, const CostModel& cost_model, const TagoParams& params,
                  Eligible eligible) {
  std::vector<std::size_t> order;
  double max_grad = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& d = s.decisions[i];
    if (!d.admitted || !eligible(i)) continue;
    order.push_back(i);
    max_grad = std::max(max_grad, cost_gradient(*d.arch, d.bandwidth_hz, cost_model));
  }
  if (order.empty() || max_grad <= 0.0) return 0;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ga = cost_gradient(*s.decisions[a].arch, s.decisions[a].bandwidth_hz, cost_model);
    const double gb = cost_gradient(*s.decisions[b].arch, s.decisions[b].bandwidth_hz, cost_model);
    if (ga != gb) return ga > gb;
    return users[a].id < users[b].id;
  });

  int steps = 0;
  CapStatus st = cap_status(s, config, cost_model);
  bool progressed = true;
  while (!st.ok && progressed) {
    progressed = false;
    for (std::size_t i : order) {
      if (st.ok) break;
      auto& d = s.decisions[i];
      const double t_queue = st.lambda < config.mu() ? config.job_gop / (config.mu() - st.lambda) : 0.0;
      const double floor = bandwidth_floor(users[i], bases[i], *d.arch, d.bandwidth_hz, t_queue, config, params);
      if (d.bandwidth_hz <= floor) continue;
      const double step = params.eta_hz * cost_gradient(*d.arch, d.bandwidth_hz, cost_model) / max_grad;
      double next = snap_up(d.bandwidth_hz - step, params.wmin_tolerance_hz);
      if (next >= d.bandwidth_hz) next = d.bandwidth_hz - params.wmin_tolerance_hz;
      next = std::max(next, floor);
      const double old_cost = per_user_cost(*d.arch, d.bandwidth_hz, cost_model);
      st.bandwidth += next - d.bandwidth_hz;
      d.bandwidth_hz = next;
      st.lambda += per_user_cost(*d.arch, next, cost_model) - old_cost;
      st.ok = st.bandwidth <= config.b_s && st.lambda <= config.c_cap && st.lambda < config.mu();
      progressed = true;
      ++steps;
    }
  }
  return steps;
}

}  // namespace

CompressionResult gradient_compress(const SlotSolution& solution, std::span<const UserDemand> users,
                                    const SatelliteConfig& config, const CostModel& cost_model,
                                    const TagoParams& params) {
  if (solution.size() != users.size()) throw InvalidArgument("gradient_compress: shape mismatch");
  CompressionResult r{solution, false, 0};
  if (cap_status(solution, config, cost_model).ok) {
    r.within_caps = true;
    return r;
  }
  const auto bases = user_bases(users, config, cost_model, params);
  r.steps = compress_walk(r.solution, users, bases, config, cost_model, params, [](std::size_t) { return true; });
  r.within_caps = cap_status(r.solution, config, cost_model).ok;
  return r;
}

// ---------------------------------------------------------------------------

CeoResult ceo(std::span<const UserDemand> users, const SatelliteConfig& config, const CostModel& cost_model,
              const TagoParams& params, std::optional<std::chrono::duration<double>> time_budget) {
  const auto start = Clock::now();
  std::optional<Clock::time_point> deadline;
  if (time_budget) deadline = start + std::chrono::duration_cast<Clock::duration>(*time_budget);
  const auto expired = [&] { return deadline && Clock::now() >= *deadline; };

  const std::size_t n = users.size();
  CeoResult r;
  r.solution = SlotSolution(n);
  if (n == 0) {
    r.feasible = true;
    return r;
  }

  const auto bases = user_bases(users, config, cost_model, params);
  double du_load = 0.0;
  for (const auto& b : bases) {
    if (!b.satisfiable()) return r;  // someone cannot reach its rate floor at all
    du_load += b.cost_du_min;
  }
  const double rho = du_load / config.c_cap;
  if (rho >= 1.0) return r;

  // Phase 1: architecture by DU delay margin at the optimistic utilisation.
  for (std::size_t i = 0; i < n; ++i) {
    const auto& b = bases[i];
    const double margin = delay_margin_at(users[i], ArchKind::OnboardGnbDu, *b.w_min, rho, config);
    const ArchKind arch = select_architecture(margin, b.cost_du_min, b.cost_gnb_min, params);
    r.solution.decisions[i] = UserDecision::admit(arch, *b.w_min);
  }
  if (expired()) {
    r.timed_out = true;
    return r;
  }

  // Phase 2: everyone at the floor; compress if that overshoots a cap.
  auto& s = r.solution;
  const auto all = [](std::size_t) { return true; };
  if (!cap_status(s, config, cost_model).ok) {
    compress_walk(s, users, bases, config, cost_model, params, all);
    if (!cap_status(s, config, cost_model).ok) return r;
  }

  // Iterative refinement of bandwidth against the coupled delay constraints.
  std::vector<double> latency(n);
  for (int iter = 0; iter < params.k_max_bandwidth; ++iter) {
    if (expired()) {
      r.timed_out = true;
      return r;
    }
    CapStatus st = cap_status(s, config, cost_model);
    if (st.lambda >= config.mu()) break;
    const double t_queue = config.job_gop / (config.mu() - st.lambda);

    std::vector<std::size_t> unmet;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& d = s.decisions[i];
      latency[i] = fixed_latency(bases[i], *d.arch, d.bandwidth_hz, config) + t_queue;
      if (latency[i] > users[i].t_max) unmet.push_back(i);
    }
    if (unmet.empty()) break;
    ++r.iterations;

    for (std::size_t i : unmet) {
      auto& d = s.decisions[i];
      const auto& b = bases[i];
      double budget = users[i].t_max - b.propagation_s - detail::f1_delay(*d.arch, config) - t_queue;
      if (!(budget > 0.0) && *d.arch == ArchKind::OnboardGnbDu) {
        d.arch = ArchKind::OnboardGnb;  // F1 alone breaks the budget; bandwidth cannot help
        budget = users[i].t_max - b.propagation_s - t_queue;
      }
      if (!(budget > 0.0)) continue;
      const double need = config.s_p / (b.spectral_efficiency * budget);
      if (need > d.bandwidth_hz) {
        const double steps = std::ceil((need - d.bandwidth_hz) / params.eta_hz - 1e-9);
        d.bandwidth_hz += std::max(1.0, steps) * params.eta_hz;
      }
    }

    if (!cap_status(s, config, cost_model).ok) {
      // Rebalance from users with comfortable slack, then general compression.
      std::vector<bool> donor(n, false);
      for (std::size_t i = 0; i < n; ++i) donor[i] = users[i].t_max - latency[i] > 2.0 * params.tau_margin;
      compress_walk(s, users, bases, config, cost_model, params, [&](std::size_t i) { return donor[i]; });
      if (!cap_status(s, config, cost_model).ok) compress_walk(s, users, bases, config, cost_model, params, all);
    }
  }

  const auto report = check_feasibility(s, users, config, cost_model);
  r.feasible = report.feasible() && s.admitted_count() == n;
  return r;
}

// ---------------------------------------------------------------------------

PopulationStats population_stats(std::span<const UserBasis> bases, double alpha) {
  PopulationStats stats;
  double sum = 0.0;
  for (const auto& b : bases) {
    if (!b.satisfiable()) continue;
    sum += *b.w_min + alpha * b.cost_du_min;
    ++stats.satisfiable;
  }
  stats.mean_blended_demand = stats.satisfiable ? sum / static_cast<double>(stats.satisfiable) : 0.0;
  return stats;
}

double composite_score(double t_max, double w_min, double c_min, const PopulationStats& stats, double alpha,
                       const TagoParams& params) {
  const double blended = w_min + alpha * c_min;
  const double efficiency = blended > 0.0 ? stats.mean_blended_demand / blended : 0.0;
  return params.omega_eff * efficiency + params.omega_flex * t_max / params.t_bar;
}

double composite_score(const UserDemand& user, const PopulationStats& stats, const SatelliteConfig& config,
                       const CostModel& cost_model, const TagoParams& params) {
  const UserBasis b = user_basis(user, config, cost_model, params);
  if (!b.satisfiable())
    throw ThroughputUnsatisfiable("composite_score: user " + std::to_string(user.id) + " has no rate floor");
  return composite_score(user.t_max, *b.w_min, b.cost_du_min, stats, params.alpha(config), params);
}

std::vector<std::size_t> score_order(std::span<const UserDemand> users, std::span<const UserBasis> bases,
                                     const SatelliteConfig& config, const TagoParams& params) {
  const double alpha = params.alpha(config);
  const PopulationStats stats = population_stats(bases, alpha);
  std::vector<std::size_t> order;
  std::vector<double> score(users.size(), 0.0);
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (!bases[i].satisfiable()) continue;
    score[i] = composite_score(users[i].t_max, *bases[i].w_min, bases[i].cost_du_min, stats, alpha, params);
    order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return by_id(users[a], users[b]);
  });
  return order;
}

SmoResult smo(std::span<const UserDemand> users, const SatelliteConfig& config, const CostModel& cost_model,
              const TagoParams& params) {
  SmoResult r;
  r.solution = SlotSolution(users.size());
  const auto bases = user_bases(users, config, cost_model, params);
  r.phase1_order = score_order(users, bases, config, params);

  // Phase 1: greedy admission at the rate floor on the cheapest feasible split.
  AdmissionState state(config);
  std::vector<std::size_t> rejected;
  for (std::size_t i : r.phase1_order) {
    Option opts[2];
    const int n_opts = detail::user_options(users[i], bases[i], *bases[i].w_min, config, cost_model, opts,
                                              std::nullopt, params.tau_margin);
    bool admitted = false;
    for (int k = 0; k < n_opts && !admitted; ++k) {
      if (state.fits(opts[k].cost, *bases[i].w_min, opts[k].ceiling)) {
        state.add(opts[k].cost, *bases[i].w_min, opts[k].ceiling);
        r.solution.decisions[i] = UserDecision::admit(opts[k].arch, *bases[i].w_min);
        admitted = true;
      }
    }
    if (!admitted) rejected.push_back(i);
  }

  // Phase 2: architecture swaps to make room for rejected users.
  if (!rejected.empty() && params.k_max_refine > 0) {
    RefineResult refined = smo_refine(r.solution, rejected, users, config, cost_model, params);
    r.solution = std::move(refined.solution);
    r.refine_passes = refined.passes;
    r.swaps = refined.swaps;
  }
  return r;
}

RefineResult smo_refine(const SlotSolution& start, std::span<const std::size_t> rejected_priority,
                        std::span<const UserDemand> users, const SatelliteConfig& config,
                        const CostModel& cost_model, const TagoParams& params) {
  if (start.size() != users.size()) throw InvalidArgument("smo_refine: shape mismatch");
  RefineResult r{start, 0, 0};
  auto& s = r.solution;
  const auto bases = user_bases(users, config, cost_model, params);
  const double guard = detail::load_guard(config);

  AdmissionState state(config);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& d = s.decisions[i];
    if (!d.admitted) continue;
    const double fixed = fixed_latency(bases[i], *d.arch, d.bandwidth_hz, config);
    const auto ceiling = load_ceiling(users[i].t_max, fixed, config);
    state.add(per_user_cost(*d.arch, d.bandwidth_hz, cost_model), d.bandwidth_hz,
              ceiling.value_or(-std::numeric_limits<double>::infinity()));
  }

  struct Switch {
    std::size_t index;
    double freed;
    double du_ceiling;
  };
  std::vector<Switch> candidates;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& d = s.decisions[i];
    if (!d.admitted || *d.arch != ArchKind::OnboardGnb) continue;
    const double c0 = per_user_cost(ArchKind::OnboardGnb, d.bandwidth_hz, cost_model);
    const double c1 = per_user_cost(ArchKind::OnboardGnbDu, d.bandwidth_hz, cost_model);
    const double fixed = fixed_latency(bases[i], ArchKind::OnboardGnbDu, d.bandwidth_hz, config);
    if (!(users[i].t_max - fixed > params.tau_margin)) continue;
    const auto ceiling = load_ceiling(users[i].t_max, fixed, config);
    if (c1 < c0 && ceiling) candidates.push_back({i, c0 - c1, *ceiling});
  }
  std::sort(candidates.begin(), candidates.end(), [&](const Switch& a, const Switch& b) {
    if (a.freed != b.freed) return a.freed > b.freed;
    return users[a.index].id < users[b.index].id;
  });
  std::vector<bool> switched(candidates.size(), false);
  double freeable = 0.0;
  for (const auto& c : candidates) freeable += c.freed;

  std::vector<std::size_t> pending(rejected_priority.begin(), rejected_priority.end());
  for (int pass = 0; pass < params.k_max_refine && !pending.empty(); ++pass) {
    ++r.passes;
    bool changed = false;
    std::vector<std::size_t> still;
    for (std::size_t ri : pending) {
      const auto& b = bases[ri];
      if (!b.satisfiable() || s.decisions[ri].admitted) continue;
      const double w = *b.w_min;
      bool admitted = false;
      if (state.bandwidth() + w <= config.b_s) {
        Option opts[2];
        const int n_opts = detail::user_options(users[ri], b, w, config, cost_model, opts, std::nullopt,
                                                  params.tau_margin);
        for (int k = 0; k < n_opts && !admitted; ++k) {
          const Option& o = opts[k];
          if (state.fits(o.cost, w, o.ceiling)) {
            state.add(o.cost, w, o.ceiling);
            s.decisions[ri] = UserDecision::admit(o.arch, w);
            admitted = true;
            break;
          }
          double cap = std::min({config.c_cap, state.ceiling() - guard, o.ceiling - guard});
          const double need = state.lambda() + o.cost - cap;
          if (need > freeable) continue;
          std::vector<std::size_t> chosen;
          double freed = 0.0;
          for (std::size_t c = 0; c < candidates.size(); ++c) {
            if (switched[c]) continue;
            const double load_after = state.lambda() - freed - candidates[c].freed + o.cost;
            if (candidates[c].du_ceiling - guard < load_after) continue;
            chosen.push_back(c);
            freed += candidates[c].freed;
            cap = std::min(cap, candidates[c].du_ceiling - guard);
            if (state.lambda() - freed + o.cost <= cap) break;
          }
          if (state.lambda() - freed + o.cost > cap) continue;
          for (std::size_t c : chosen) {
            switched[c] = true;
            freeable -= candidates[c].freed;
            s.decisions[candidates[c].index].arch = ArchKind::OnboardGnbDu;
            state.adjust(-candidates[c].freed, candidates[c].du_ceiling);
            ++r.swaps;
          }
          state.add(o.cost, w, o.ceiling);
          s.decisions[ri] = UserDecision::admit(o.arch, w);
          admitted = true;
        }
      }
      if (admitted) {
        changed = true;
      } else {
        still.push_back(ri);
      }
    }
    pending = std::move(still);
    if (!changed) break;
  }
  return r;
}

}  // namespace flexsan
