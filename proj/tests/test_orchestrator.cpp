#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "flexsan/orchestrator.hpp"
#include "support/instances.hpp"
#include "support/reference.hpp"

using namespace flexsan;

namespace {

const CostModel kTwoTier = CostModel::two_tier(400, 50, 320, 40);

UserDemand make_user(UserId id, double r_min, double snr, double t_max, double distance_m = 600e3) {
  UserDemand u;
  u.id = id;
  u.r_min = r_min;
  u.snr_linear = snr;
  u.t_max = t_max;
  u.distance_m = distance_m;
  return u;
}

bool feasible(const SlotSolution& s, const std::vector<UserDemand>& users, const SatelliteConfig& c,
              const CostModel& cm) {
  return check_feasibility(s, users, c, cm).feasible();
}

}  // namespace

TEST_CASE("congestion score") {
  const SatelliteConfig cfg;
  const TagoParams p;
  // C_1 at 1 MHz = 2000 GOPS, so eight 1 MHz users give 16000 GOPS and 8 MHz.
  const CostModel heavy = CostModel::two_tier(2400, 100, 1960, 40);
  std::vector<UserDemand> eight;
  for (UserId i = 0; i < 8; ++i) eight.push_back(make_user(i, 1e6, 1.0, 0.1));
  CHECK(congestion_score(eight, cfg, heavy, p) == doctest::Approx(0.5));

  std::vector<UserDemand> big{make_user(0, 20e6, 1.0, 0.1)};
  CHECK(per_user_cost(ArchKind::OnboardGnbDu, 20e6, kTwoTier) == doctest::Approx(6440));
  CHECK(congestion_score(big, cfg, kTwoTier, p) == doctest::Approx(1.0));

  CHECK(congestion_score({}, cfg, kTwoTier, p) == 0.0);

  std::vector<UserDemand> hopeless{make_user(0, 100e6, 1.0, 0.1)};
  CHECK(congestion_score(hopeless, cfg, kTwoTier, p) >= 1.0);
}

TEST_CASE("delay margin") {
  const SatelliteConfig cfg;
  const TagoParams p;
  const auto u = make_user(0, 1e6, 1.0, 0.2, 600e3);
  const double expect = 0.2 - (600e3 / 299792458.0 + 8.192e-3 + 0.09) - 1.0 / (32000 * 0.5);
  CHECK(delay_margin(u, ArchKind::OnboardGnbDu, 0.5, cfg, p) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(delay_margin(u, ArchKind::OnboardGnbDu, 0.5, cfg, p) == doctest::Approx(0.09974).epsilon(1e-4));

  // t_max equal to the fixed part: only the empty-queue delay remains.
  const auto tight = make_user(1, 1e6, 1.0, 8192.0 / 8.192e6, 0.0);
  CHECK(delay_margin_at(tight, ArchKind::OnboardGnb, 8.192e6, 0.0, cfg) == doctest::Approx(-1.0 / 32000));

  const auto strict = make_user(2, 1e6, 1.0, 0.05);
  CHECK(delay_margin(strict, ArchKind::OnboardGnbDu, 0.1, cfg, p) < 0.0);
  CHECK_THROWS_AS(delay_margin(u, ArchKind::OnboardGnb, 1.0, cfg, p), QueueUnstable);
  CHECK_THROWS_AS(delay_margin(u, ArchKind::OnboardGnb, -0.1, cfg, p), QueueUnstable);
}

TEST_CASE("architecture rule") {
  const TagoParams p;
  CHECK(select_architecture(0.09974, 264, 330, p) == ArchKind::OnboardGnbDu);
  CHECK(select_architecture(0.004, 264, 330, p) == ArchKind::OnboardGnb);
  CHECK(select_architecture(p.tau_margin, 264, 330, p) == ArchKind::OnboardGnb);
  CHECK(select_architecture(0.09974, 330, 330, p) == ArchKind::OnboardGnb);
}

TEST_CASE("cost gradient") {
  CHECK(cost_gradient(ArchKind::OnboardGnb, 1e6, kTwoTier) == doctest::Approx(4.0e-4));
  CHECK(cost_gradient(ArchKind::OnboardGnbDu, 3e6, kTwoTier) == doctest::Approx(3.2e-4));

  // Central finite difference with step eta as the oracle.
  const TagoParams p;
  for (const CostModel& cm : {kTwoTier, CostModel()}) {
    for (ArchKind a : {ArchKind::OnboardGnb, ArchKind::OnboardGnbDu}) {
      for (double w : {0.2e6, 1e6, 7.5e6}) {
        const double fd = (per_user_cost(a, w + p.eta_hz, cm) - per_user_cost(a, w - p.eta_hz, cm)) / (2 * p.eta_hz);
        CHECK(cost_gradient(a, w, cm) == doctest::Approx(fd).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("gradient compression") {
  const TagoParams p;
  SatelliteConfig cfg;

  SUBCASE("single user at its floor is left alone") {
    std::vector<UserDemand> users{make_user(0, 1e6, 1.0, 0.2)};
    SlotSolution s(1);
    s.decisions[0] = UserDecision::admit(ArchKind::OnboardGnb, 1e6);
    cfg.c_cap = 400;  // below the user's 450 GOPS
    const auto r = gradient_compress(s, users, cfg, kTwoTier, p);
    CHECK_FALSE(r.within_caps);
    CHECK(r.solution.decisions[0].bandwidth_hz == 1e6);
  }

  SUBCASE("gNB users are compressed first") {
    std::vector<UserDemand> users{make_user(0, 1e6, 1.0, 0.2), make_user(1, 1e6, 1.0, 0.2)};
    SlotSolution s(2);
    s.decisions[0] = UserDecision::admit(ArchKind::OnboardGnb, 2e6);
    s.decisions[1] = UserDecision::admit(ArchKind::OnboardGnbDu, 2e6);
    cfg.c_cap = aggregate_load(s, kTwoTier) - 5.0;
    const auto r = gradient_compress(s, users, cfg, kTwoTier, p);
    CHECK(r.within_caps);
    CHECK(r.solution.decisions[0].bandwidth_hz < 2e6);
    CHECK(r.solution.decisions[1].bandwidth_hz == 2e6);
  }

  SUBCASE("within caps is the identity") {
    std::vector<UserDemand> users{make_user(0, 1e6, 1.0, 0.2)};
    SlotSolution s(1);
    s.decisions[0] = UserDecision::admit(ArchKind::OnboardGnb, 3e6);
    const auto r = gradient_compress(s, users, cfg, kTwoTier, p);
    CHECK(r.within_caps);
    CHECK(r.steps == 0);
    CHECK(r.solution.decisions[0].bandwidth_hz == 3e6);
  }
}

TEST_CASE("compression never drops below the floor nor raises cost") {
  const TagoParams p;
  ref::Gen g(77);
  for (int trial = 0; trial < 300; ++trial) {
    SatelliteConfig cfg;
    std::vector<UserDemand> users;
    const int n = g.integer(1, 12);
    SlotSolution s(n);
    for (int i = 0; i < n; ++i) {
      users.push_back(g.user(i));
      const double w = min_bandwidth(users[i].r_min, users[i].snr_linear);
      s.decisions[i] = UserDecision::admit(g.coin() ? ArchKind::OnboardGnb : ArchKind::OnboardGnbDu,
                                           w + 1e4 * g.integer(0, 200));
    }
    cfg.c_cap = aggregate_load(s, kTwoTier) * g.uniform(0.7, 1.05);
    cfg.b_s = std::max(s.total_bandwidth() * g.uniform(0.7, 1.05), 1e6);
    const auto r = gradient_compress(s, users, cfg, kTwoTier, p);
    CHECK(aggregate_load(r.solution, kTwoTier) <= aggregate_load(s, kTwoTier) + 1e-9);
    for (int i = 0; i < n; ++i) {
      const double w_min = min_bandwidth(users[i].r_min, users[i].snr_linear, 1e4, 1e9);
      CHECK(r.solution.decisions[i].bandwidth_hz >= w_min);
      CHECK(r.solution.decisions[i].bandwidth_hz <= s.decisions[i].bandwidth_hz);
      CHECK(r.solution.decisions[i].arch == s.decisions[i].arch);
    }
  }
}

TEST_CASE("CEO examples") {
  const SatelliteConfig cfg;
  const TagoParams p;

  SUBCASE("two relaxed users go to DU and beat every static assignment") {
    std::vector<UserDemand> users{make_user(0, 1e6, 3.0, 0.2), make_user(1, 1.5e6, 7.0, 0.2)};
    const auto r = ceo(users, cfg, kTwoTier, p);
    REQUIRE(r.feasible);
    CHECK(r.solution.admitted_count() == 2);
    CHECK(*r.solution.decisions[0].arch == ArchKind::OnboardGnbDu);
    CHECK(*r.solution.decisions[1].arch == ArchKind::OnboardGnbDu);
    const double ceo_cost = aggregate_load(r.solution, kTwoTier);
    // Oracle: every architecture pair at the rate floor.
    for (ArchKind a : {ArchKind::OnboardGnb, ArchKind::OnboardGnbDu}) {
      for (ArchKind b : {ArchKind::OnboardGnb, ArchKind::OnboardGnbDu}) {
        SlotSolution s(2);
        s.decisions[0] = UserDecision::admit(a, min_bandwidth(1e6, 3.0));
        s.decisions[1] = UserDecision::admit(b, min_bandwidth(1.5e6, 7.0));
        if (feasible(s, users, cfg, kTwoTier)) CHECK(ceo_cost <= aggregate_load(s, kTwoTier) + 1e-9);
      }
    }
    SlotSolution all_gnb(2);
    all_gnb.decisions[0] = UserDecision::admit(ArchKind::OnboardGnb, min_bandwidth(1e6, 3.0));
    all_gnb.decisions[1] = UserDecision::admit(ArchKind::OnboardGnb, min_bandwidth(1.5e6, 7.0));
    REQUIRE(feasible(all_gnb, users, cfg, kTwoTier));
    CHECK(ceo_cost < aggregate_load(all_gnb, kTwoTier));
  }

  SUBCASE("strict user stays on the full gNB") {
    std::vector<UserDemand> users{make_user(0, 1e6, 3.0, 0.05)};
    const auto r = ceo(users, cfg, kTwoTier, p);
    REQUIRE(r.feasible);
    CHECK(*r.solution.decisions[0].arch == ArchKind::OnboardGnb);
  }

  SUBCASE("bandwidth pigeonhole") {
    std::vector<UserDemand> users;
    for (UserId i = 0; i < 3; ++i) users.push_back(make_user(i, 8e6, 1.0, 0.2));
    CHECK_FALSE(ceo(users, cfg, kTwoTier, p).feasible);
  }

  SUBCASE("zero budget times out") {
    std::vector<UserDemand> users{make_user(0, 1e6, 3.0, 0.2)};
    const auto r = ceo(users, cfg, kTwoTier, p, std::chrono::duration<double>(0.0));
    CHECK(r.timed_out);
    CHECK_FALSE(r.feasible);
  }
}

TEST_CASE("CEO contract and architecture soundness on random instances") {
  const TagoParams p;
  const CostModel cm;
  int feasible_runs = 0;
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    const double sigma = 0.2 + 0.8 * static_cast<double>(seed % 10) / 10.0;
    auto inst = fixtures::at_sigma(sigma, seed, cm, 10 + static_cast<int>(seed % 30));
    const auto r = ceo(inst.users, inst.config, cm, p);
    if (r.feasible) {
      ++feasible_runs;
      CHECK(r.solution.admitted_count() == inst.users.size());
      CHECK(check_feasibility(r.solution, inst.users, inst.config, cm).feasible());
    }
    // Every DU assignment had a Phase-1 margin above tau_margin.
    double rho = 0.0;
    for (const auto& u : inst.users) rho += per_user_cost(ArchKind::OnboardGnbDu, min_bandwidth(u.r_min, u.snr_linear, 1e4, inst.config.b_s), cm);
    rho /= inst.config.c_cap;
    if (rho >= 1.0) continue;
    for (std::size_t i = 0; i < inst.users.size(); ++i) {
      const auto& d = r.solution.decisions[i];
      if (d.admitted && *d.arch == ArchKind::OnboardGnbDu)
        CHECK(delay_margin(inst.users[i], ArchKind::OnboardGnbDu, rho, inst.config, p) > p.tau_margin);
    }
  }
  CHECK(feasible_runs > 30);
}

TEST_CASE("composite score") {
  const TagoParams p;
  PopulationStats stats{1e6, 2};
  // Blended demand equal to the population mean.
  CHECK(composite_score(0.2, 0.5e6, 0.5e6 / 625.0, stats, 625.0, p) == doctest::Approx(1.4));
  CHECK(composite_score(0.2, 1e6, 100, stats, 625, p) > composite_score(0.05, 1e6, 100, stats, 625, p));
  CHECK(composite_score(0.1, 0.5e6, 100, stats, 625, p) > composite_score(0.1, 1e6, 100, stats, 625, p));

  const SatelliteConfig cfg;
  CHECK(p.alpha(cfg) == doctest::Approx(625.0));
}

TEST_CASE("score order is descending with id tie-break") {
  const SatelliteConfig cfg;
  const TagoParams p;
  ref::Gen g(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<UserDemand> users;
    const int n = g.integer(1, 30);
    for (int i = 0; i < n; ++i) {
      users.push_back(g.user(static_cast<UserId>(n - i)));  // ids descending by index
      if (g.coin(0.3) && i > 0) {
        const UserId id = users.back().id;
        users.back() = users[i - 1];
        users.back().id = id;
      }
    }
    const auto bases = user_bases(users, cfg, kTwoTier, p);
    const auto order = score_order(users, bases, cfg, p);
    const auto stats = population_stats(bases, p.alpha(cfg));
    for (std::size_t k = 1; k < order.size(); ++k) {
      const double a = composite_score(users[order[k - 1]], stats, cfg, kTwoTier, p);
      const double b = composite_score(users[order[k]], stats, cfg, kTwoTier, p);
      CHECK(a >= b);
      if (a == b) CHECK(users[order[k - 1]].id < users[order[k]].id);
    }
  }
}

TEST_CASE("SMO examples") {
  const TagoParams p;

  SUBCASE("room for one of two identical users") {
    SatelliteConfig cfg;
    cfg.c_cap = 600;
    std::vector<UserDemand> users{make_user(0, 1e6, 1.0, 0.05), make_user(1, 1e6, 1.0, 0.05)};
    const auto r = smo(users, cfg, kTwoTier, p);
    CHECK(r.solution.admitted_count() == 1);
    CHECK(feasible(r.solution, users, cfg, kTwoTier));
  }

  SUBCASE("refinement switches an admitted user to make room") {
    SatelliteConfig cfg;
    cfg.c_cap = 800;  // gNB 450 + DU 360 does not fit, DU + DU does
    std::vector<UserDemand> users{make_user(0, 1e6, 1.0, 0.2), make_user(1, 1e6, 1.0, 0.2)};
    SlotSolution start(2);
    start.decisions[0] = UserDecision::admit(ArchKind::OnboardGnb, 1e6);
    REQUIRE(feasible(start, users, cfg, kTwoTier));
    SlotSolution direct = start;
    direct.decisions[1] = UserDecision::admit(ArchKind::OnboardGnbDu, 1e6);
    REQUIRE_FALSE(feasible(direct, users, cfg, kTwoTier));

    const std::vector<std::size_t> rejected{1};
    const auto r = smo_refine(start, rejected, users, cfg, kTwoTier, p);
    CHECK(r.swaps == 1);
    CHECK(r.solution.admitted_count() == 2);
    CHECK(*r.solution.decisions[0].arch == ArchKind::OnboardGnbDu);
    CHECK(feasible(r.solution, users, cfg, kTwoTier));
  }

  SUBCASE("sub-F1 users under a compute squeeze match the exhaustive optimum") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      ref::Gen g(seed);
      SatelliteConfig cfg;
      std::vector<UserDemand> users;
      double sum_c0 = 0.0;
      for (UserId i = 0; i < 3; ++i) {
        auto u = g.user(i);
        u.t_max = 0.05;
        users.push_back(u);
        sum_c0 += per_user_cost(ArchKind::OnboardGnb, min_bandwidth(u.r_min, u.snr_linear), kTwoTier);
      }
      cfg.c_cap = sum_c0 * g.uniform(0.4, 0.95);
      const auto r = smo(users, cfg, kTwoTier, p);
      const auto best = ref::enumerate(users, cfg, kTwoTier, 1, p.eta_hz, p.wmin_tolerance_hz);
      CHECK(feasible(r.solution, users, cfg, kTwoTier));
      CHECK(r.solution.admitted_count() == best.admitted);
      for (const auto& d : r.solution.decisions)
        if (d.admitted) CHECK(*d.arch == ArchKind::OnboardGnb);
    }
  }

  SUBCASE("zero admissions is valid") {
    SatelliteConfig cfg;
    cfg.c_cap = 100;
    std::vector<UserDemand> users{make_user(0, 1e6, 1.0, 0.2)};
    const auto r = smo(users, cfg, kTwoTier, p);
    CHECK(r.solution.admitted_count() == 0);
  }
}

TEST_CASE("SMO follows the composite score order") {
  const TagoParams p;
  const CostModel cm;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto inst = fixtures::at_sigma(1.5, seed, cm, 30);
    const auto bases = user_bases(inst.users, inst.config, cm, p);
    const auto r = smo(inst.users, inst.config, cm, p);
    CHECK(r.phase1_order == score_order(inst.users, bases, inst.config, p));
  }
}

TEST_CASE("SMO admissions never fall as capacity grows") {
  const TagoParams p;
  const CostModel cm;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    ref::Gen g(seed + 77);
    auto inst = fixtures::at_sigma(g.uniform(0.8, 2.5), seed, cm, g.integer(2, 40));
    std::size_t prev = 0;
    const double c0 = inst.config.c_cap;
    const double b0 = inst.config.b_s;
    for (double f : {1.0, 1.1, 1.25, 1.5, 2.0}) {
      inst.config.c_cap = c0 * f;
      inst.config.b_s = std::ceil(b0 * f / 1e4) * 1e4;
      const auto n = smo(inst.users, inst.config, cm, p).solution.admitted_count();
      CHECK_MESSAGE(n >= prev, "seed ", seed, " factor ", f);
      prev = n;
    }
  }
}

TEST_CASE("tago routing") {
  const CostModel cm;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    TagoParams p;
    const auto light = fixtures::at_sigma(0.5, seed, cm);
    const auto r1 = tago(light.users, light.config, cm, p);
    CHECK(r1.trace.sigma == doctest::Approx(0.5));
    CHECK(r1.trace.branch == Branch::Ceo);

    const auto mid = fixtures::at_sigma(0.85, seed, cm);
    p.tau_strict = 0.0;
    const auto r2 = tago(mid.users, mid.config, cm, p);
    CHECK(r2.trace.sigma == doctest::Approx(0.85));
    CHECK(r2.trace.ceo_timed_out);
    CHECK(r2.trace.branch == Branch::CeoThenSmo);

    p = TagoParams{};
    const auto heavy = fixtures::at_sigma(1.2, seed, cm);
    const auto r3 = tago(heavy.users, heavy.config, cm, p);
    CHECK(r3.trace.sigma == doctest::Approx(1.2));
    CHECK(r3.trace.branch == Branch::Smo);
    CHECK_FALSE(r3.trace.ceo_ran);

    for (const auto* inst : {&light, &mid, &heavy}) {
      const auto r = tago(inst->users, inst->config, cm, TagoParams{});
      CHECK(check_feasibility(r.solution, inst->users, inst->config, cm).feasible());
    }
  }
}

TEST_CASE("tago is deterministic without a timeout") {
  const CostModel cm;
  TagoParams p;
  p.tau_strict = 10.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = fixtures::at_sigma(0.3 + 0.15 * static_cast<double>(seed), seed, cm);
    const auto a = tago(inst.users, inst.config, cm, p);
    const auto b = tago(inst.users, inst.config, cm, p);
    CHECK(a.trace.branch == b.trace.branch);
    for (std::size_t i = 0; i < inst.users.size(); ++i) {
      CHECK(a.solution.decisions[i].admitted == b.solution.decisions[i].admitted);
      CHECK(a.solution.decisions[i].arch == b.solution.decisions[i].arch);
      CHECK(a.solution.decisions[i].bandwidth_hz == b.solution.decisions[i].bandwidth_hz);
    }
  }
}

TEST_CASE("parameter validation") {
  TagoParams p;
  p.omega_eff = 0.7;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = TagoParams{};
  p.sigma_light = 1.2;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  CHECK_NOTHROW(TagoParams{}.validate());
}
