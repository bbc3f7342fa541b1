#include <doctest.h>

#include <cmath>

#include "flexsan/model.hpp"
#include "support/reference.hpp"

using namespace flexsan;

namespace {

const CostModel kTwoTier = CostModel::two_tier(400, 50, 320, 40);

SlotSolution single(ArchKind arch, double w) {
  SlotSolution s(1);
  s.decisions[0] = UserDecision::admit(arch, w);
  return s;
}

}  // namespace

TEST_CASE("achievable rate") {
  CHECK(achievable_rate(1e6, 1.0) == doctest::Approx(1e6));
  CHECK(achievable_rate(0.0, 7.0) == 0.0);
  CHECK(achievable_rate(2e6, 3.0) == doctest::Approx(4e6));

  ref::Gen g(11);
  for (int i = 0; i < 500; ++i) {
    const double w = g.uniform(0, 20e6);
    const double x = g.log_uniform(1e-3, 1e4);
    const double dw = g.uniform(0, 1e6);
    const double dx = g.uniform(0, 10);
    CHECK(achievable_rate(w + dw, x) >= achievable_rate(w, x));
    CHECK(achievable_rate(w, x + dx) >= achievable_rate(w, x));
  }
}

TEST_CASE("transmission delay") {
  CHECK(transmission_delay(299792458.0, 8.192e6, 1.0, 8192) == doctest::Approx(1.001).epsilon(1e-12));
  CHECK(transmission_delay(0.0, 1e6, 1.0, 8192) == doctest::Approx(8.192e-3).epsilon(1e-12));
  const double expected = 600e3 / 299792458.0 + 8192.0 / 1e6;
  CHECK(transmission_delay(600e3, 1e6, 1.0, 8192) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(transmission_delay(600e3, 1e6, 1.0, 8192) == doctest::Approx(10.193e-3).epsilon(1e-4));
  CHECK_THROWS_AS(transmission_delay(1e3, 0.0, 1.0, 8192), RateUndefined);
}

TEST_CASE("per-user cost") {
  CHECK(per_user_cost(ArchKind::OnboardGnb, 0.7e6, kTwoTier) == doctest::Approx(330.0));
  CHECK(per_user_cost(ArchKind::OnboardGnbDu, 0.7e6, kTwoTier) == doctest::Approx(264.0));

  const CostModel defaults;
  for (double w : {0.0, 1e4, 0.3e6, 1e6, 5e6, 20e6}) {
    const double c0 = per_user_cost(ArchKind::OnboardGnb, w, defaults);
    const double c1 = per_user_cost(ArchKind::OnboardGnbDu, w, defaults);
    CHECK(c1 / c0 == doctest::Approx(0.8).epsilon(0.0125));
    CHECK(c1 < c0);
    CHECK(per_user_cost(ArchKind::OnboardGnbDu, w, kTwoTier) / per_user_cost(ArchKind::OnboardGnb, w, kTwoTier) ==
          doctest::Approx(0.8).epsilon(0.0125));
  }
}

TEST_CASE("cost split ordering holds for random valid models") {
  ref::Gen g(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ProcessingFunction> fns;
    const int n = g.integer(1, 6);
    for (int k = 0; k < n; ++k)
      fns.push_back({"f" + std::to_string(k), g.uniform(0, 500), g.uniform(0, 80), g.coin()});
    fns.push_back({"ground", g.uniform(1, 100), g.uniform(1, 20), false});
    const CostModel cm(fns);
    for (int k = 0; k < 10; ++k) {
      const double w = g.uniform(0, 20e6);
      CHECK(per_user_cost(ArchKind::OnboardGnbDu, w, cm) < per_user_cost(ArchKind::OnboardGnb, w, cm));
      CHECK(per_user_cost(ArchKind::OnboardGnb, w, cm) == doctest::Approx(static_cast<double>(ref::cost(ArchKind::OnboardGnb, w, cm))));
    }
  }
}

TEST_CASE("cost model validation") {
  CHECK_THROWS_AS(CostModel({{"a", -1, 0, true}, {"b", 1, 1, false}}), InvalidArgument);
  // Nothing left on the ground: the split would not be cheaper.
  CHECK_THROWS_AS(CostModel({{"a", 1, 1, true}}), InvalidArgument);
}

TEST_CASE("aggregate load") {
  CHECK(aggregate_load(SlotSolution{}, kTwoTier) == 0.0);
  SlotSolution s(3);
  s.decisions[0] = UserDecision::admit(ArchKind::OnboardGnb, 0.7e6);
  s.decisions[1] = UserDecision::admit(ArchKind::OnboardGnb, 0.7e6);
  CHECK(aggregate_load(s, kTwoTier) == doctest::Approx(660.0));
  s.decisions[1] = UserDecision::admit(ArchKind::OnboardGnbDu, 0.7e6);
  CHECK(aggregate_load(s, kTwoTier) == doctest::Approx(594.0));
}

TEST_CASE("queuing and processing delay") {
  const SatelliteConfig cfg;
  CHECK(queuing_delay(16000, cfg) == doctest::Approx(6.25e-5));
  CHECK(queuing_delay(31990, cfg) == doctest::Approx(0.1));
  CHECK_THROWS_AS(queuing_delay(32000, cfg), QueueUnstable);
  CHECK(processing_delay(ArchKind::OnboardGnb, 16000, cfg) == doctest::Approx(6.25e-5));
  CHECK(processing_delay(ArchKind::OnboardGnbDu, 16000, cfg) == doctest::Approx(0.0900625));
  CHECK(processing_delay(ArchKind::OnboardGnbDu, 0, cfg) == doctest::Approx(0.09 + 3.125e-5));
  CHECK_THROWS_AS(processing_delay(ArchKind::OnboardGnb, 40000, cfg), QueueUnstable);

  double prev = queuing_delay(0, cfg);
  for (double lambda = 100; lambda < 32000; lambda += 100) {
    const double q = queuing_delay(lambda, cfg);
    CHECK(q > prev);
    prev = q;
  }
  CHECK(queuing_delay(32000 - 1e-6, cfg) > 1e5);
}

TEST_CASE("end-to-end latency") {
  const SatelliteConfig cfg;
  std::vector<UserDemand> users(1);
  users[0].distance_m = 0.0;
  users[0].snr_linear = 1.0;

  // Independent chain: transfer + queue (+ F1).
  const double c_gnb = 400 * 8.192 + 50;
  const double c_du = 320 * 8.192 + 40;
  CHECK(c_gnb == doctest::Approx(3326.8));
  CHECK(c_du == doctest::Approx(2661.44));
  const double expect_gnb = 8192.0 / 8.192e6 + 1.0 / (32000.0 - c_gnb);
  const double expect_du = 8192.0 / 8.192e6 + 1.0 / (32000.0 - c_du) + 0.09;

  const double gnb = end_to_end_latency(users, 0, single(ArchKind::OnboardGnb, 8.192e6), cfg, kTwoTier);
  CHECK(gnb == doctest::Approx(expect_gnb).epsilon(1e-12));
  CHECK(gnb == doctest::Approx(1.0349e-3).epsilon(1e-4));
  const double du = end_to_end_latency(users, 0, single(ArchKind::OnboardGnbDu, 8.192e6), cfg, kTwoTier);
  CHECK(du == doctest::Approx(expect_du).epsilon(1e-12));
  CHECK(du == doctest::Approx(0.09103).epsilon(1e-4));

  SlotSolution none(1);
  CHECK_THROWS_AS(end_to_end_latency(users, 0, none, cfg, kTwoTier), NotAdmitted);
}

TEST_CASE("coupling: admitting a user never lowers another's latency") {
  const SatelliteConfig cfg;
  ref::Gen g(21);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<UserDemand> users;
    for (int i = 0; i < 6; ++i) users.push_back(g.user(i));
    SlotSolution s(users.size());
    for (std::size_t i = 0; i + 1 < users.size(); ++i)
      if (g.coin(0.7)) s.decisions[i] = UserDecision::admit(g.coin() ? ArchKind::OnboardGnb : ArchKind::OnboardGnbDu, g.uniform(1e5, 2e6));
    SlotSolution more = s;
    more.decisions.back() = UserDecision::admit(ArchKind::OnboardGnb, g.uniform(1e5, 2e6));
    if (aggregate_load(more, CostModel()) >= cfg.mu()) continue;
    for (std::size_t i = 0; i + 1 < users.size(); ++i) {
      if (!s.decisions[i].admitted) continue;
      CHECK(end_to_end_latency(users, i, more, cfg, CostModel()) >= end_to_end_latency(users, i, s, cfg, CostModel()));
    }
  }
}

TEST_CASE("min bandwidth") {
  const double a = min_bandwidth(1e6, 3.0);
  CHECK(a >= 0.5e6);
  CHECK(a <= 0.51e6);
  const double b = min_bandwidth(2e6, 1.0);
  CHECK(b >= 2.0e6);
  CHECK(b <= 2.01e6);
  CHECK_THROWS_AS(min_bandwidth(50e6, 1.0), ThroughputUnsatisfiable);
  CHECK_FALSE(try_min_bandwidth(50e6, 1.0, 1e4, 20e6).has_value());
  CHECK_THROWS_AS(min_bandwidth(-1, 1.0), InvalidArgument);

  ref::Gen g(3);
  for (int i = 0; i < 300; ++i) {
    const double r = g.uniform(1e4, 5e6);
    const double x = g.log_uniform(0.05, 1000);
    const auto w = try_min_bandwidth(r, x, 1e4, 20e6);
    const long double expect = ref::min_bandwidth(r, x, 1e4);
    if (expect > 20e6) {
      CHECK_FALSE(w.has_value());
      continue;
    }
    REQUIRE(w.has_value());
    CHECK(*w == doctest::Approx(static_cast<double>(expect)));
    CHECK(std::fmod(*w, 1e4) == doctest::Approx(0.0));
  }
}

TEST_CASE("feasibility checker examples") {
  const SatelliteConfig cfg;
  std::vector<UserDemand> users(3);
  for (std::size_t i = 0; i < users.size(); ++i) users[i].id = static_cast<UserId>(i);
  SlotSolution none(3);
  CHECK(check_feasibility(none, users, cfg, kTwoTier).feasible());

  std::vector<UserDemand> one(1);
  one[0].t_max = 0.05;
  one[0].snr_linear = 100.0;
  const auto rep = check_feasibility(single(ArchKind::OnboardGnbDu, 5e6), one, cfg, kTwoTier);
  REQUIRE(rep.violations.size() == 1);
  CHECK(rep.violations[0].kind == Violation::Delay);
  CHECK(rep.violations[0].user_index == std::optional<std::size_t>(0));

  CHECK_THROWS_AS(check_feasibility(none, one, cfg, kTwoTier), InvalidArgument);
}

TEST_CASE("DU hard floor: sub-F1 budgets are always violated") {
  const SatelliteConfig cfg;
  ref::Gen g(8);
  for (int i = 0; i < 200; ++i) {
    std::vector<UserDemand> one{g.user(0)};
    one[0].t_max = g.uniform(0.001, cfg.t_f1 - 1e-6);
    one[0].distance_m = 550e3;
    const auto rep = check_feasibility(single(ArchKind::OnboardGnbDu, g.uniform(1e4, 20e6)), one, cfg, CostModel());
    bool delay = false;
    for (const auto& v : rep.violations) delay |= v.kind == Violation::Delay;
    CHECK(delay);
  }
}

TEST_CASE("checker agrees with an independent evaluator on 1000 fuzzed instances") {
  ref::Gen g(2024);
  int infeasible = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    SatelliteConfig cfg;
    cfg.b_s = g.uniform(1e6, 20e6);
    cfg.c_cap = g.uniform(500, 8000);
    const CostModel cm = g.coin() ? CostModel() : kTwoTier;
    std::vector<UserDemand> users;
    const int n = g.integer(0, 8);
    for (int i = 0; i < n; ++i) users.push_back(g.user(i));
    SlotSolution s(users.size());
    for (auto& d : s.decisions) {
      const int kind = g.integer(0, 9);
      if (kind <= 2) continue;
      const ArchKind a = g.coin() ? ArchKind::OnboardGnb : ArchKind::OnboardGnbDu;
      d = UserDecision::admit(a, g.log_uniform(1e4, 5e6));
      if (kind == 9) {  // malformed association
        switch (g.integer(0, 2)) {
          case 0: d.arch.reset(); break;
          case 1: d.bandwidth_hz = 0.0; break;
          default: d.admitted = false; break;
        }
      }
    }
    const auto report = check_feasibility(s, users, cfg, cm);
    const auto expect = ref::check(s, users, cfg, cm);
    CHECK(ref::verdict_of(report) == expect);
    CHECK(report.feasible() == expect.empty());
    CHECK(report.violations.size() == expect.size());
    infeasible += !expect.empty();
  }
  // The generator must exercise both verdicts.
  CHECK(infeasible > 100);
  CHECK(infeasible < 1000);
}
