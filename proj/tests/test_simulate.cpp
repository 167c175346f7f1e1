#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "ovp/simulate.hpp"

using namespace ovp;

namespace {

/// 1D, one interval target [1, 1.2], speed 1, l = 1.
Scenario line_one_target(double horizon = 2.0) {
  Scenario s;
  s.dim = 1;
  s.targets = {Target{Box{{1.0}, {1.2}}}};
  s.horizon = horizon;
  s.controls = {{-1.0}, {1.0}, {0.0}};
  s.box_lo = {-1.0};
  s.box_hi = {3.0};
  return s;
}

double first_touch(const Trajectory& tr) {
  for (const auto& e : tr.events) {
    if (e.kind == EventKind::kTouch) return e.t;
  }
  return -1.0;
}

}  // namespace

TEST_CASE("auto memory flips at the start when x is inside a target") {
  const Scenario s = line_one_target();
  const auto tr = simulate_auto(s, {1.1}, 0.0, s.initial_state(),
                                ControlSignal::constant(0.0, s.horizon, 0.01, {0.0}));
  REQUIRE(tr.events.size() >= 1);
  CHECK(tr.events[0].kind == EventKind::kTouch);
  CHECK(tr.events[0].t == 0.0);
  CHECK(tr.rows[1].memory.is_final());
  CHECK(tr.rows[1].event == "touch:1");
}

TEST_CASE("zero control outside targets gives a constant trajectory") {
  const Scenario s = testing::two_balls();
  const Point x{0.05, 0.9};
  const auto tr = simulate_auto(s, x, 0.0, s.initial_state(),
                                ControlSignal::constant(0.0, s.horizon, 0.05, {0.0, 0.0}));
  CHECK(tr.events.empty());
  CHECK(tr.rows.size() == 21);
  for (const auto& row : tr.rows) {
    CHECK(row.y == x);
    CHECK(row.memory == s.initial_state());
  }
  CHECK(tr.rows.back().t == s.horizon);
  CHECK(tr.ledger.running == doctest::Approx(1.0));
}

TEST_CASE("crossing time converges to the analytic value") {
  const Scenario s = line_one_target();
  for (double dt : {0.1, 0.05, 0.025, 0.0125}) {
    const auto tr = simulate_auto(s, {0.0}, 0.0, s.initial_state(),
                                  ControlSignal::constant(0.0, s.horizon, dt, {1.0}));
    const double hit = first_touch(tr);
    CHECK(hit >= 1.0 - 1e-9);
    CHECK(hit <= 1.0 + dt + 1e-9);
    CHECK(tr.events.back().kind == EventKind::kStop);
  }
}

TEST_CASE("trajectories respect the speed bound and monotone memory") {
  const Scenario s = testing::two_balls();
  std::vector<Control> samples;
  for (int k = 0; k < 40; ++k) samples.push_back(s.controls[static_cast<std::size_t>(k * 7) % s.controls.size()]);
  const ControlSignal alpha{0.0, 0.025, samples};
  const Point x{0.1, 0.45};
  const auto tr = simulate_auto(s, x, 0.0, s.initial_state(), alpha);
  for (std::size_t i = 0; i < tr.rows.size(); ++i) {
    const auto& r = tr.rows[i];
    CHECK(std::hypot(r.y[0] - x[0], r.y[1] - x[1]) <= 1.0 * r.t + 1e-12);
    if (i > 0) {
      CHECK((tr.rows[i - 1].memory.bits & r.memory.bits) == tr.rows[i - 1].memory.bits);
      CHECK(r.running >= tr.rows[i - 1].running);
    }
  }
}

TEST_CASE("immediate full switch costs exactly C") {
  const Scenario s = testing::two_balls();
  const Point x{0.5, 0.9};
  HybridControlString u{ControlSignal::constant(0.0, 1.0, 0.1, {0.0, 0.0}), {0.0}, {}};
  CHECK(evaluate_switching_cost(s, x, 0.0, s.initial_state(), u) ==
        eval_switch_cost(s, x, s.initial_state(), s.final_state()));
}

TEST_CASE("waiting one time unit with zero switch cost costs 1") {
  Scenario s = line_one_target();
  s.switch_cost.family = SwitchCostFamily::kConstantPerDiscard;
  s.switch_cost.per_target = 0.0;
  HybridControlString u{ControlSignal::constant(0.0, 2.0, 0.1, {1.0}), {1.0}, {}};
  CHECK(evaluate_switching_cost(s, {0.0}, 0.0, s.initial_state(), u) == doctest::Approx(1.0));
}

TEST_CASE("two-switch cost matches a closed form and a refined signal") {
  Scenario s = testing::coarse_1d();
  s.discount = 0.5;
  // Move right from 0 at speed 1; discard target 1 at t = 0.3 (at x = 0.3,
  // inside), then target 2 at t = 0.55 (at x = 0.55, distance 0.15).
  HybridControlString u{ControlSignal::constant(0.0, s.horizon, 0.1, {1.0}), {0.3, 0.55},
                        {MemoryState{1u, 2}}};
  const double cost = evaluate_switching_cost(s, {0.0}, 0.0, s.initial_state(), u);
  const double exact = (1.0 - std::exp(-0.5 * 0.55)) / 0.5 + std::exp(-0.5 * 0.55) * 0.15;
  CHECK(cost == doctest::Approx(exact).epsilon(1e-3));

  HybridControlString fine = u;
  fine.alpha = ControlSignal::constant(0.0, s.horizon, 0.1 / 16, {1.0});
  CHECK(std::abs(evaluate_switching_cost(s, {0.0}, 0.0, s.initial_state(), fine) - cost) <= 1e-3);

  const auto tr = simulate_switching(s, {0.0}, 0.0, s.initial_state(), u);
  CHECK(tr.ledger.total() == doctest::Approx(cost).epsilon(1e-14));
  REQUIRE(tr.ledger.charges.size() == 2);
  CHECK(tr.ledger.charges[0].amount == doctest::Approx(0.0));
  int switch_rows = 0;
  for (const auto& r : tr.rows) switch_rows += r.event.rfind("switch:", 0) == 0;
  CHECK(switch_rows == 2);
  CHECK(tr.rows.back().event == "switch:01->11");
  CHECK(tr.rows.back().total == doctest::Approx(cost).epsilon(1e-14));
}

TEST_CASE("halving the step gives at least first-order convergence") {
  Scenario s = testing::coarse_1d();
  s.discount = 1.0;
  s.running_cost.family = RunningCostFamily::kTimeAffine;
  s.running_cost.c1 = 2.0;
  auto cost_at = [&](double dt) {
    HybridControlString u{ControlSignal::constant(0.0, s.horizon, dt, {1.0}), {0.5}, {}};
    return evaluate_switching_cost(s, {0.0}, 0.0, s.initial_state(), u);
  };
  const double c1 = cost_at(0.1), c2 = cost_at(0.05), c3 = cost_at(0.025);
  CHECK(std::abs(c1 - c2) / std::abs(c2 - c3) >= 1.5);
}

TEST_CASE("evaluated costs are nonnegative and pruning only removes larger costs") {
  const Scenario s = testing::coarse_1d();
  HybridControlString u{ControlSignal::constant(0.0, s.horizon, 0.1, {-1.0}), {0.2, 0.6},
                        {MemoryState{2u, 2}}};
  const double full = evaluate_switching_cost(s, {0.5}, 0.0, s.initial_state(), u);
  CHECK(full >= 0.0);
  CHECK(evaluate_switching_cost(s, {0.5}, 0.0, s.initial_state(), u, full) == full);
  CHECK(std::isinf(evaluate_switching_cost(s, {0.5}, 0.0, s.initial_state(), u, full * 0.5)));
}

TEST_CASE("malformed control strings are rejected") {
  const Scenario s = testing::coarse_1d();
  const auto alpha = ControlSignal::constant(0.0, s.horizon, 0.1, {0.0});
  const MemoryState p = s.initial_state();
  CHECK_THROWS_AS(check_control_string(s, 0.0, p, {alpha, {}, {}}), IllegalControl);
  CHECK_THROWS_AS(check_control_string(s, 0.0, p, {alpha, {0.5, 0.2}, {MemoryState{1u, 2}}}),
                  IllegalControl);
  CHECK_THROWS_AS(check_control_string(s, 0.0, p, {alpha, {0.1, 0.2, 0.3}, {MemoryState{1u, 2}, MemoryState{2u, 2}}}),
                  IllegalControl);
  CHECK_THROWS_AS(check_control_string(s, 0.0, p, {alpha, {0.1, 0.2}, {MemoryState{3u, 2}}}),
                  IllegalControl);
  CHECK_THROWS_AS(check_control_string(s, 0.0, MemoryState{1u, 2}, {alpha, {0.1, 0.2}, {MemoryState{2u, 2}}}),
                  IllegalControl);
  CHECK_THROWS_AS(check_control_string(s, 0.0, p, {alpha, {0.9}, {}}), IllegalControl);
  CHECK_NOTHROW(check_control_string(s, 0.0, p, {alpha, {0.2, 0.2}, {MemoryState{1u, 2}}}));
}

TEST_CASE("single stopping cost") {
  Scenario s = line_one_target();
  const auto toward = ControlSignal::constant(0.0, s.horizon, 0.05, {1.0});
  const ObstacleFn dist = [&](std::span<const double> y, double) { return target_distance(s, y, 0); };
  CHECK(evaluate_stopping_cost(s, {0.2}, 0.0, s.initial_state(), toward, 0.0, dist) ==
        target_distance(s, Point{0.2}, 0));
  const ObstacleFn zero = [](std::span<const double>, double) { return 0.0; };
  CHECK(evaluate_stopping_cost(s, {0.2}, 0.0, s.initial_state(), toward, 0.5, zero) ==
        doctest::Approx(0.5));
  // Moving toward the target trades distance for running cost one to one.
  for (double tau = 0.0; tau <= 0.8 + 1e-12; tau += 0.1) {
    CHECK(evaluate_stopping_cost(s, {0.2}, 0.0, s.initial_state(), toward, tau, dist) ==
          doctest::Approx(0.8).epsilon(1e-12));
  }
  CHECK_THROWS_AS(advance(s, {0.2}, 0.5, s.initial_state(), toward, 0.4), std::out_of_range);
  CHECK_THROWS_AS(advance(s, {0.2}, 0.0, s.initial_state(), toward, 2.5), std::out_of_range);
}
