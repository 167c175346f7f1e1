#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "ovp/solver.hpp"

using namespace ovp;

namespace {

double max_obstacle_gap(const SolveArtifacts& art, const Scenario& s) {
  double worst = -1e300;
  for (std::uint32_t m = 0; m + 1 < art.fields.size(); ++m) {
    const MemoryState p{m, art.n};
    for (int k = 0; k <= art.grid.time_steps(); ++k) {
      const auto psi = obstacle_slice(art, s, p, k);
      const auto sl = art.field(p).slice(k);
      for (std::size_t i = 0; i < psi.size(); ++i) worst = std::max(worst, sl[i] - psi[i]);
    }
  }
  return worst;
}

Scenario three_targets() {
  return parse_scenario(R"({"dimension": 2,
    "targets": [{"shape": "ball", "center": [0.2, 0.2], "radius": 0.1},
                {"shape": "ball", "center": [0.8, 0.3], "radius": 0.1},
                {"shape": "box", "lo": [0.4, 0.7], "hi": [0.6, 0.8]}],
    "horizon": 1.0, "discount": 0.3,
    "running_cost": {"family": "time_affine", "c0": 0.5, "c1": 1.0},
    "controls": {"directions": 8},
    "box": {"lo": [0, 0], "hi": [1, 1]}})");
}

}  // namespace

TEST_CASE("final state field is identically zero") {
  const Scenario s = testing::eikonal();
  const auto grid = SpaceTimeGrid::for_scenario(s, 11, 5);
  const auto art = solve_all(s, grid);
  CHECK(art.fields.size() == 2);
  for (double v : art.field(s.final_state()).values) CHECK(v == 0.0);
  CHECK_THROWS_AS(obstacle_psi(art, s, s.final_state(), Point{0.5, 0.5}, 0.0), std::invalid_argument);
}

TEST_CASE("obstacle at level N-1 is the distance to the last target") {
  const Scenario s = testing::two_balls();
  const auto grid = SpaceTimeGrid::for_scenario(s, 11, 4);
  SolveArtifacts art(grid, 2);
  art.fields[3] = solve_level(s, grid, MemoryState{3u, 2}, art);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const Point x{u(rng), u(rng)};
    CHECK(obstacle_psi(art, s, MemoryState{1u, 2}, x, u(rng)) == doctest::Approx(target_distance(s, x, 1)));
    CHECK(obstacle_psi(art, s, MemoryState{2u, 2}, x, u(rng)) == doctest::Approx(target_distance(s, x, 0)));
  }
  CHECK(obstacle_psi(art, s, MemoryState{1u, 2}, Point{0.75, 0.5}, 0.3) == 0.0);
}

TEST_CASE("obstacle at the empty state is a three-way minimum") {
  const Scenario s = testing::two_balls();
  const auto grid = SpaceTimeGrid::for_scenario(s, 11, 4);
  const auto art = solve_all(s, grid);
  const MemoryState p00{0u, 2}, p01{1u, 2}, p10{2u, 2}, p11{3u, 2};
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const Point x{u(rng), u(rng)};
    const double t = u(rng);
    const double a = eval_switch_cost(s, x, p00, p01) + interpolate(art.field(p01), x, t);
    const double b = eval_switch_cost(s, x, p00, p10) + interpolate(art.field(p10), x, t);
    const double c = eval_switch_cost(s, x, p00, p11);
    CHECK(obstacle_psi(art, s, p00, x, t) == doctest::Approx(std::min({a, b, c})));
  }
}

TEST_CASE("single semi-Lagrangian steps") {
  const Scenario s = testing::eikonal();
  const auto grid = SpaceTimeGrid::for_scenario(s, 9, 10);
  const std::size_t n = grid.num_nodes();
  std::vector<double> out(n);

  std::vector<double> next(n, 0.7), psi(n, 0.0);
  sl_step(next, psi, s, grid, s.initial_state(), 3, out);
  for (double v : out) CHECK(v == 0.0);

  std::fill(psi.begin(), psi.end(), 1e6);
  sl_step(next, psi, s, grid, s.initial_state(), 3, out);
  for (double v : out) CHECK(v == doctest::Approx(0.7 + grid.dt()).epsilon(1e-14));
}

TEST_CASE("semi-Lagrangian step is monotone in the next slice") {
  const Scenario s = testing::eikonal();
  const auto grid = SpaceTimeGrid::for_scenario(s, 9, 10);
  const std::size_t n = grid.num_nodes();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> a(n), b(n), psi(n), out_a(n), out_b(n);
  for (int trial = 0; trial < 20; ++trial) {
    for (std::size_t i = 0; i < n; ++i) {
      b[i] = u(rng);
      a[i] = b[i] + u(rng);
      psi[i] = 2.0 * u(rng);
    }
    sl_step(a, psi, s, grid, s.initial_state(), 0, out_a);
    sl_step(b, psi, s, grid, s.initial_state(), 0, out_b);
    for (std::size_t i = 0; i < n; ++i) CHECK(out_a[i] >= out_b[i]);
  }
}

TEST_CASE("single target with unit cost reproduces the distance") {
  const Scenario s = testing::eikonal();
  const auto grid = SpaceTimeGrid::for_scenario(s, 41, 50);
  const auto art = solve_all(s, grid);
  const ValueField& w = art.field(s.initial_state());
  double err = 0.0;
  for (int k = 0; k <= grid.time_steps(); ++k) {
    for (std::size_t i = 0; i < grid.num_nodes(); ++i) {
      err = std::max(err, std::abs(w.at(k, i) - target_distance(s, grid.node_point(i), 0)));
    }
  }
  CHECK(err <= 0.05);
  REQUIRE(art.diagnostics.size() == 2);
  CHECK(art.diagnostics[1].contact_fraction > 0.5);
}

TEST_CASE("field invariants on a three-target instance") {
  const Scenario s = three_targets();
  const auto grid = SpaceTimeGrid::for_scenario(s, 15, 12);
  const auto art = solve_all(s, grid);
  CHECK(art.fields.size() == 8);
  CHECK(art.diagnostics.size() == 8);
  CHECK(max_obstacle_gap(art, s) <= 1e-12);
  for (std::uint32_t m = 0; m < 8; ++m) {
    const MemoryState p{m, 3};
    const ValueField& w = art.field(p);
    for (double v : w.values) CHECK(v >= 0.0);
    if (p.is_final()) continue;
    const auto psi = obstacle_slice(art, s, p, grid.time_steps());
    const auto last = w.slice(grid.time_steps());
    for (std::size_t i = 0; i < psi.size(); ++i) CHECK(last[i] == psi[i]);
  }
}

TEST_CASE("heavy discounting keeps the obstacle invariant") {
  const Scenario s = parse_scenario(testing::eikonal_json(100.0));
  const auto grid = SpaceTimeGrid::for_scenario(s, 15, 20);
  const auto art = solve_all(s, grid);
  CHECK(max_obstacle_gap(art, s) <= 1e-12);
}

TEST_CASE("doubling the switch cost never lowers the value") {
  const Scenario s1 = testing::two_balls(1.0), s2 = testing::two_balls(2.0);
  const auto grid = SpaceTimeGrid::for_scenario(s1, 21, 25);
  const auto a1 = solve_all(s1, grid), a2 = solve_all(s2, grid);
  for (std::uint32_t m = 0; m < 4; ++m) {
    const auto& w1 = a1.field({m, 2}).values;
    const auto& w2 = a2.field({m, 2}).values;
    for (std::size_t i = 0; i < w1.size(); ++i) CHECK(w2[i] >= w1[i]);
  }
}

TEST_CASE("thread count does not change the result") {
  const Scenario s = testing::two_balls();
  const auto grid = SpaceTimeGrid::for_scenario(s, 21, 10);
  SolveOptions one, many;
  many.threads = 3;
  const auto a = solve_all(s, grid, one), b = solve_all(s, grid, many);
  for (std::uint32_t m = 0; m < 4; ++m) CHECK(a.field({m, 2}).values == b.field({m, 2}).values);
}

TEST_CASE("ordering and resource errors") {
  const Scenario s = testing::two_balls();
  const auto grid = SpaceTimeGrid::for_scenario(s, 11, 4);
  SolveArtifacts empty(grid, 2);
  CHECK_THROWS_AS(solve_level(s, grid, s.initial_state(), empty), OrderingError);
  SolveOptions tiny;
  tiny.memory_cap_bytes = 1000;
  CHECK_THROWS_AS(solve_all(s, grid, tiny), ResourceError);
  CHECK(field_memory_bytes(grid, 2) == 4 * 5 * 121 * sizeof(double));
}

TEST_CASE("hamiltonian") {
  Scenario s = testing::eikonal();
  const Point x{0.3, 0.3};
  CHECK(hamiltonian(s, s.initial_state(), x, 0.0, Point{0.0, 0.0}) == doctest::Approx(-1.0));

  s.controls = default_controls(2, 256);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int i = 0; i < 20; ++i) {
    const Point xi{g(rng), g(rng)};
    const double exact = std::hypot(xi[0], xi[1]) - 1.0;
    const double h = hamiltonian(s, s.initial_state(), x, 0.0, xi);
    CHECK(h <= exact + 1e-12);
    CHECK(h >= exact - std::hypot(xi[0], xi[1]) * (1.0 - std::cos(M_PI / 256)) - 1e-12);
    Scenario doubled = s;
    doubled.running_cost.c0 = 2.0;
    CHECK(hamiltonian(doubled, s.initial_state(), x, 0.0, xi) == doctest::Approx(h - 1.0));
  }
}
