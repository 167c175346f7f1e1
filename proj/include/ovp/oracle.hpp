#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ovp/memory.hpp"
#include "ovp/scenario.hpp"
#include "ovp/solver.hpp"

namespace ovp {

/// The enumeration would exceed the instance budget. Never truncated silently.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A desk-scale instance small enough for exhaustive enumeration:
/// d <= 2, N <= 2, at most 5 controls, at most 10 oracle time steps.
struct CoarseInstance {
  Scenario scenario;
  int steps = 8;
  std::uint64_t budget = 50'000'000;

  /// Throws std::invalid_argument if the instance is not coarse.
  static CoarseInstance make(Scenario s, int steps, std::uint64_t budget = 50'000'000);

  double dt() const { return scenario.horizon / steps; }
  double time(int k) const { return k == steps ? scenario.horizon : k * dt(); }
  /// Index of t on the oracle grid; throws if t is not a grid time.
  int index_of(double t) const;
};

struct OracleOptions {
  bool prune = true;
  int threads = 1;
};

/// Number of (control sequence, switch structure) pairs enumerated from (k, p).
std::uint64_t count_strings(const CoarseInstance& ci, int k, MemoryState p);

/// min J(x,t,p,u) over every piecewise-constant control on the oracle grid and
/// every admissible switch structure with switch times on the grid.
double brute_force_value(const CoarseInstance& ci, const Point& x, double t, MemoryState p,
                         const OracleOptions& options = {});

/// Nested optimal stopping: each level stops on the grid, paying
/// C + the brute-forced value of the level below.
double brute_force_cascade(const CoarseInstance& ci, const Point& x, double t, MemoryState p);

struct DppReport {
  double obstacle_violation = 0.0;  // max W_p - psi_p over nodes
  double dpp_violation = 0.0;       // max W(x,t) - (running + discounted W(y, t~))
  int samples = 0;
  int failures = 0;
  double tol = 0.0;
  bool pass = false;
};

/// Obstacle sweep over every node plus `samples` random DPP sub-optimality
/// checks along seeded piecewise-constant controls.
DppReport check_dpp(const SolveArtifacts& art, const Scenario& s, int samples, double tol,
                    std::uint64_t seed);

/// Obstacle sweep only.
double max_obstacle_violation(const SolveArtifacts& art, const Scenario& s);

struct Probe {
  Point x;
  double t = 0.0;
  MemoryState p;
};

struct ProbeResult {
  Probe probe;
  double brute = 0.0;
  double cascade = 0.0;
  std::optional<double> solver;
};

struct EquivalenceReport {
  std::vector<ProbeResult> results;
  double max_cascade_gap = 0.0;
  double max_solver_gap = 0.0;
  bool pass = false;
};

/// Compares brute force with the cascade (and the solver when `art` is given).
EquivalenceReport check_equivalence(const CoarseInstance& ci, const std::vector<Probe>& probes,
                                    const SolveArtifacts* art, double cascade_tol,
                                    double solver_tol, const OracleOptions& options = {});

/// Seeded probes on the oracle time grid with x uniform in the box.
std::vector<Probe> random_probes(const CoarseInstance& ci, int count, std::uint64_t seed);

}  // namespace ovp
