#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "ovp/memory.hpp"
#include "ovp/scenario.hpp"
#include "ovp/simulate.hpp"
#include "ovp/solver.hpp"

namespace ovp {

/// Raised when a decision is requested at the final state.
class NoDecision : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PolicyOptions {
  /// Switch when the interpolated margin psi_p - W_p is at most this.
  double stop_tol = 1e-9;
  /// Simulation step; <= 0 selects min dx / (2 M).
  double sim_dt = 0.0;
};

struct Decision {
  enum class Kind { kContinue, kSwitch };
  Kind kind = Kind::kContinue;
  std::size_t control = 0;  // index into Scenario::controls when continuing
  MemoryState next;         // destination when switching
  double margin = 0.0;
};

struct SwitchRecord {
  double t = 0.0;
  MemoryState from;
  MemoryState to;
  Point position;
  double charge = 0.0;  // discounted to t0
};

struct VisitingPlan {
  Point x0;
  double t0 = 0.0;
  MemoryState p0;
  Trajectory trajectory;
  std::vector<SwitchRecord> switches;
  HybridControlString control;  // the realized u
  double achieved_cost = 0.0;
  double predicted_cost = 0.0;
};

struct PlanReport {
  double gap = 0.0;  // (achieved - predicted) / max(predicted, eps)
  bool chain_legal = true;
  bool memory_monotone = true;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

/// min dx / (2 M), the default rollout step on a solved grid.
double default_sim_dt(const Scenario& s, const SpaceTimeGrid& grid);

Decision feedback_policy(const SolveArtifacts& art, const Scenario& s, const Point& x, double t,
                         MemoryState p, const PolicyOptions& options = {});

VisitingPlan synthesize_trajectory(const SolveArtifacts& art, const Scenario& s, const Point& x0,
                                   double t0, MemoryState p0, const PolicyOptions& options = {});

PlanReport verify_plan(const VisitingPlan& plan);

}  // namespace ovp
