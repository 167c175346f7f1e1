#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ovp/memory.hpp"

namespace ovp {

using Point = std::vector<double>;
using Control = std::vector<double>;

/// Largest supported spatial dimension. Grid solves beyond this are not
/// feasible at desk scale anyway.
inline constexpr int kMaxDim = 6;

/// Raised for malformed or invalid problem descriptions.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a switch destination is not in I_p.
class IllegalSwitch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Ball {
  Point center;
  double radius = 0.0;
};

struct Box {
  Point lo;
  Point hi;
};

struct Target {
  std::variant<Ball, Box> shape;
};

enum class DynamicsFamily { kVelocity, kDriftVelocity };

/// f(x, a, p) = s_p * a (+ b for the drift family).
struct DynamicsSpec {
  DynamicsFamily family = DynamicsFamily::kVelocity;
  double speed = 1.0;
  /// Per-state speed overrides keyed by mask.
  std::map<std::uint32_t, double> speed_by_state;
  Point drift;  // empty unless family == kDriftVelocity

  double speed_for(MemoryState p) const;
};

enum class RunningCostFamily { kConstant, kTimeAffine, kTimeTable };

struct RunningCostSpec {
  RunningCostFamily family = RunningCostFamily::kConstant;
  double c0 = 1.0;
  double c1 = 0.0;
  /// (t, g) pairs with strictly increasing t; g is clamped outside the range.
  std::vector<std::pair<double, double>> breakpoints;
};

enum class SwitchCostFamily { kDistanceSum, kConstantPerDiscard };

struct SwitchCostSpec {
  SwitchCostFamily family = SwitchCostFamily::kDistanceSum;
  double per_target = 1.0;  // only used by kConstantPerDiscard
  double scale = 1.0;       // kappa
};

struct Scenario {
  int dim = 1;
  std::vector<Target> targets;
  double horizon = 1.0;
  double discount = 0.0;
  DynamicsSpec dynamics;
  RunningCostSpec running_cost;
  SwitchCostSpec switch_cost;
  std::vector<Control> controls;
  Point box_lo;
  Point box_hi;

  int num_targets() const { return static_cast<int>(targets.size()); }
  MemoryState initial_state() const { return MemoryState::empty(num_targets()); }
  MemoryState final_state() const { return MemoryState::full(num_targets()); }
};

struct ValidationReport {
  double dynamics_bound = 0.0;    // M
  double lipschitz = 0.0;         // L
  double running_cost_sup = 0.0;
  /// Modulus of continuity of l in x; identically zero for the built-in families.
  double running_cost_modulus = 0.0;
  bool targets_disjoint = true;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

/// Parses a scenario JSON document, applies defaults and rejects any
/// violated invariant with a ScenarioError naming the field.
Scenario parse_scenario(const std::string& text);

/// Canonical JSON rendering: every default resolved, keys sorted.
std::string export_scenario(const Scenario& s);

ValidationReport validate(const Scenario& s);

/// Unit directions (plus the zero control) used when a scenario only gives
/// a direction count.
std::vector<Control> default_controls(int dim, int directions);

Point eval_dynamics(const Scenario& s, std::span<const double> x,
                    std::span<const double> a, MemoryState p);
void eval_dynamics_into(const Scenario& s, std::span<const double> x,
                        std::span<const double> a, MemoryState p,
                        std::span<double> out);

double eval_running_cost(const Scenario& s, std::span<const double> x,
                         std::span<const double> a, MemoryState p, double t);

/// C(x, p, p'). Throws IllegalSwitch unless p' is in I_p.
double eval_switch_cost(const Scenario& s, std::span<const double> x,
                        MemoryState p, MemoryState next);

/// Euclidean distance to target j (0-based).
double target_distance(const Scenario& s, std::span<const double> x, int j);

bool inside_target(const Scenario& s, std::span<const double> x, int j);

}  // namespace ovp
