#pragma once

#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ovp/memory.hpp"
#include "ovp/scenario.hpp"

namespace ovp {

/// Raised when a hybrid control string violates its invariants.
class IllegalControl : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Piecewise-constant control: samples[k] acts on [t0 + k dt, t0 + (k+1) dt).
/// The last sample is held if a query runs past the end.
struct ControlSignal {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<Control> samples;

  /// n samples of the same value covering [t0, horizon].
  static ControlSignal constant(double t0, double horizon, double dt, const Control& a);

  std::size_t index_at(double s) const;
  const Control& at(double s) const { return samples[index_at(s)]; }
  double end() const { return t0 + dt * static_cast<double>(samples.size()); }
};

/// u = (alpha, m, t_1..t_m, p_1..p_{m-1}); p_m is implicitly the final state.
struct HybridControlString {
  ControlSignal alpha;
  std::vector<double> switch_times;
  std::vector<MemoryState> destinations;

  std::size_t m() const { return switch_times.size(); }
  /// Destination of switch i (0-based).
  MemoryState destination(std::size_t i, MemoryState final_state) const {
    return i + 1 < switch_times.size() ? destinations[i] : final_state;
  }
};

enum class EventKind { kTouch, kSwitch, kStop };

struct Event {
  double t = 0.0;
  EventKind kind = EventKind::kStop;
  std::string detail;
};

/// One CSV row. Event rows repeat the position of the sample they follow.
struct TrajectoryRow {
  double t = 0.0;
  Point y;
  MemoryState memory;
  std::string event;
  double running = 0.0;  // discounted running-cost integral so far
  double total = 0.0;    // running plus discounted switch/stop charges so far
};

struct Charge {
  double t = 0.0;
  MemoryState from;
  MemoryState to;
  double amount = 0.0;  // already discounted to the start time
};

struct CostLedger {
  double running = 0.0;
  std::vector<Charge> charges;

  double total() const;
};

struct Trajectory {
  std::vector<TrajectoryRow> rows;
  std::vector<Event> events;
  CostLedger ledger;
};

/// One explicit Euler step of length h from (y, s) with discounted trapezoid
/// increment of the running cost; discount measured from `origin`.
struct StepResult {
  Point y;
  double increment = 0.0;
};
StepResult euler_step(const Scenario& s, std::span<const double> y, const Control& a,
                      MemoryState q, double time, double h, double origin);

/// Automatic-memory model: bit j flips to 1 the first sample at which the
/// state lies in target j. Ends at T or when every bit is set.
Trajectory simulate_auto(const Scenario& s, const Point& x, double t, MemoryState p,
                         const ControlSignal& alpha);

/// Relaxed switching model. Returns +inf as soon as the partial sum exceeds
/// `cutoff` (partial sums are nondecreasing, so the minimum is unaffected).
double evaluate_switching_cost(const Scenario& s, const Point& x, double t, MemoryState p,
                               const HybridControlString& u,
                               double cutoff = std::numeric_limits<double>::infinity());

/// Same cost as evaluate_switching_cost, with the full trajectory and ledger.
Trajectory simulate_switching(const Scenario& s, const Point& x, double t, MemoryState p,
                              const HybridControlString& u);

/// Throws IllegalControl if u is not admissible from (t, p).
void check_control_string(const Scenario& s, double t, MemoryState p,
                          const HybridControlString& u);

using ObstacleFn = std::function<double(std::span<const double>, double)>;

/// Single stopping problem cost with p frozen: running cost on [t, tau] plus
/// discounted psi(y(tau), tau).
double evaluate_stopping_cost(const Scenario& s, const Point& x, double t, MemoryState p,
                              const ControlSignal& alpha, double tau, const ObstacleFn& psi);

/// y(tau) and the running-cost integral on [t, tau] with p frozen.
StepResult advance(const Scenario& s, const Point& x, double t, MemoryState p,
                   const ControlSignal& alpha, double tau);

}  // namespace ovp
