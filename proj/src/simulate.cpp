#include "ovp/simulate.hpp"

#include <algorithm>
#include <cmath>

namespace ovp {

namespace {

double time_eps(const Scenario& s) { return 1e-12 * std::max(1.0, s.horizon); }

std::string join_event(EventKind kind, const std::string& detail) {
  switch (kind) {
    case EventKind::kTouch: return "touch:" + detail;
    case EventKind::kSwitch: return "switch:" + detail;
    case EventKind::kStop: return detail.empty() ? "stop" : "stop:" + detail;
  }
  return detail;
}

void push_row(Trajectory& tr, double t, const Point& y, MemoryState q, double running,
              double charges, std::string event = {}) {
  tr.rows.push_back({t, y, q, std::move(event), running, running + charges});
}

void push_event(Trajectory& tr, double t, EventKind kind, std::string detail, const Point& y,
                MemoryState q, double running, double charges) {
  push_row(tr, t, y, q, running, charges, join_event(kind, detail));
  tr.events.push_back({t, kind, std::move(detail)});
}

/// Integrates y and the running cost from `from` to `to` with frozen memory;
/// steps end at control breakpoints and at `to`.
template <typename OnStep>
void run_segment(const Scenario& s, const ControlSignal& alpha, MemoryState q, double origin,
                 double from, double to, Point& y, double& integral, OnStep&& on_step) {
  const double eps = time_eps(s);
  double time = from;
  while (to - time > eps) {
    const std::size_t k = alpha.index_at(time);
    double brk = alpha.t0 + alpha.dt * static_cast<double>(k + 1);
    if (k + 1 >= alpha.samples.size()) brk = std::max(brk, to);
    const double next = std::min(brk, to);
    StepResult r = euler_step(s, y, alpha.samples[k], q, time, next - time, origin);
    y = std::move(r.y);
    integral += r.increment;
    time = next;
    on_step(time);
  }
}

double switching_core(const Scenario& s, const Point& x, double t, MemoryState p,
                      const HybridControlString& u, double cutoff, Trajectory* trace) {
  check_control_string(s, t, p, u);
  const MemoryState final_state = s.final_state();
  Point y = x;
  MemoryState q = p;
  double prev = t;
  double total = 0.0;
  double running = 0.0;
  double charges = 0.0;
  if (trace) push_row(*trace, t, y, q, 0.0, 0.0);
  for (std::size_t i = 0; i < u.m(); ++i) {
    const double ti = u.switch_times[i];
    double seg = 0.0;
    run_segment(s, u.alpha, q, t, prev, ti, y, seg, [&](double time) {
      if (trace) push_row(*trace, time, y, q, running + seg, charges);
    });
    running += seg;
    total += seg;
    if (total > cutoff) return std::numeric_limits<double>::infinity();
    const MemoryState dest = u.destination(i, final_state);
    const double charge = std::exp(-s.discount * (ti - t)) * eval_switch_cost(s, y, q, dest);
    total += charge;
    if (total > cutoff) return std::numeric_limits<double>::infinity();
    charges += charge;
    if (trace) {
      trace->ledger.charges.push_back({ti, q, dest, charge});
      push_event(*trace, ti, EventKind::kSwitch, q.to_string() + "->" + dest.to_string(), y,
                 dest, running, charges);
    }
    q = dest;
    prev = ti;
  }
  if (trace) trace->ledger.running = running;
  return total;
}

}  // namespace

ControlSignal ControlSignal::constant(double t0, double horizon, double dt, const Control& a) {
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((horizon - t0) / dt - 1e-9)));
  return {t0, dt, std::vector<Control>(n, a)};
}

std::size_t ControlSignal::index_at(double s) const {
  if (samples.empty()) throw std::logic_error("empty control signal");
  double u = (s - t0) / dt;
  if (const double r = std::round(u); std::abs(u - r) < 1e-9) u = r;
  if (u <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(std::floor(u)), samples.size() - 1);
}

double CostLedger::total() const {
  double t = running;
  for (const auto& c : charges) t += c.amount;
  return t;
}

StepResult euler_step(const Scenario& s, std::span<const double> y, const Control& a,
                      MemoryState q, double time, double h, double origin) {
  StepResult r;
  r.y.assign(y.begin(), y.end());
  Point f(y.size());
  eval_dynamics_into(s, y, a, q, f);
  for (std::size_t i = 0; i < y.size(); ++i) r.y[i] += h * f[i];
  const double l0 = eval_running_cost(s, y, a, q, time);
  const double l1 = eval_running_cost(s, r.y, a, q, time + h);
  const double w0 = std::exp(-s.discount * (time - origin));
  const double w1 = std::exp(-s.discount * (time + h - origin));
  r.increment = 0.5 * h * (w0 * l0 + w1 * l1);
  return r;
}

Trajectory simulate_auto(const Scenario& s, const Point& x, double t, MemoryState p,
                         const ControlSignal& alpha) {
  const double eps = time_eps(s);
  Trajectory tr;
  Point y = x;
  MemoryState q = p;
  double time = t;
  double running = 0.0;
  while (true) {
    push_row(tr, time, y, q, running, 0.0);
    for (int j = 0; j < s.num_targets(); ++j) {
      if (!q.has(j) && inside_target(s, y, j)) {
        q = q.with(j);
        push_event(tr, time, EventKind::kTouch, std::to_string(j + 1), y, q, running, 0.0);
      }
    }
    if (q.is_final()) {
      push_event(tr, time, EventKind::kStop, "all targets visited", y, q, running, 0.0);
      break;
    }
    if (s.horizon - time <= eps) break;
    const std::size_t k = alpha.index_at(time);
    double brk = alpha.t0 + alpha.dt * static_cast<double>(k + 1);
    if (k + 1 >= alpha.samples.size()) brk = std::max(brk, s.horizon);
    const double next = std::min(brk, s.horizon);
    StepResult r = euler_step(s, y, alpha.samples[k], q, time, next - time, t);
    y = std::move(r.y);
    running += r.increment;
    time = next;
  }
  tr.ledger.running = running;
  return tr;
}

void check_control_string(const Scenario& s, double t, MemoryState p,
                          const HybridControlString& u) {
  const double eps = time_eps(s);
  if (p.n != s.num_targets()) throw IllegalControl("memory state size differs from N");
  if (p.is_final()) throw IllegalControl("no switches are admissible from the final state");
  const std::size_t m = u.m();
  if (m < 1) throw IllegalControl("at least one switch is required");
  if (m > static_cast<std::size_t>(p.zeros())) {
    throw IllegalControl("too many switches: " + std::to_string(m) + " > " +
                         std::to_string(p.zeros()));
  }
  if (u.destinations.size() + 1 != m) {
    throw IllegalControl("need exactly m-1 intermediate destinations");
  }
  if (u.alpha.samples.empty() || u.alpha.dt <= 0.0) throw IllegalControl("empty control signal");
  if (u.alpha.t0 > t + eps) throw IllegalControl("control signal starts after t");
  double prev = t;
  for (double ti : u.switch_times) {
    if (ti < prev - eps) throw IllegalControl("switch times must be nondecreasing from t");
    prev = ti;
  }
  if (prev > s.horizon + eps) throw IllegalControl("switch time after the horizon");
  MemoryState q = p;
  for (std::size_t i = 0; i < m; ++i) {
    const MemoryState next = u.destination(i, s.final_state());
    if (!is_successor(q, next)) {
      throw IllegalControl("illegal switch " + q.to_string() + " -> " + next.to_string());
    }
    q = next;
  }
  for (const auto& a : u.alpha.samples) {
    if (static_cast<int>(a.size()) != s.dim) throw IllegalControl("control dimension mismatch");
  }
}

double evaluate_switching_cost(const Scenario& s, const Point& x, double t, MemoryState p,
                               const HybridControlString& u, double cutoff) {
  return switching_core(s, x, t, p, u, cutoff, nullptr);
}

Trajectory simulate_switching(const Scenario& s, const Point& x, double t, MemoryState p,
                              const HybridControlString& u) {
  Trajectory tr;
  switching_core(s, x, t, p, u, std::numeric_limits<double>::infinity(), &tr);
  return tr;
}

StepResult advance(const Scenario& s, const Point& x, double t, MemoryState p,
                   const ControlSignal& alpha, double tau) {
  const double eps = time_eps(s);
  if (tau < t - eps || tau > s.horizon + eps) {
    throw std::out_of_range("stopping time outside [t, T]");
  }
  StepResult r{x, 0.0};
  run_segment(s, alpha, p, t, t, tau, r.y, r.increment, [](double) {});
  return r;
}

double evaluate_stopping_cost(const Scenario& s, const Point& x, double t, MemoryState p,
                              const ControlSignal& alpha, double tau, const ObstacleFn& psi) {
  const StepResult r = advance(s, x, t, p, alpha, tau);
  return r.increment + std::exp(-s.discount * (tau - t)) * psi(r.y, tau);
}

}  // namespace ovp
