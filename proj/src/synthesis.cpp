#include "ovp/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ovp {

namespace {

double time_eps(const Scenario& s) { return 1e-12 * std::max(1.0, s.horizon); }

MemoryState best_destination(const SolveArtifacts& art, const Scenario& s, const Point& x,
                             double t, MemoryState p) {
  double best = std::numeric_limits<double>::infinity();
  MemoryState arg = s.final_state();
  for (const MemoryState q : successors(p)) {
    const double w = q.is_final() ? 0.0 : interpolate(art.field(q), x, t);
    const double v = eval_switch_cost(s, x, p, q) + w;
    if (v < best) {
      best = v;
      arg = q;
    }
  }
  return arg;
}

}  // namespace

double default_sim_dt(const Scenario& s, const SpaceTimeGrid& grid) {
  const double m = validate(s).dynamics_bound;
  if (m <= 0.0) return grid.dt();
  return grid.min_spacing() / (2.0 * m);
}

Decision feedback_policy(const SolveArtifacts& art, const Scenario& s, const Point& x, double t,
                         MemoryState p, const PolicyOptions& options) {
  if (p.is_final()) throw NoDecision("no decision at the final state " + p.to_string());
  const ValueField& w = art.field(p);
  Decision dec;
  dec.margin = interpolate_obstacle(art, s, p, x, t) - interpolate(w, x, t);
  if (s.horizon - t <= time_eps(s) || dec.margin <= options.stop_tol) {
    dec.kind = Decision::Kind::kSwitch;
    dec.next = best_destination(art, s, x, t, p);
    return dec;
  }
  // Argmin of the semi-Lagrangian operand at (x, t) with the solver step.
  const double dt = std::min(art.grid.dt(), s.horizon - t);
  const double decay = std::exp(-s.discount * dt);
  Point f(x.size()), foot(x.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < s.controls.size(); ++a) {
    eval_dynamics_into(s, x, s.controls[a], p, f);
    for (std::size_t i = 0; i < x.size(); ++i) foot[i] = x[i] + dt * f[i];
    const double v = dt * eval_running_cost(s, x, s.controls[a], p, t) +
                     decay * interpolate(w, foot, t + dt);
    if (v < best) {
      best = v;
      dec.control = a;
    }
  }
  dec.kind = Decision::Kind::kContinue;
  return dec;
}

VisitingPlan synthesize_trajectory(const SolveArtifacts& art, const Scenario& s, const Point& x0,
                                   double t0, MemoryState p0, const PolicyOptions& options) {
  const double eps = time_eps(s);
  const double dt = options.sim_dt > 0.0 ? options.sim_dt : default_sim_dt(s, art.grid);
  VisitingPlan plan;
  plan.x0 = x0;
  plan.t0 = t0;
  plan.p0 = p0;
  if (p0.is_final()) return plan;
  plan.predicted_cost = interpolate(art.field(p0), x0, t0);

  Point y = x0;
  MemoryState p = p0;
  double t = t0;
  std::size_t step = 0;
  std::vector<Control> samples;
  std::vector<double> times;
  std::vector<MemoryState> dests;
  while (!p.is_final()) {
    const Decision dec = feedback_policy(art, s, y, t, p, options);
    if (dec.kind == Decision::Kind::kSwitch) {
      const double charge = std::exp(-s.discount * (t - t0)) * eval_switch_cost(s, y, p, dec.next);
      plan.switches.push_back({t, p, dec.next, y, charge});
      times.push_back(t);
      dests.push_back(dec.next);
      p = dec.next;
      continue;
    }
    const double next_t = std::min(t0 + dt * static_cast<double>(step + 1), s.horizon);
    const Control& a = s.controls[dec.control];
    y = euler_step(s, y, a, p, t, next_t - t, t0).y;
    samples.push_back(a);
    t = next_t;
    ++step;
    if (s.horizon - t <= eps) t = s.horizon;
  }

  // Controls after the last switch do not affect the cost; pad to cover [t0, T].
  const Control zero(static_cast<std::size_t>(s.dim), 0.0);
  while (t0 + dt * static_cast<double>(samples.size()) < s.horizon - eps || samples.empty()) {
    samples.push_back(zero);
  }
  dests.pop_back();
  plan.control = {{t0, dt, std::move(samples)}, std::move(times), std::move(dests)};
  plan.trajectory = simulate_switching(s, x0, t0, p0, plan.control);
  plan.achieved_cost = evaluate_switching_cost(s, x0, t0, p0, plan.control);
  return plan;
}

PlanReport verify_plan(const VisitingPlan& plan) {
  PlanReport r;
  const double eps = 1e-12;
  r.gap = (plan.achieved_cost - plan.predicted_cost) / std::max(plan.predicted_cost, eps);

  MemoryState q = plan.p0;
  double last_t = plan.t0;
  for (const auto& sw : plan.switches) {
    if (sw.from != q || !is_successor(sw.from, sw.to)) {
      r.chain_legal = false;
      r.violations.push_back("illegal switch " + sw.from.to_string() + " -> " + sw.to.to_string());
    }
    if (sw.t < last_t) {
      r.chain_legal = false;
      r.violations.push_back("switch times decrease");
    }
    last_t = sw.t;
    q = sw.to;
  }
  if (!plan.p0.is_final() && !q.is_final()) {
    r.chain_legal = false;
    r.violations.push_back("switch chain does not end at the final state");
  }
  for (std::size_t i = 1; i < plan.trajectory.rows.size(); ++i) {
    const auto prev = plan.trajectory.rows[i - 1].memory.bits;
    const auto cur = plan.trajectory.rows[i].memory.bits;
    if ((prev & cur) != prev) {
      r.memory_monotone = false;
      r.violations.push_back("memory bit unset along the trajectory");
      break;
    }
  }
  if (plan.achieved_cost < 0.0) r.violations.push_back("negative achieved cost");
  return r;
}

}  // namespace ovp
