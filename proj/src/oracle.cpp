#include "ovp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <random>
#include <tuple>

#include "ovp/simulate.hpp"

namespace ovp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SwitchStructure {
  std::vector<int> times;  // oracle time indices, nondecreasing
  std::vector<MemoryState> chain;
};

void chains_from(MemoryState p, std::vector<MemoryState>& prefix,
                 std::vector<std::vector<MemoryState>>& out) {
  for (const MemoryState q : successors(p)) {
    prefix.push_back(q);
    if (q.is_final()) {
      out.push_back(prefix);
    } else {
      chains_from(q, prefix, out);
    }
    prefix.pop_back();
  }
}

void time_tuples(int first, int last, std::size_t m, std::vector<int>& prefix,
                 std::vector<std::vector<int>>& out) {
  if (prefix.size() == m) {
    out.push_back(prefix);
    return;
  }
  const int from = prefix.empty() ? first : prefix.back();
  for (int k = from; k <= last; ++k) {
    prefix.push_back(k);
    time_tuples(first, last, m, prefix, out);
    prefix.pop_back();
  }
}

std::vector<SwitchStructure> structures(int k0, int steps, MemoryState p) {
  std::vector<std::vector<MemoryState>> chains;
  std::vector<MemoryState> prefix;
  chains_from(p, prefix, chains);
  std::vector<SwitchStructure> out;
  for (const auto& chain : chains) {
    std::vector<std::vector<int>> tuples;
    std::vector<int> tp;
    time_tuples(k0, steps, chain.size(), tp, tuples);
    for (auto& times : tuples) out.push_back({std::move(times), chain});
  }
  return out;
}

std::uint64_t ipow(std::uint64_t base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (r > std::numeric_limits<std::uint64_t>::max() / std::max<std::uint64_t>(base, 1)) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    r *= base;
  }
  return r;
}

class Cascade {
 public:
  explicit Cascade(const CoarseInstance& ci) : ci_(ci) {}

  double value(const Point& x, int k, MemoryState p) {
    if (p.is_final()) return 0.0;
    const auto key = std::make_tuple(p.bits, k, x);
    if (const auto it = memo_.find(key); it != memo_.end()) return it->second;
    double best = kInf;
    explore(x, k, k, p, 0.0, best);
    memo_.emplace(key, best);
    return best;
  }

 private:
  void explore(const Point& y, int k, int start, MemoryState p, double running, double& best) {
    const Scenario& s = ci_.scenario;
    const double decay = std::exp(-s.discount * (ci_.time(k) - ci_.time(start)));
    for (const MemoryState q : successors(p)) {
      const double stop = eval_switch_cost(s, y, p, q) + value(y, k, q);
      best = std::min(best, running + decay * stop);
    }
    if (k == ci_.steps) return;
    const double h = ci_.time(k + 1) - ci_.time(k);
    for (const auto& a : s.controls) {
      const StepResult r = euler_step(s, y, a, p, ci_.time(k), h, ci_.time(start));
      explore(r.y, k + 1, start, p, running + r.increment, best);
    }
  }

  const CoarseInstance& ci_;
  std::map<std::tuple<std::uint32_t, int, Point>, double> memo_;
};

}  // namespace

CoarseInstance CoarseInstance::make(Scenario s, int steps, std::uint64_t budget) {
  if (s.dim > 2) throw std::invalid_argument("coarse instance: dimension must be <= 2");
  if (s.num_targets() > 2) throw std::invalid_argument("coarse instance: at most 2 targets");
  if (s.controls.size() > 5) throw std::invalid_argument("coarse instance: at most 5 controls");
  if (steps < 1 || steps > 10) throw std::invalid_argument("coarse instance: 1..10 time steps");
  return {std::move(s), steps, budget};
}

int CoarseInstance::index_of(double t) const {
  const double u = t / dt();
  const double r = std::round(u);
  if (std::abs(u - r) > 1e-9 || r < 0 || r > steps) {
    throw std::invalid_argument("time " + std::to_string(t) + " is not on the oracle grid");
  }
  return static_cast<int>(r);
}

std::uint64_t count_strings(const CoarseInstance& ci, int k, MemoryState p) {
  if (p.is_final()) return 1;
  const std::uint64_t sequences = ipow(ci.scenario.controls.size(), ci.steps - k);
  const std::uint64_t shapes = structures(k, ci.steps, p).size();
  if (shapes != 0 && sequences > std::numeric_limits<std::uint64_t>::max() / shapes) {
    return std::numeric_limits<std::uint64_t>::max();
  }
  return sequences * shapes;
}

double brute_force_value(const CoarseInstance& ci, const Point& x, double t, MemoryState p,
                         const OracleOptions& options) {
  const int k0 = ci.index_of(t);
  if (p.is_final()) return 0.0;
  const std::uint64_t total = count_strings(ci, k0, p);
  if (total > ci.budget) {
    throw BudgetExceeded("oracle enumeration of " + std::to_string(total) +
                         " strings exceeds the budget of " + std::to_string(ci.budget));
  }
  const Scenario& s = ci.scenario;
  const auto shapes = structures(k0, ci.steps, p);
  const int length = ci.steps - k0;
  const std::size_t na = s.controls.size();

  // Controls outermost (odometer over the first control is the work
  // partition), switch structures innermost.
  auto search = [&](std::size_t first) {
    std::vector<HybridControlString> strings;
    for (const auto& sh : shapes) {
      HybridControlString u;
      u.alpha = {ci.time(k0), ci.dt(),
                 std::vector<Control>(static_cast<std::size_t>(std::max(length, 1)),
                                      s.controls[first])};
      for (int idx : sh.times) u.switch_times.push_back(ci.time(idx));
      u.destinations.assign(sh.chain.begin(), sh.chain.end() - 1);
      strings.push_back(std::move(u));
    }
    std::vector<std::size_t> digits(static_cast<std::size_t>(std::max(length, 1)), 0);
    digits[0] = first;
    double best = kInf;
    while (true) {
      for (auto& u : strings) {
        for (std::size_t i = 0; i < digits.size(); ++i) u.alpha.samples[i] = s.controls[digits[i]];
        const double v = evaluate_switching_cost(s, x, t, p, u, options.prune ? best : kInf);
        best = std::min(best, v);
      }
      std::size_t pos = 1;
      while (pos < digits.size() && ++digits[pos] == na) digits[pos++] = 0;
      if (pos >= digits.size()) break;
    }
    return best;
  };

  // With no time left only the first control slot exists and it is irrelevant.
  const std::size_t partitions = length == 0 ? 1 : na;
  double best = kInf;
  if (options.threads <= 1) {
    for (std::size_t f = 0; f < partitions; ++f) best = std::min(best, search(f));
  } else {
    std::vector<std::future<double>> jobs;
    for (std::size_t f = 0; f < partitions; ++f) jobs.push_back(std::async(std::launch::async, search, f));
    for (auto& j : jobs) best = std::min(best, j.get());
  }
  return best;
}

double brute_force_cascade(const CoarseInstance& ci, const Point& x, double t, MemoryState p) {
  const int k0 = ci.index_of(t);
  const std::uint64_t total = count_strings(ci, k0, p);
  if (total > ci.budget) {
    throw BudgetExceeded("oracle enumeration of " + std::to_string(total) +
                         " strings exceeds the budget of " + std::to_string(ci.budget));
  }
  Cascade cascade(ci);
  return cascade.value(x, k0, p);
}

double max_obstacle_violation(const SolveArtifacts& art, const Scenario& s) {
  double worst = -kInf;
  for (std::uint32_t mask = 0; mask < art.fields.size(); ++mask) {
    const MemoryState p{mask, art.n};
    if (p.is_final()) continue;
    const ValueField& w = art.field(p);
    for (int k = 0; k <= art.grid.time_steps(); ++k) {
      const auto psi = obstacle_slice(art, s, p, k);
      const auto sl = w.slice(k);
      for (std::size_t i = 0; i < psi.size(); ++i) worst = std::max(worst, sl[i] - psi[i]);
    }
  }
  return worst;
}

DppReport check_dpp(const SolveArtifacts& art, const Scenario& s, int samples, double tol,
                    std::uint64_t seed) {
  DppReport r;
  r.tol = tol;
  r.samples = samples;
  r.obstacle_violation = max_obstacle_violation(art, s);

  std::mt19937_64 rng(seed);
  const auto& g = art.grid;
  const int K = g.time_steps();
  std::vector<MemoryState> states;
  for (std::uint32_t mask = 0; mask < art.fields.size(); ++mask) {
    if (!MemoryState{mask, art.n}.is_final()) states.push_back({mask, art.n});
  }
  std::uniform_int_distribution<std::size_t> pick_state(0, states.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_control(0, s.controls.size() - 1);
  std::uniform_int_distribution<int> pick_k(0, K - 1);
  r.dpp_violation = -kInf;
  for (int i = 0; i < samples; ++i) {
    const MemoryState p = states[pick_state(rng)];
    Point x(static_cast<std::size_t>(g.dim()));
    for (int d = 0; d < g.dim(); ++d) {
      std::uniform_real_distribution<double> u(g.lo()[d], g.hi()[d]);
      x[static_cast<std::size_t>(d)] = u(rng);
    }
    const int k = pick_k(rng);
    std::uniform_int_distribution<int> pick_j(0, K - k);
    const int j = pick_j(rng);
    const double t = g.time(k);
    const double t_end = g.time(k + j);
    ControlSignal alpha{t, g.dt(), {}};
    for (int m = 0; m < std::max(K - k, 1); ++m) alpha.samples.push_back(s.controls[pick_control(rng)]);

    const ValueField& w = art.field(p);
    const double lhs = interpolate(w, x, t);
    const double rhs = evaluate_stopping_cost(
        s, x, t, p, alpha, t_end,
        [&](std::span<const double> y, double tau) { return interpolate(w, y, tau); });
    const double v = lhs - rhs;
    r.dpp_violation = std::max(r.dpp_violation, v);
    if (v > tol) ++r.failures;
  }
  if (samples == 0) r.dpp_violation = 0.0;
  r.pass = r.obstacle_violation <= 1e-12 && r.failures == 0;
  return r;
}

std::vector<Probe> random_probes(const CoarseInstance& ci, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Scenario& s = ci.scenario;
  std::uniform_int_distribution<int> pick_k(0, ci.steps);
  std::uniform_int_distribution<std::uint32_t> pick_p(0, (1u << s.num_targets()) - 1);
  std::vector<Probe> out;
  for (int i = 0; i < count; ++i) {
    Probe pr;
    for (int d = 0; d < s.dim; ++d) {
      std::uniform_real_distribution<double> u(s.box_lo[d], s.box_hi[d]);
      pr.x.push_back(u(rng));
    }
    pr.t = ci.time(pick_k(rng));
    pr.p = {pick_p(rng), s.num_targets()};
    out.push_back(pr);
  }
  return out;
}

EquivalenceReport check_equivalence(const CoarseInstance& ci, const std::vector<Probe>& probes,
                                    const SolveArtifacts* art, double cascade_tol,
                                    double solver_tol, const OracleOptions& options) {
  EquivalenceReport rep;
  for (const auto& pr : probes) {
    ProbeResult res{pr, brute_force_value(ci, pr.x, pr.t, pr.p, options),
                    brute_force_cascade(ci, pr.x, pr.t, pr.p), std::nullopt};
    rep.max_cascade_gap = std::max(rep.max_cascade_gap, std::abs(res.brute - res.cascade));
    if (art) {
      res.solver = pr.p.is_final() ? 0.0 : interpolate(art->field(pr.p), pr.x, pr.t);
      rep.max_solver_gap = std::max(rep.max_solver_gap, std::abs(res.brute - *res.solver));
    }
    rep.results.push_back(std::move(res));
  }
  rep.pass = rep.max_cascade_gap <= cascade_tol && (!art || rep.max_solver_gap <= solver_tol);
  return rep;
}

}  // namespace ovp
