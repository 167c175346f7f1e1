#include "ovp/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "parallel.hpp"

namespace ovp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_not_final(MemoryState p) {
  if (p.is_final()) throw std::invalid_argument("the final state has no obstacle");
}

/// Finite-difference residual of -u_t + lambda u + H(Du) off the contact set.
void residual_stats(const Scenario& s, const ValueField& w, const std::vector<double>& contact,
                    LevelDiagnostics& diag) {
  const auto& g = w.grid;
  const int d = g.dim();
  const auto& nodes = g.nodes_per_dim();
  double max_r = 0.0, sum_r = 0.0;
  std::size_t count = 0;
  Point x(static_cast<std::size_t>(d)), xi(static_cast<std::size_t>(d));
  std::size_t stride0 = 1;
  std::vector<std::size_t> strides;
  for (int i = 0; i < d; ++i) {
    strides.push_back(stride0);
    stride0 *= static_cast<std::size_t>(nodes[static_cast<std::size_t>(i)]);
  }
  for (int k = 0; k < g.time_steps(); ++k) {
    const auto now = w.slice(k);
    const auto next = w.slice(k + 1);
    for (std::size_t node = 0; node < g.num_nodes(); ++node) {
      if (contact[static_cast<std::size_t>(k) * g.num_nodes() + node] != 0.0) continue;
      bool interior = true;
      std::size_t rem = node;
      for (int i = 0; i < d && interior; ++i) {
        const auto c = rem % static_cast<std::size_t>(nodes[static_cast<std::size_t>(i)]);
        rem /= static_cast<std::size_t>(nodes[static_cast<std::size_t>(i)]);
        interior = c > 0 && c + 1 < static_cast<std::size_t>(nodes[static_cast<std::size_t>(i)]);
      }
      if (!interior) continue;
      g.node_point(node, x);
      for (int i = 0; i < d; ++i) {
        const auto st = strides[static_cast<std::size_t>(i)];
        xi[static_cast<std::size_t>(i)] =
            (now[node + st] - now[node - st]) / (2.0 * g.spacing()[static_cast<std::size_t>(i)]);
      }
      const double ut = (next[node] - now[node]) / g.dt();
      const double r =
          std::abs(-ut + s.discount * now[node] + hamiltonian(s, w.p, x, g.time(k), xi));
      max_r = std::max(max_r, r);
      sum_r += r;
      ++count;
    }
  }
  diag.residual_max = max_r;
  diag.residual_mean = count ? sum_r / static_cast<double>(count) : 0.0;
}

}  // namespace

const ValueField& SolveArtifacts::field(MemoryState p) const {
  if (!has(p)) {
    throw OrderingError("value field for state " + p.to_string() + " is not available");
  }
  return *fields[p.bits];
}

double SolveArtifacts::max_contact_fraction() const {
  double m = 0.0;
  for (const auto& d : diagnostics) m = std::max(m, d.contact_fraction);
  return m;
}

std::size_t field_memory_bytes(const SpaceTimeGrid& grid, int num_targets) {
  return (std::size_t{1} << num_targets) * (static_cast<std::size_t>(grid.time_steps()) + 1) *
         grid.num_nodes() * sizeof(double);
}

double obstacle_psi(const SolveArtifacts& art, const Scenario& s, MemoryState p,
                    std::span<const double> x, double t) {
  require_not_final(p);
  double best = kInf;
  for (const MemoryState q : successors(p)) {
    const double w = q.is_final() ? 0.0 : interpolate(art.field(q), x, t);
    best = std::min(best, eval_switch_cost(s, x, p, q) + w);
  }
  return best;
}

double obstacle_at_node(const SolveArtifacts& art, const Scenario& s, MemoryState p, int k,
                        std::size_t node) {
  require_not_final(p);
  const Point x = art.grid.node_point(node);
  double best = kInf;
  for (const MemoryState q : successors(p)) {
    const double w = q.is_final() ? 0.0 : art.field(q).at(k, node);
    best = std::min(best, eval_switch_cost(s, x, p, q) + w);
  }
  return best;
}

std::vector<double> obstacle_slice(const SolveArtifacts& art, const Scenario& s, MemoryState p,
                                   int k) {
  require_not_final(p);
  const auto& g = art.grid;
  const auto succ = successors(p);
  std::vector<const ValueField*> lower;
  for (const MemoryState q : succ) lower.push_back(q.is_final() ? nullptr : &art.field(q));
  std::vector<double> out(g.num_nodes());
  Point x(static_cast<std::size_t>(g.dim()));
  for (std::size_t node = 0; node < g.num_nodes(); ++node) {
    g.node_point(node, x);
    double best = kInf;
    for (std::size_t i = 0; i < succ.size(); ++i) {
      const double w = lower[i] ? lower[i]->at(k, node) : 0.0;
      best = std::min(best, eval_switch_cost(s, x, p, succ[i]) + w);
    }
    out[node] = best;
  }
  return out;
}

double interpolate_obstacle(const SolveArtifacts& art, const Scenario& s, MemoryState p,
                            std::span<const double> x, double t) {
  const auto& g = art.grid;
  const auto st = g.stencil(x);
  const auto [k, wt] = g.time_bracket(t);
  auto at_slice = [&](int kk) {
    double v = 0.0;
    for (int c = 0; c < st.count; ++c) {
      const double w = st.weights[static_cast<std::size_t>(c)];
      if (w != 0.0) v += w * obstacle_at_node(art, s, p, kk, st.nodes[static_cast<std::size_t>(c)]);
    }
    return v;
  };
  const double v0 = at_slice(k);
  if (wt == 0.0) return v0;
  return (1.0 - wt) * v0 + wt * at_slice(k + 1);
}

std::pair<double, std::size_t> best_continuation(const Scenario& s, const SpaceTimeGrid& grid,
                                                 std::span<const double> next,
                                                 std::span<const double> x, MemoryState p,
                                                 double t, double dt) {
  const double decay = std::exp(-s.discount * dt);
  const std::size_t d = x.size();
  std::array<double, kMaxDim> f{};
  std::array<double, kMaxDim> foot{};
  double best = kInf;
  std::size_t arg = 0;
  for (std::size_t a = 0; a < s.controls.size(); ++a) {
    const Control& ctrl = s.controls[a];
    eval_dynamics_into(s, x, ctrl, p, std::span<double>(f.data(), d));
    for (std::size_t i = 0; i < d; ++i) foot[i] = x[i] + dt * f[i];
    const double cand = dt * eval_running_cost(s, x, ctrl, p, t) +
                        decay * grid.interpolate_slice(next, std::span<const double>(foot.data(), d));
    if (cand < best) {
      best = cand;
      arg = a;
    }
  }
  return {best, arg};
}

void sl_step(std::span<const double> next, std::span<const double> obstacle, const Scenario& s,
             const SpaceTimeGrid& grid, MemoryState p, int k, std::span<double> out,
             int threads) {
  const double t = grid.time(k);
  const double dt = grid.time(k + 1) - t;
  detail::parallel_for(grid.num_nodes(), threads, [&](std::size_t begin, std::size_t end) {
    Point x(static_cast<std::size_t>(grid.dim()));
    for (std::size_t node = begin; node < end; ++node) {
      const double psi = obstacle[node];
      if (psi <= 0.0) {
        out[node] = psi;  // costs are nonnegative, nothing beats stopping
        continue;
      }
      grid.node_point(node, x);
      const double cont = best_continuation(s, grid, next, x, p, t, dt).first;
      out[node] = psi <= cont ? psi : cont;
    }
  });
}

ValueField solve_level(const Scenario& s, const SpaceTimeGrid& grid, MemoryState p,
                       const SolveArtifacts& lower, const SolveOptions& options,
                       LevelDiagnostics* diagnostics) {
  const auto start = std::chrono::steady_clock::now();
  ValueField w(p, grid);
  LevelDiagnostics diag;
  diag.p = p;
  diag.level = p.zeros();
  if (!p.is_final()) {
    const int K = grid.time_steps();
    std::vector<double> contact(w.values.size(), 0.0);
    auto mark_contact = [&](int k, const std::vector<double>& psi) {
      const auto sl = w.slice(k);
      for (std::size_t i = 0; i < psi.size(); ++i) {
        if (sl[i] == psi[i]) contact[static_cast<std::size_t>(k) * grid.num_nodes() + i] = 1.0;
      }
    };
    std::vector<double> psi = obstacle_slice(lower, s, p, K);
    std::copy(psi.begin(), psi.end(), w.slice(K).begin());
    mark_contact(K, psi);
    for (int k = K - 1; k >= 0; --k) {
      psi = obstacle_slice(lower, s, p, k);
      sl_step(w.slice(k + 1), psi, s, grid, p, k, w.slice(k), options.threads);
      mark_contact(k, psi);
    }
    std::size_t hits = 0;
    for (double c : contact) hits += c != 0.0;
    diag.contact_fraction = static_cast<double>(hits) / static_cast<double>(contact.size());
    if (options.residuals) residual_stats(s, w, contact, diag);
  } else {
    diag.contact_fraction = 1.0;
  }
  diag.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (diagnostics) *diagnostics = diag;
  return w;
}

SolveArtifacts solve_all(const Scenario& s, const SpaceTimeGrid& grid, const SolveOptions& options) {
  const int n = s.num_targets();
  const std::size_t need = field_memory_bytes(grid, n);
  if (need > options.memory_cap_bytes) {
    throw ResourceError("solve needs " + std::to_string(need) + " bytes of field storage, cap is " +
                        std::to_string(options.memory_cap_bytes));
  }
  SolveArtifacts art(grid, n);
  for (const auto& level : backward_levels(n).levels) {
    for (const MemoryState p : level) {
      LevelDiagnostics diag;
      art.fields[p.bits] = solve_level(s, grid, p, art, options, &diag);
      art.diagnostics.push_back(diag);
    }
  }
  return art;
}

double hamiltonian(const Scenario& s, MemoryState p, std::span<const double> x, double t,
                   std::span<const double> xi) {
  double best = -kInf;
  Point f(x.size());
  for (const auto& a : s.controls) {
    eval_dynamics_into(s, x, a, p, f);
    double dot = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) dot += f[i] * xi[i];
    best = std::max(best, -dot - eval_running_cost(s, x, a, p, t));
  }
  return best;
}

}  // namespace ovp
