#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ovp/grid.hpp"
#include "ovp/memory.hpp"
#include "ovp/scenario.hpp"

namespace ovp {

/// A lower-level field was needed before it was solved.
class OrderingError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The requested solve would exceed the configured memory cap.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolveOptions {
  int threads = 1;
  std::size_t memory_cap_bytes = std::size_t{2} << 30;
  bool residuals = true;
};

struct LevelDiagnostics {
  MemoryState p;
  int level = 0;
  double seconds = 0.0;
  double contact_fraction = 0.0;  // share of space-time nodes with W == psi
  double residual_max = 0.0;      // |-u_t + lambda u + H| off the contact set
  double residual_mean = 0.0;
};

struct SolveArtifacts {
  SpaceTimeGrid grid;
  int n = 0;
  std::vector<std::optional<ValueField>> fields;  // indexed by mask
  std::vector<LevelDiagnostics> diagnostics;

  SolveArtifacts() = default;
  SolveArtifacts(SpaceTimeGrid g, int num_targets)
      : grid(std::move(g)), n(num_targets), fields(std::size_t{1} << num_targets) {}

  bool has(MemoryState p) const { return p.bits < fields.size() && fields[p.bits].has_value(); }
  /// Throws OrderingError when p has not been solved.
  const ValueField& field(MemoryState p) const;
  double max_contact_fraction() const;
};

/// Bytes needed to hold every field of a full solve.
std::size_t field_memory_bytes(const SpaceTimeGrid& grid, int num_targets);

/// psi_p(x,t) = min over p' in I_p of C(x,p,p') + W_{p'}(x,t).
double obstacle_psi(const SolveArtifacts& art, const Scenario& s, MemoryState p,
                    std::span<const double> x, double t);

/// psi_p at grid node `node` of slice k, from the stored lower fields.
double obstacle_at_node(const SolveArtifacts& art, const Scenario& s, MemoryState p, int k,
                        std::size_t node);

/// Full obstacle slice at time index k.
std::vector<double> obstacle_slice(const SolveArtifacts& art, const Scenario& s, MemoryState p,
                                   int k);

/// Nodal obstacle values interpolated with the same stencil as interpolate().
double interpolate_obstacle(const SolveArtifacts& art, const Scenario& s, MemoryState p,
                            std::span<const double> x, double t);

/// One backward semi-Lagrangian step:
///   W_k(x_i) = min(psi_k(x_i), min_a dt l(x_i,a,p,t_k) + e^{-lambda dt} W_{k+1}(x_i + dt f)).
/// Feet leaving the box are clamped. Ties go to the obstacle; among controls
/// the lowest index wins.
void sl_step(std::span<const double> next, std::span<const double> obstacle, const Scenario& s,
             const SpaceTimeGrid& grid, MemoryState p, int k, std::span<double> out,
             int threads = 1);

/// Continuation value min over controls at an arbitrary point, plus the
/// minimizing control index. Used by the solver and the feedback policy.
std::pair<double, std::size_t> best_continuation(const Scenario& s, const SpaceTimeGrid& grid,
                                                 std::span<const double> next,
                                                 std::span<const double> x, MemoryState p,
                                                 double t, double dt);

ValueField solve_level(const Scenario& s, const SpaceTimeGrid& grid, MemoryState p,
                       const SolveArtifacts& lower, const SolveOptions& options = {},
                       LevelDiagnostics* diagnostics = nullptr);

/// Solves every W_p backward over the lattice. Throws ResourceError when
/// the fields would exceed options.memory_cap_bytes.
SolveArtifacts solve_all(const Scenario& s, const SpaceTimeGrid& grid,
                         const SolveOptions& options = {});

/// H^p(x,t,xi) = max over the control set of -f(x,a,p).xi - l(x,a,p,t).
double hamiltonian(const Scenario& s, MemoryState p, std::span<const double> x, double t,
                   std::span<const double> xi);

}  // namespace ovp
