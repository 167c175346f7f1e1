#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "ovp/memory.hpp"
#include "ovp/scenario.hpp"

namespace ovp {

/// Tensor grid on the computational box times a uniform time grid on [0,T].
/// Node linear index: dimension 0 varies fastest.
class SpaceTimeGrid {
 public:
  SpaceTimeGrid() = default;
  SpaceTimeGrid(Point lo, Point hi, std::vector<int> nodes_per_dim, int time_steps,
                double horizon);

  /// Grid on the scenario's box with the same node count in every dimension.
  static SpaceTimeGrid for_scenario(const Scenario& s, int nodes, int time_steps);

  int dim() const { return static_cast<int>(lo_.size()); }
  const Point& lo() const { return lo_; }
  const Point& hi() const { return hi_; }
  const std::vector<int>& nodes_per_dim() const { return nodes_; }
  const Point& spacing() const { return dx_; }
  double min_spacing() const;
  double max_spacing() const;
  int time_steps() const { return steps_; }
  double horizon() const { return horizon_; }
  double dt() const { return horizon_ / steps_; }
  double time(int k) const { return k == steps_ ? horizon_ : k * dt(); }
  std::size_t num_nodes() const { return num_nodes_; }

  void node_point(std::size_t index, std::span<double> out) const;
  Point node_point(std::size_t index) const;

  /// Multilinear interpolation of one spatial slice at x (clamped to the box).
  double interpolate_slice(std::span<const double> slice, std::span<const double> x) const;

  /// Corner nodes and weights of the cell containing clamped x.
  struct Stencil {
    int count = 0;
    std::array<std::size_t, 1u << kMaxDim> nodes{};
    std::array<double, 1u << kMaxDim> weights{};
  };
  Stencil stencil(std::span<const double> x) const;

  /// Time slice index k and weight w such that t = (1-w) t_k + w t_{k+1}.
  std::pair<int, double> time_bracket(double t) const;

  friend bool operator==(const SpaceTimeGrid&, const SpaceTimeGrid&) = default;

 private:
  Point lo_, hi_, dx_;
  std::vector<int> nodes_;
  std::vector<std::size_t> strides_;
  int steps_ = 1;
  double horizon_ = 1.0;
  std::size_t num_nodes_ = 0;
};

/// W_p sampled on every node of every time slice.
struct ValueField {
  MemoryState p;
  SpaceTimeGrid grid;
  std::vector<double> values;  // (K+1) * num_nodes, slice-major

  ValueField() = default;
  ValueField(MemoryState state, SpaceTimeGrid g)
      : p(state), grid(std::move(g)),
        values((static_cast<std::size_t>(grid.time_steps()) + 1) * grid.num_nodes(), 0.0) {}

  std::span<double> slice(int k) {
    return {values.data() + static_cast<std::size_t>(k) * grid.num_nodes(), grid.num_nodes()};
  }
  std::span<const double> slice(int k) const {
    return {values.data() + static_cast<std::size_t>(k) * grid.num_nodes(), grid.num_nodes()};
  }
  double at(int k, std::size_t node) const {
    return values[static_cast<std::size_t>(k) * grid.num_nodes() + node];
  }
};

/// Multilinear in space on the clamped point, linear in time between slices.
double interpolate(const ValueField& field, std::span<const double> x, double t);

}  // namespace ovp
