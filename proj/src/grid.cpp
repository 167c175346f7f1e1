#include "ovp/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ovp {

SpaceTimeGrid::SpaceTimeGrid(Point lo, Point hi, std::vector<int> nodes_per_dim,
                             int time_steps, double horizon)
    : lo_(std::move(lo)), hi_(std::move(hi)), nodes_(std::move(nodes_per_dim)),
      steps_(time_steps), horizon_(horizon) {
  if (lo_.size() != hi_.size() || lo_.size() != nodes_.size() || lo_.empty() ||
      static_cast<int>(lo_.size()) > kMaxDim) {
    throw std::invalid_argument("grid: inconsistent dimensions");
  }
  if (steps_ < 1) throw std::invalid_argument("grid: need at least one time step");
  if (!(horizon_ > 0.0)) throw std::invalid_argument("grid: horizon must be > 0");
  num_nodes_ = 1;
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (nodes_[i] < 2) throw std::invalid_argument("grid: need at least 2 nodes per dimension");
    if (!(lo_[i] < hi_[i])) throw std::invalid_argument("grid: empty box");
    dx_.push_back((hi_[i] - lo_[i]) / (nodes_[i] - 1));
    strides_.push_back(num_nodes_);
    num_nodes_ *= static_cast<std::size_t>(nodes_[i]);
  }
}

SpaceTimeGrid SpaceTimeGrid::for_scenario(const Scenario& s, int nodes, int time_steps) {
  return {s.box_lo, s.box_hi, std::vector<int>(static_cast<std::size_t>(s.dim), nodes),
          time_steps, s.horizon};
}

double SpaceTimeGrid::min_spacing() const { return *std::min_element(dx_.begin(), dx_.end()); }
double SpaceTimeGrid::max_spacing() const { return *std::max_element(dx_.begin(), dx_.end()); }

void SpaceTimeGrid::node_point(std::size_t index, std::span<double> out) const {
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    const std::size_t c = index % static_cast<std::size_t>(nodes_[i]);
    index /= static_cast<std::size_t>(nodes_[i]);
    // Last node pinned to hi exactly.
    out[i] = c + 1 == static_cast<std::size_t>(nodes_[i]) ? hi_[i] : lo_[i] + c * dx_[i];
  }
}

Point SpaceTimeGrid::node_point(std::size_t index) const {
  Point p(lo_.size());
  node_point(index, p);
  return p;
}

SpaceTimeGrid::Stencil SpaceTimeGrid::stencil(std::span<const double> x) const {
  const std::size_t d = lo_.size();
  std::array<std::size_t, kMaxDim> base{};
  std::array<double, kMaxDim> frac{};
  for (std::size_t i = 0; i < d; ++i) {
    double u = (std::clamp(x[i], lo_[i], hi_[i]) - lo_[i]) / dx_[i];
    // Snap round-off so node queries return stored values exactly.
    if (const double r = std::round(u); std::abs(u - r) < 1e-12 * std::max(1.0, r)) u = r;
    const int cells = nodes_[i] - 1;
    int c = static_cast<int>(std::floor(u));
    c = std::clamp(c, 0, cells - 1);
    base[i] = static_cast<std::size_t>(c);
    frac[i] = std::clamp(u - c, 0.0, 1.0);
  }
  Stencil st;
  st.count = 1 << d;
  for (int corner = 0; corner < st.count; ++corner) {
    std::size_t node = 0;
    double w = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      const bool up = (corner >> i) & 1;
      node += (base[i] + (up ? 1 : 0)) * strides_[i];
      w *= up ? frac[i] : 1.0 - frac[i];
    }
    st.nodes[static_cast<std::size_t>(corner)] = node;
    st.weights[static_cast<std::size_t>(corner)] = w;
  }
  return st;
}

double SpaceTimeGrid::interpolate_slice(std::span<const double> slice,
                                        std::span<const double> x) const {
  const Stencil st = stencil(x);
  double v = 0.0;
  for (int c = 0; c < st.count; ++c) {
    const double w = st.weights[static_cast<std::size_t>(c)];
    if (w != 0.0) v += w * slice[st.nodes[static_cast<std::size_t>(c)]];
  }
  return v;
}

std::pair<int, double> SpaceTimeGrid::time_bracket(double t) const {
  double u = std::clamp(t, 0.0, horizon_) / dt();
  if (const double r = std::round(u); std::abs(u - r) < 1e-12 * std::max(1.0, r)) u = r;
  int k = static_cast<int>(std::floor(u));
  if (k >= steps_) return {steps_, 0.0};
  const double w = std::clamp(u - k, 0.0, 1.0);
  return {k, w};
}

double interpolate(const ValueField& field, std::span<const double> x, double t) {
  const auto& g = field.grid;
  const auto [k, w] = g.time_bracket(t);
  const double v0 = g.interpolate_slice(field.slice(k), x);
  if (w == 0.0) return v0;
  const double v1 = g.interpolate_slice(field.slice(k + 1), x);
  return (1.0 - w) * v0 + w * v1;
}

}  // namespace ovp
