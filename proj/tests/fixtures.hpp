#pragma once

#include <string>

#include "ovp/scenario.hpp"

namespace ovp::testing {

/// One ball of radius 0.1 at the center of the unit square, speed 1, l = 1.
inline std::string eikonal_json(double discount = 0.0) {
  return R"({"dimension": 2,
    "targets": [{"shape": "ball", "center": [0.5, 0.5], "radius": 0.1}],
    "horizon": 1.0, "discount": )" +
         std::to_string(discount) + R"(,
    "dynamics": {"family": "velocity", "speed": 1.0},
    "running_cost": {"family": "constant", "c0": 1.0},
    "switch_cost": {"family": "distance_sum"},
    "controls": {"directions": 16},
    "box": {"lo": [0, 0], "hi": [1, 1]}})";
}

/// Two balls on the horizontal midline of the unit square.
inline std::string two_balls_json(double scale = 1.0) {
  return R"({"dimension": 2,
    "targets": [{"shape": "ball", "center": [0.25, 0.5], "radius": 0.1},
                {"shape": "ball", "center": [0.75, 0.5], "radius": 0.1}],
    "horizon": 1.0,
    "dynamics": {"family": "velocity", "speed": 1.0},
    "running_cost": {"family": "constant", "c0": 1.0},
    "switch_cost": {"family": "distance_sum", "scale": )" +
         std::to_string(scale) + R"(},
    "controls": {"directions": 16},
    "box": {"lo": [0, 0], "hi": [1, 1]}})";
}

/// The 1D two-interval instance used for oracle comparisons.
inline std::string coarse_1d_json(double horizon = 0.8) {
  return R"({"dimension": 1,
    "targets": [{"shape": "box", "lo": [0.2], "hi": [0.3]},
                {"shape": "box", "lo": [0.7], "hi": [0.8]}],
    "horizon": )" +
         std::to_string(horizon) + R"(,
    "dynamics": {"family": "velocity", "speed": 1.0},
    "running_cost": {"family": "constant", "c0": 1.0},
    "switch_cost": {"family": "distance_sum"},
    "controls": {"vectors": [[-1], [0], [1]]},
    "box": {"lo": [0], "hi": [1]}})";
}

inline Scenario eikonal() { return parse_scenario(eikonal_json()); }
inline Scenario two_balls(double scale = 1.0) { return parse_scenario(two_balls_json(scale)); }
inline Scenario coarse_1d(double horizon = 0.8) { return parse_scenario(coarse_1d_json(horizon)); }

}  // namespace ovp::testing
