#include "ovp/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace ovp {

using nlohmann::json;

namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ScenarioError("scenario field '" + field + "': " + what);
}

const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) fail(path + key, "missing");
  return obj.at(key);
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) fail(field, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(field, "must be finite");
  return d;
}

Point vector_of(const json& v, const std::string& field, int dim) {
  if (!v.is_array()) fail(field, "expected an array of numbers");
  Point out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(number(v[i], field + "[" + std::to_string(i) + "]"));
  }
  if (dim > 0 && static_cast<int>(out.size()) != dim) {
    fail(field, "expected " + std::to_string(dim) + " components, got " +
                    std::to_string(out.size()));
  }
  return out;
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& path) {
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; })) {
      fail(path + key, "unknown field");
    }
  }
}

double ball_box_gap(const Ball& b, const Box& box) {
  double s = 0.0;
  for (std::size_t i = 0; i < b.center.size(); ++i) {
    const double c = std::clamp(b.center[i], box.lo[i], box.hi[i]);
    s += (b.center[i] - c) * (b.center[i] - c);
  }
  return std::sqrt(s) - b.radius;
}

/// Closed sets: touching counts as intersecting.
bool intersects(const Target& a, const Target& b) {
  if (const auto* ba = std::get_if<Ball>(&a.shape)) {
    if (const auto* bb = std::get_if<Ball>(&b.shape)) {
      double s = 0.0;
      for (std::size_t i = 0; i < ba->center.size(); ++i) {
        const double d = ba->center[i] - bb->center[i];
        s += d * d;
      }
      return std::sqrt(s) <= ba->radius + bb->radius;
    }
    return ball_box_gap(*ba, std::get<Box>(b.shape)) <= 0.0;
  }
  const auto& xa = std::get<Box>(a.shape);
  if (const auto* bb = std::get_if<Ball>(&b.shape)) {
    return ball_box_gap(*bb, xa) <= 0.0;
  }
  const auto& xb = std::get<Box>(b.shape);
  for (std::size_t i = 0; i < xa.lo.size(); ++i) {
    if (xa.hi[i] < xb.lo[i] || xb.hi[i] < xa.lo[i]) return false;
  }
  return true;
}

void target_bounds(const Target& t, Point& lo, Point& hi) {
  if (const auto* b = std::get_if<Ball>(&t.shape)) {
    for (std::size_t i = 0; i < b->center.size(); ++i) {
      lo[i] = b->center[i] - b->radius;
      hi[i] = b->center[i] + b->radius;
    }
  } else {
    const auto& box = std::get<Box>(t.shape);
    lo = box.lo;
    hi = box.hi;
  }
}

double table_value(const RunningCostSpec& rc, double t) {
  const auto& bp = rc.breakpoints;
  if (bp.empty()) return 0.0;
  if (t <= bp.front().first) return bp.front().second;
  if (t >= bp.back().first) return bp.back().second;
  const auto it = std::upper_bound(
      bp.begin(), bp.end(), t,
      [](double v, const std::pair<double, double>& e) { return v < e.first; });
  const auto& [t1, g1] = *it;
  const auto& [t0, g0] = *(it - 1);
  const double w = (t - t0) / (t1 - t0);
  return g0 + w * (g1 - g0);
}

const char* family_name(DynamicsFamily f) {
  return f == DynamicsFamily::kVelocity ? "velocity" : "drift_velocity";
}

const char* family_name(RunningCostFamily f) {
  switch (f) {
    case RunningCostFamily::kConstant: return "constant";
    case RunningCostFamily::kTimeAffine: return "time_affine";
    case RunningCostFamily::kTimeTable: return "time_table";
  }
  return "constant";
}

const char* family_name(SwitchCostFamily f) {
  return f == SwitchCostFamily::kDistanceSum ? "distance_sum"
                                             : "constant_per_discard";
}

}  // namespace

double DynamicsSpec::speed_for(MemoryState p) const {
  const auto it = speed_by_state.find(p.bits);
  return it == speed_by_state.end() ? speed : it->second;
}

std::vector<Control> default_controls(int dim, int directions) {
  std::vector<Control> out;
  if (dim == 1) {
    out = {{-1.0}, {1.0}};
  } else if (dim == 2) {
    for (int k = 0; k < directions; ++k) {
      const double th = 2.0 * std::numbers::pi * k / directions;
      out.push_back({std::cos(th), std::sin(th)});
    }
  } else {
    for (int i = 0; i < dim; ++i) {
      for (double sgn : {1.0, -1.0}) {
        Control a(static_cast<std::size_t>(dim), 0.0);
        a[static_cast<std::size_t>(i)] = sgn;
        out.push_back(a);
      }
    }
  }
  out.push_back(Control(static_cast<std::size_t>(dim), 0.0));
  return out;
}

Scenario parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("scenario is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ScenarioError("scenario must be a JSON object");
  check_keys(doc,
             {"dimension", "targets", "horizon", "discount", "dynamics",
              "running_cost", "switch_cost", "controls", "box"},
             "");

  Scenario s;
  {
    const json& d = require(doc, "dimension", "");
    if (!d.is_number_integer()) fail("dimension", "expected an integer");
    s.dim = d.get<int>();
    if (s.dim < 1 || s.dim > kMaxDim) {
      fail("dimension", "must be in 1.." + std::to_string(kMaxDim));
    }
  }

  const json& targets = require(doc, "targets", "");
  if (!targets.is_array() || targets.empty()) {
    fail("targets", "expected a non-empty array");
  }
  if (targets.size() > static_cast<std::size_t>(kMaxTargets)) {
    throw ScenarioError("lattice too large: " + std::to_string(targets.size()) +
                        " targets, at most " + std::to_string(kMaxTargets) +
                        " supported");
  }
  for (std::size_t j = 0; j < targets.size(); ++j) {
    const std::string path = "targets[" + std::to_string(j) + "].";
    const json& t = targets[j];
    const json& shape = require(t, "shape", path);
    if (shape == "ball") {
      check_keys(t, {"shape", "center", "radius"}, path);
      Ball b{vector_of(require(t, "center", path), path + "center", s.dim),
             number(require(t, "radius", path), path + "radius")};
      if (b.radius <= 0.0) fail(path + "radius", "must be > 0");
      s.targets.push_back({b});
    } else if (shape == "box") {
      check_keys(t, {"shape", "lo", "hi"}, path);
      Box b{vector_of(require(t, "lo", path), path + "lo", s.dim),
            vector_of(require(t, "hi", path), path + "hi", s.dim)};
      for (int i = 0; i < s.dim; ++i) {
        if (!(b.lo[i] < b.hi[i])) fail(path + "hi", "must exceed lo componentwise");
      }
      s.targets.push_back({b});
    } else {
      fail(path + "shape", "expected \"ball\" or \"box\"");
    }
  }

  if (doc.contains("horizon")) s.horizon = number(doc["horizon"], "horizon");
  if (doc.contains("discount")) s.discount = number(doc["discount"], "discount");

  if (doc.contains("dynamics")) {
    const json& dy = doc["dynamics"];
    check_keys(dy, {"family", "speed", "speed_by_state", "drift"}, "dynamics.");
    const std::string fam = dy.value("family", std::string("velocity"));
    if (fam == "velocity") {
      s.dynamics.family = DynamicsFamily::kVelocity;
      if (dy.contains("drift")) fail("dynamics.drift", "only valid for drift_velocity");
    } else if (fam == "drift_velocity") {
      s.dynamics.family = DynamicsFamily::kDriftVelocity;
      s.dynamics.drift = vector_of(require(dy, "drift", "dynamics."),
                                   "dynamics.drift", s.dim);
    } else {
      fail("dynamics.family", "unknown family '" + fam + "'");
    }
    if (dy.contains("speed")) s.dynamics.speed = number(dy["speed"], "dynamics.speed");
    if (dy.contains("speed_by_state")) {
      const json& by = dy["speed_by_state"];
      if (!by.is_object()) fail("dynamics.speed_by_state", "expected an object");
      for (const auto& [key, val] : by.items()) {
        const std::string field = "dynamics.speed_by_state." + key;
        MemoryState p;
        try {
          p = MemoryState::parse(key);
        } catch (const std::invalid_argument& e) {
          fail(field, e.what());
        }
        if (p.n != s.num_targets()) fail(field, "bit string length must equal N");
        s.dynamics.speed_by_state[p.bits] = number(val, field);
      }
    }
  }
  if (s.dynamics.family == DynamicsFamily::kDriftVelocity && s.dynamics.drift.empty()) {
    s.dynamics.drift.assign(static_cast<std::size_t>(s.dim), 0.0);
  }

  if (doc.contains("running_cost")) {
    const json& rc = doc["running_cost"];
    check_keys(rc, {"family", "c0", "c1", "breakpoints"}, "running_cost.");
    const std::string fam = rc.value("family", std::string("constant"));
    if (rc.contains("c0")) s.running_cost.c0 = number(rc["c0"], "running_cost.c0");
    if (fam == "constant") {
      s.running_cost.family = RunningCostFamily::kConstant;
    } else if (fam == "time_affine") {
      s.running_cost.family = RunningCostFamily::kTimeAffine;
      s.running_cost.c1 = number(require(rc, "c1", "running_cost."), "running_cost.c1");
    } else if (fam == "time_table") {
      s.running_cost.family = RunningCostFamily::kTimeTable;
      const json& bp = require(rc, "breakpoints", "running_cost.");
      if (!bp.is_array() || bp.empty()) {
        fail("running_cost.breakpoints", "expected a non-empty array of [t, g] pairs");
      }
      for (std::size_t i = 0; i < bp.size(); ++i) {
        const std::string field = "running_cost.breakpoints[" + std::to_string(i) + "]";
        const Point pair = vector_of(bp[i], field, 2);
        if (!s.running_cost.breakpoints.empty() &&
            pair[0] <= s.running_cost.breakpoints.back().first) {
          fail(field, "breakpoint times must be strictly increasing");
        }
        s.running_cost.breakpoints.emplace_back(pair[0], pair[1]);
      }
    } else {
      fail("running_cost.family", "unknown family '" + fam + "'");
    }
  }

  if (doc.contains("switch_cost")) {
    const json& sc = doc["switch_cost"];
    check_keys(sc, {"family", "per_target", "scale"}, "switch_cost.");
    const std::string fam = sc.value("family", std::string("distance_sum"));
    if (fam == "distance_sum") {
      s.switch_cost.family = SwitchCostFamily::kDistanceSum;
    } else if (fam == "constant_per_discard") {
      s.switch_cost.family = SwitchCostFamily::kConstantPerDiscard;
      s.switch_cost.per_target =
          number(require(sc, "per_target", "switch_cost."), "switch_cost.per_target");
    } else {
      fail("switch_cost.family", "unknown family '" + fam + "'");
    }
    if (sc.contains("scale")) s.switch_cost.scale = number(sc["scale"], "switch_cost.scale");
  }

  if (doc.contains("controls")) {
    const json& c = doc["controls"];
    check_keys(c, {"directions", "vectors"}, "controls.");
    if (c.contains("vectors")) {
      const json& vs = c["vectors"];
      if (!vs.is_array() || vs.empty()) fail("controls.vectors", "expected a non-empty array");
      for (std::size_t i = 0; i < vs.size(); ++i) {
        s.controls.push_back(
            vector_of(vs[i], "controls.vectors[" + std::to_string(i) + "]", s.dim));
      }
      const Control zero(static_cast<std::size_t>(s.dim), 0.0);
      if (std::find(s.controls.begin(), s.controls.end(), zero) == s.controls.end()) {
        s.controls.push_back(zero);
      }
    } else {
      const json& n = require(c, "directions", "controls.");
      if (!n.is_number_integer() || n.get<int>() < 1) {
        fail("controls.directions", "expected a positive integer");
      }
      s.controls = default_controls(s.dim, n.get<int>());
    }
  } else {
    s.controls = default_controls(s.dim, 16);
  }

  if (doc.contains("box")) {
    const json& b = doc["box"];
    check_keys(b, {"lo", "hi"}, "box.");
    s.box_lo = vector_of(require(b, "lo", "box."), "box.lo", s.dim);
    s.box_hi = vector_of(require(b, "hi", "box."), "box.hi", s.dim);
  } else {
    // Bounding box of the targets padded by M*T.
    const double pad = validate(Scenario{s.dim, s.targets, s.horizon, s.discount,
                                         s.dynamics, s.running_cost, s.switch_cost,
                                         s.controls, {}, {}})
                           .dynamics_bound *
                       s.horizon;
    s.box_lo.assign(static_cast<std::size_t>(s.dim), INFINITY);
    s.box_hi.assign(static_cast<std::size_t>(s.dim), -INFINITY);
    Point lo(static_cast<std::size_t>(s.dim)), hi(static_cast<std::size_t>(s.dim));
    for (const auto& t : s.targets) {
      target_bounds(t, lo, hi);
      for (int i = 0; i < s.dim; ++i) {
        s.box_lo[i] = std::min(s.box_lo[i], lo[i] - pad);
        s.box_hi[i] = std::max(s.box_hi[i], hi[i] + pad);
      }
    }
  }

  const ValidationReport report = validate(s);
  if (!report.ok()) {
    std::ostringstream msg;
    msg << "invalid scenario:";
    for (const auto& v : report.violations) msg << ' ' << v << ';';
    throw ScenarioError(msg.str());
  }
  return s;
}

std::string export_scenario(const Scenario& s) {
  json doc;
  doc["dimension"] = s.dim;
  doc["horizon"] = s.horizon;
  doc["discount"] = s.discount;
  json targets = json::array();
  for (const auto& t : s.targets) {
    if (const auto* b = std::get_if<Ball>(&t.shape)) {
      targets.push_back({{"shape", "ball"}, {"center", b->center}, {"radius", b->radius}});
    } else {
      const auto& box = std::get<Box>(t.shape);
      targets.push_back({{"shape", "box"}, {"lo", box.lo}, {"hi", box.hi}});
    }
  }
  doc["targets"] = targets;

  json dy{{"family", family_name(s.dynamics.family)}, {"speed", s.dynamics.speed}};
  if (s.dynamics.family == DynamicsFamily::kDriftVelocity) dy["drift"] = s.dynamics.drift;
  if (!s.dynamics.speed_by_state.empty()) {
    json by = json::object();
    for (const auto& [mask, v] : s.dynamics.speed_by_state) {
      by[MemoryState{mask, s.num_targets()}.to_string()] = v;
    }
    dy["speed_by_state"] = by;
  }
  doc["dynamics"] = dy;

  json rc{{"family", family_name(s.running_cost.family)}, {"c0", s.running_cost.c0}};
  if (s.running_cost.family == RunningCostFamily::kTimeAffine) rc["c1"] = s.running_cost.c1;
  if (s.running_cost.family == RunningCostFamily::kTimeTable) {
    json bp = json::array();
    for (const auto& [t, g] : s.running_cost.breakpoints) bp.push_back({t, g});
    rc["breakpoints"] = bp;
  }
  doc["running_cost"] = rc;

  json sc{{"family", family_name(s.switch_cost.family)}, {"scale", s.switch_cost.scale}};
  if (s.switch_cost.family == SwitchCostFamily::kConstantPerDiscard) {
    sc["per_target"] = s.switch_cost.per_target;
  }
  doc["switch_cost"] = sc;

  doc["controls"] = {{"vectors", s.controls}};
  doc["box"] = {{"lo", s.box_lo}, {"hi", s.box_hi}};
  return doc.dump(2) + "\n";
}

ValidationReport validate(const Scenario& s) {
  ValidationReport r;
  auto violation = [&](std::string v) { r.violations.push_back(std::move(v)); };

  if (s.dim < 1 || s.dim > kMaxDim) violation("dimension out of range");
  const int n = s.num_targets();
  if (n < 1) violation("no targets");
  if (n > kMaxTargets) violation("lattice too large");
  if (!(s.horizon > 0.0)) violation("horizon T must be > 0");
  if (!(s.discount >= 0.0)) violation("discount must be >= 0");
  if (s.controls.empty()) violation("control set is empty");
  for (const auto& a : s.controls) {
    if (static_cast<int>(a.size()) != s.dim) violation("control dimension mismatch");
  }
  if (s.dynamics.family == DynamicsFamily::kDriftVelocity &&
      static_cast<int>(s.dynamics.drift.size()) != s.dim) {
    violation("drift dimension mismatch");
  }
  if (!(s.dynamics.speed > 0.0)) violation("speed must be > 0");
  for (const auto& [mask, v] : s.dynamics.speed_by_state) {
    if (!(v > 0.0)) violation("speed for state " + MemoryState{mask, n}.to_string() + " must be > 0");
  }
  if (!(s.switch_cost.scale > 0.0)) violation("switch cost scale must be > 0");
  if (s.switch_cost.family == SwitchCostFamily::kConstantPerDiscard &&
      !(s.switch_cost.per_target >= 0.0)) {
    violation("switch cost per_target must be >= 0");
  }
  if (!r.violations.empty() && (n < 1 || n > kMaxTargets || s.dim < 1 || s.dim > kMaxDim)) {
    return r;
  }

  // M: exact sup of |f| over the sampled control set and all states.
  double max_speed = s.dynamics.speed;
  for (const auto& [mask, v] : s.dynamics.speed_by_state) max_speed = std::max(max_speed, v);
  double bound = 0.0;
  if (s.dynamics.family == DynamicsFamily::kVelocity) {
    for (const auto& a : s.controls) bound = std::max(bound, max_speed * norm(a));
  } else {
    std::vector<double> speeds{s.dynamics.speed};
    for (const auto& [mask, v] : s.dynamics.speed_by_state) speeds.push_back(v);
    for (double sp : speeds) {
      for (const auto& a : s.controls) {
        double sq = 0.0;
        for (std::size_t i = 0; i < a.size() && i < s.dynamics.drift.size(); ++i) {
          const double c = sp * a[i] + s.dynamics.drift[i];
          sq += c * c;
        }
        bound = std::max(bound, std::sqrt(sq));
      }
    }
  }
  r.dynamics_bound = bound;
  r.lipschitz = 0.0;

  // l is x-independent, so sup and sign are decided by the time profile.
  const auto& rc = s.running_cost;
  double lo = rc.c0, hi = rc.c0;
  switch (rc.family) {
    case RunningCostFamily::kConstant:
      break;
    case RunningCostFamily::kTimeAffine: {
      const double end = rc.c0 + rc.c1 * s.horizon;
      lo = std::min(rc.c0, end);
      hi = std::max(rc.c0, end);
      break;
    }
    case RunningCostFamily::kTimeTable: {
      // Piecewise linear: extrema sit at breakpoints inside [0,T] or at the ends.
      std::vector<double> ts{0.0, s.horizon};
      for (const auto& [t, g] : rc.breakpoints) {
        if (t > 0.0 && t < s.horizon) ts.push_back(t);
      }
      lo = INFINITY;
      hi = -INFINITY;
      for (double t : ts) {
        const double v = rc.c0 + table_value(rc, t);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      break;
    }
  }
  if (lo < 0.0) violation("running cost l negative on [0,T]");
  r.running_cost_sup = hi;
  r.running_cost_modulus = 0.0;

  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (intersects(s.targets[a], s.targets[b])) {
        r.targets_disjoint = false;
        violation("targets not disjoint: " + std::to_string(a + 1) + " and " +
                  std::to_string(b + 1));
      }
    }
  }

  if (static_cast<int>(s.box_lo.size()) != s.dim || static_cast<int>(s.box_hi.size()) != s.dim) {
    violation("computational box dimension mismatch");
  } else {
    for (int i = 0; i < s.dim; ++i) {
      if (!(s.box_lo[i] < s.box_hi[i])) violation("computational box is empty");
    }
    Point tlo(static_cast<std::size_t>(s.dim)), thi(static_cast<std::size_t>(s.dim));
    for (int j = 0; j < n; ++j) {
      target_bounds(s.targets[j], tlo, thi);
      for (int i = 0; i < s.dim; ++i) {
        if (tlo[i] < s.box_lo[i] || thi[i] > s.box_hi[i]) {
          violation("target " + std::to_string(j + 1) + " not inside box");
          break;
        }
      }
    }
  }
  return r;
}

void eval_dynamics_into(const Scenario& s, std::span<const double> x,
                        std::span<const double> a, MemoryState p,
                        std::span<double> out) {
  (void)x;
  const double sp = s.dynamics.speed_for(p);
  const bool drift = s.dynamics.family == DynamicsFamily::kDriftVelocity;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = sp * a[i] + (drift ? s.dynamics.drift[i] : 0.0);
  }
}

Point eval_dynamics(const Scenario& s, std::span<const double> x,
                    std::span<const double> a, MemoryState p) {
  Point out(static_cast<std::size_t>(s.dim));
  eval_dynamics_into(s, x, a, p, out);
  return out;
}

double eval_running_cost(const Scenario& s, std::span<const double>,
                         std::span<const double>, MemoryState, double t) {
  const auto& rc = s.running_cost;
  switch (rc.family) {
    case RunningCostFamily::kConstant: return rc.c0;
    case RunningCostFamily::kTimeAffine: return rc.c0 + rc.c1 * t;
    case RunningCostFamily::kTimeTable: return rc.c0 + table_value(rc, t);
  }
  return rc.c0;
}

double eval_switch_cost(const Scenario& s, std::span<const double> x,
                        MemoryState p, MemoryState next) {
  if (!is_successor(p, next)) {
    throw IllegalSwitch("illegal switch " + p.to_string() + " -> " + next.to_string());
  }
  const auto& sc = s.switch_cost;
  double cost = 0.0;
  for (int j = 0; j < p.n; ++j) {
    if (chi(j, p, next) == 0) continue;
    cost += sc.family == SwitchCostFamily::kDistanceSum ? target_distance(s, x, j)
                                                        : sc.per_target;
  }
  return sc.scale * cost;
}

double target_distance(const Scenario& s, std::span<const double> x, int j) {
  if (j < 0 || j >= s.num_targets()) {
    throw std::out_of_range("target index " + std::to_string(j) + " out of range");
  }
  const Target& t = s.targets[static_cast<std::size_t>(j)];
  if (const auto* b = std::get_if<Ball>(&t.shape)) {
    double sq = 0.0;
    for (std::size_t i = 0; i < b->center.size(); ++i) {
      const double d = x[i] - b->center[i];
      sq += d * d;
    }
    return std::max(std::sqrt(sq) - b->radius, 0.0);
  }
  const auto& box = std::get<Box>(t.shape);
  double sq = 0.0;
  for (std::size_t i = 0; i < box.lo.size(); ++i) {
    const double d = x[i] - std::clamp(x[i], box.lo[i], box.hi[i]);
    sq += d * d;
  }
  return std::sqrt(sq);
}

bool inside_target(const Scenario& s, std::span<const double> x, int j) {
  return target_distance(s, x, j) == 0.0;
}

}  // namespace ovp
