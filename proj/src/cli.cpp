#include "ovp/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ovp/io.hpp"
#include "ovp/oracle.hpp"
#include "ovp/scenario.hpp"
#include "ovp/simulate.hpp"
#include "ovp/solver.hpp"
#include "ovp/synthesis.hpp"

namespace ovp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  int threads = 1;
};

std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::logic_error&) {
      throw std::invalid_argument("cannot parse " + what + " value '" + cell + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument("empty " + what);
  return out;
}

Scenario load_scenario(const std::string& path) { return parse_scenario(read_file(path)); }

Point parse_point(const Scenario& s, const std::string& text, const std::string& what) {
  Point x = parse_numbers(text, what);
  if (static_cast<int>(x.size()) != s.dim) {
    throw std::invalid_argument(what + " has " + std::to_string(x.size()) +
                                " coordinates, scenario dimension is " + std::to_string(s.dim));
  }
  return x;
}

MemoryState parse_state(const Scenario& s, const std::string& text) {
  if (text.empty()) return s.initial_state();
  const MemoryState p = MemoryState::parse(text);
  if (p.n != s.num_targets()) {
    throw std::invalid_argument("memory state '" + text + "' has " + std::to_string(p.n) +
                                " bits, scenario has " + std::to_string(s.num_targets()) +
                                " targets");
  }
  return p;
}

void require_admissible(const Scenario& s, const Control& a) {
  for (const auto& c : s.controls) {
    bool same = c.size() == a.size();
    for (std::size_t i = 0; same && i < a.size(); ++i) same = std::abs(c[i] - a[i]) <= 1e-12;
    if (same) return;
  }
  std::string text;
  for (double v : a) text += (text.empty() ? "" : ",") + format_double(v);
  throw IllegalControl("control (" + text + ") is not in the admissible set");
}

/// One control per non-empty line, comma separated; '#' starts a comment line.
std::vector<Control> read_control_file(const Scenario& s, const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<Control> out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    Control a = parse_numbers(line, "control");
    if (static_cast<int>(a.size()) != s.dim) {
      throw std::invalid_argument("control line '" + line + "' does not match dimension " +
                                  std::to_string(s.dim));
    }
    require_admissible(s, a);
    out.push_back(std::move(a));
  }
  if (out.empty()) throw std::invalid_argument("control file " + path + " holds no controls");
  return out;
}

std::vector<int> parse_nodes(const Scenario& s, const std::string& text) {
  const auto values = parse_numbers(text, "--nx");
  std::vector<int> nodes;
  for (double v : values) {
    if (v < 2 || v != std::floor(v)) throw std::invalid_argument("--nx needs integers >= 2");
    nodes.push_back(static_cast<int>(v));
  }
  if (nodes.size() == 1) nodes.assign(static_cast<std::size_t>(s.dim), nodes[0]);
  if (static_cast<int>(nodes.size()) != s.dim) {
    throw std::invalid_argument("--nx needs one count or one per dimension");
  }
  return nodes;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal visiting problems: HJB cascade solver, plan synthesis and oracle checks",
               "ovp"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for sampled checks");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::Range(1, 256));

  // solve
  auto* solve = app.add_subcommand("solve", "Solve every W_p on a space-time grid");
  std::string scenario_path, out_path, nx_text = "41";
  int nt = 100, stride = 1;
  bool svg = false;
  double cap_mb = 2048.0;
  solve->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  solve->add_option("--nx", nx_text, "Nodes per dimension (one value or one per dimension)");
  solve->add_option("--nt", nt, "Time steps K")->check(CLI::PositiveNumber);
  solve->add_option("--out", out_path, "Output directory")->required();
  solve->add_option("--slice-stride", stride, "Write every n-th slice (plan/check need 1)")
      ->check(CLI::PositiveNumber);
  solve->add_flag("--svg", svg, "Heatmap per written slice (d = 2)");
  solve->add_option("--memory-cap-mb", cap_mb, "Refuse solves whose fields exceed this size");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Simulate a control from a start point");
  std::string x0_text, p0_text, control_text, controls_path, mode = "auto";
  std::string switch_times_text, via_text;
  double t0 = 0.0, sim_dt = 0.0;
  simulate->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  simulate->add_option("--x0", x0_text, "Start point, comma separated")->required();
  simulate->add_option("--t0", t0, "Start time");
  simulate->add_option("--p0", p0_text, "Start memory state (default all zeros)");
  auto* control_opt = simulate->add_option("--control", control_text, "Constant control");
  simulate->add_option("--controls", controls_path, "Control file, one sample per line")
      ->excludes(control_opt);
  simulate->add_option("--dt", sim_dt, "Sample length (default horizon / 200)");
  simulate->add_option("--mode", mode, "Memory model")
      ->check(CLI::IsMember({"auto", "switching"}));
  simulate->add_option("--switch-times", switch_times_text, "Switch times (switching mode)");
  simulate->add_option("--via", via_text, "Intermediate states, comma separated");
  simulate->add_option("--out", out_path, "Trajectory CSV (default stdout)");

  // plan
  auto* plan = app.add_subcommand("plan", "Synthesize a visiting plan from solved fields");
  std::string fields_path;
  double stop_tol = PolicyOptions{}.stop_tol;
  plan->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  plan->add_option("--fields", fields_path, "Directory written by solve")->required();
  plan->add_option("--x0", x0_text, "Start point")->required();
  plan->add_option("--t0", t0, "Start time");
  plan->add_option("--p0", p0_text, "Start memory state");
  plan->add_option("--out", out_path, "Plan CSV")->capture_default_str();
  plan->add_option("--dt", sim_dt, "Rollout step (default min dx / 2M)");
  plan->add_option("--stop-tol", stop_tol, "Switch when psi - W is at most this");

  // check
  auto* check = app.add_subcommand("check", "Verify solved fields");
  std::string check_mode = "obstacle";
  int samples = -1, oracle_steps = 0;
  double tol = -1.0, cascade_tol = 1e-9;
  check->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  check->add_option("--fields", fields_path, "Directory written by solve")->required();
  check->add_option("--mode", check_mode, "Check to run")
      ->check(CLI::IsMember({"dpp", "equivalence", "obstacle"}));
  check->add_option("--samples", samples, "Random samples or probes");
  check->add_option("--tol", tol, "Pass threshold");
  check->add_option("--oracle-steps", oracle_steps, "Oracle time steps (default: solver K)");
  check->add_option("--cascade-tol", cascade_tol, "Brute force vs cascade threshold");

  // export
  auto* exp = app.add_subcommand("export", "Re-emit the canonical scenario document");
  exp->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  exp->add_option("--out", out_path, "Output file (default stdout)");

  std::vector<std::string> storage{"ovp"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (solve->parsed()) {
      const Scenario s = load_scenario(scenario_path);
      const SpaceTimeGrid grid = SpaceTimeGrid(s.box_lo, s.box_hi, parse_nodes(s, nx_text), nt, s.horizon);
      SolveOptions so;
      so.threads = g.threads;
      so.memory_cap_bytes = static_cast<std::size_t>(cap_mb * 1024.0 * 1024.0);
      const SolveArtifacts art = solve_all(s, grid, so);
      write_solve_output(out_path, s, art, {stride, svg, g.threads});
      for (const auto& d : art.diagnostics) {
        out << "state " << d.p.to_string() << " level " << d.level << " seconds " << d.seconds
            << " contact " << d.contact_fraction << "\n";
      }
      return kExitOk;
    }

    if (simulate->parsed()) {
      const Scenario s = load_scenario(scenario_path);
      const Point x0 = parse_point(s, x0_text, "--x0");
      const MemoryState p0 = parse_state(s, p0_text);
      const double dt = sim_dt > 0.0 ? sim_dt : s.horizon / 200.0;
      ControlSignal alpha;
      if (!controls_path.empty()) {
        alpha = {t0, dt, read_control_file(s, controls_path)};
      } else {
        Control a = control_text.empty() ? Control(static_cast<std::size_t>(s.dim), 0.0)
                                         : parse_point(s, control_text, "--control");
        require_admissible(s, a);
        alpha = ControlSignal::constant(t0, s.horizon, dt, a);
      }
      Trajectory tr;
      if (mode == "auto") {
        tr = simulate_auto(s, x0, t0, p0, alpha);
      } else {
        HybridControlString u;
        u.alpha = alpha;
        if (!switch_times_text.empty()) u.switch_times = parse_numbers(switch_times_text, "--switch-times");
        std::stringstream ss(via_text);
        std::string cell;
        while (std::getline(ss, cell, ',')) u.destinations.push_back(parse_state(s, cell));
        check_control_string(s, t0, p0, u);
        tr = simulate_switching(s, x0, t0, p0, u);
      }
      if (out_path.empty()) {
        write_trajectory_csv(out, tr, s.dim);
      } else {
        std::ofstream f(out_path, std::ios::binary);
        if (!f) throw IoError("cannot write " + out_path);
        write_trajectory_csv(f, tr, s.dim);
        out << "final_memory=" << tr.rows.back().memory.to_string()
            << " cost=" << format_double(tr.ledger.total()) << "\n";
      }
      return kExitOk;
    }

    if (plan->parsed()) {
      const Scenario s = load_scenario(scenario_path);
      if (!fs::is_directory(fields_path)) throw IoError("fields directory " + fields_path + " not found");
      const SolveArtifacts art = load_solve_output(fields_path, s);
      const Point x0 = parse_point(s, x0_text, "--x0");
      const MemoryState p0 = parse_state(s, p0_text);
      PolicyOptions po;
      po.stop_tol = stop_tol;
      po.sim_dt = sim_dt;
      const VisitingPlan vp = synthesize_trajectory(art, s, x0, t0, p0, po);
      const PlanReport rep = verify_plan(vp);
      if (out_path.empty()) out_path = "plan.csv";
      std::ofstream f(out_path, std::ios::binary);
      if (!f) throw IoError("cannot write " + out_path);
      write_trajectory_csv(f, vp.trajectory, s.dim);
      out << "predicted=" << format_double(vp.predicted_cost)
          << " achieved=" << format_double(vp.achieved_cost) << " gap=" << format_double(rep.gap)
          << "\n";
      for (const auto& v : rep.violations) err << "plan violation: " << v << "\n";
      return rep.ok() ? kExitOk : kExitCheckFailed;
    }

    if (check->parsed()) {
      const Scenario s = load_scenario(scenario_path);
      if (!fs::is_directory(fields_path)) throw IoError("fields directory " + fields_path + " not found");
      const SolveArtifacts art = load_solve_output(fields_path, s);
      json report;
      report["mode"] = check_mode;
      report["seed"] = g.seed;
      bool pass = false;
      if (check_mode == "obstacle") {
        const double t = tol >= 0.0 ? tol : 1e-12;
        double final_max = 0.0;
        for (double v : art.field(s.final_state()).values) final_max = std::max(final_max, std::abs(v));
        const double viol = max_obstacle_violation(art, s);
        pass = viol <= t && final_max == 0.0;
        report["tol"] = t;
        report["max_violation"] = viol;
        report["final_state_max_abs"] = final_max;
      } else if (check_mode == "dpp") {
        const double t = tol >= 0.0 ? tol : 3.0 * (art.grid.max_spacing() + art.grid.dt());
        const DppReport r = check_dpp(art, s, samples >= 0 ? samples : 100, t, g.seed);
        pass = r.pass;
        report["tol"] = r.tol;
        report["samples"] = r.samples;
        report["failures"] = r.failures;
        report["max_obstacle_violation"] = r.obstacle_violation;
        report["max_dpp_violation"] = r.dpp_violation;
      } else {
        const double t = tol >= 0.0 ? tol : 0.1;
        const int steps = oracle_steps > 0 ? oracle_steps : art.grid.time_steps();
        const CoarseInstance ci = CoarseInstance::make(s, steps);
        const auto probes = random_probes(ci, samples >= 0 ? samples : 10, g.seed);
        const EquivalenceReport r =
            check_equivalence(ci, probes, &art, cascade_tol, t, {true, g.threads});
        pass = r.pass;
        report["tol"] = t;
        report["cascade_tol"] = cascade_tol;
        report["oracle_steps"] = steps;
        report["max_cascade_gap"] = r.max_cascade_gap;
        report["max_solver_gap"] = r.max_solver_gap;
        json rows = json::array();
        for (const auto& pr : r.results) {
          rows.push_back({{"x", pr.probe.x},
                          {"t", pr.probe.t},
                          {"p", pr.probe.p.to_string()},
                          {"brute", pr.brute},
                          {"cascade", pr.cascade},
                          {"solver", pr.solver.value_or(std::nan(""))}});
        }
        report["probes"] = rows;
      }
      report["pass"] = pass;
      out << report.dump(2) << "\n";
      return pass ? kExitOk : kExitCheckFailed;
    }

    if (exp->parsed()) {
      const std::string text = export_scenario(load_scenario(scenario_path));
      if (out_path.empty()) {
        out << text;
      } else {
        write_file(out_path, text);
      }
      return kExitOk;
    }
  } catch (const ResourceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitResource;
  } catch (const BudgetExceeded& e) {
    err << "error: " << e.what() << "\n";
    return kExitResource;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace ovp
