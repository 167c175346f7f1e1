#include "ovp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ovp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

bool parse_double(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  if (text.empty()) return false;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<int> written_slices(int steps, int stride) {
  std::vector<int> ks;
  for (int k = 0; k <= steps; k += std::max(stride, 1)) ks.push_back(k);
  if (ks.back() != steps) ks.push_back(steps);
  return ks;
}

std::string field_csv(const ValueField& w, int k) {
  const auto& g = w.grid;
  std::string out;
  for (int i = 0; i < g.dim(); ++i) out += "x" + std::to_string(i + 1) + ",";
  out += "value\n";
  Point x(static_cast<std::size_t>(g.dim()));
  const auto sl = w.slice(k);
  for (std::size_t node = 0; node < g.num_nodes(); ++node) {
    g.node_point(node, x);
    for (double c : x) {
      out += format_double(c);
      out += ',';
    }
    out += format_double(sl[node]);
    out += '\n';
  }
  return out;
}

void read_field_csv(const fs::path& path, ValueField& w, int k) {
  const std::string text = read_file(path);
  const auto& g = w.grid;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty field file " + path.string());
  Point x(static_cast<std::size_t>(g.dim()));
  auto sl = w.slice(k);
  std::size_t node = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (node >= g.num_nodes() || cells.size() != static_cast<std::size_t>(g.dim()) + 1) {
      throw IoError("malformed row " + std::to_string(node + 2) + " in " + path.string());
    }
    g.node_point(node, x);
    for (int i = 0; i < g.dim(); ++i) {
      double c = 0.0;
      if (!parse_double(cells[static_cast<std::size_t>(i)], c) ||
          std::abs(c - x[static_cast<std::size_t>(i)]) > 1e-9 * (1.0 + std::abs(c))) {
        throw IoError("grid coordinate mismatch at row " + std::to_string(node + 2) + " in " +
                      path.string());
      }
    }
    double v = 0.0;
    if (!parse_double(cells.back(), v) || !std::isfinite(v)) {
      throw IoError("bad value at row " + std::to_string(node + 2) + " in " + path.string());
    }
    sl[node++] = v;
  }
  if (node != g.num_nodes()) {
    throw IoError("field file " + path.string() + " has " + std::to_string(node) + " rows, expected " +
                  std::to_string(g.num_nodes()));
  }
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string scenario_digest(const Scenario& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char c : export_scenario(s)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return "fnv1a64:" + hex64(h);
}

std::string field_file_name(MemoryState p, int k) {
  return "W_" + p.to_string() + "_k" + std::to_string(k) + ".csv";
}

std::string manifest_json(const Scenario& s, const SolveArtifacts& art,
                          const SolveOutputOptions& options, bool with_timings) {
  const auto& g = art.grid;
  json m;
  m["tool"] = "ovp";
  m["version"] = kToolVersion;
  m["scenario_digest"] = scenario_digest(s);
  m["grid"] = {{"lo", g.lo()},
               {"hi", g.hi()},
               {"nodes", g.nodes_per_dim()},
               {"time_steps", g.time_steps()},
               {"horizon", g.horizon()}};
  m["solver"] = {{"scheme", "semi-lagrangian"}, {"slice_stride", options.slice_stride}};
  const auto ks = written_slices(g.time_steps(), options.slice_stride);
  m["slices"] = ks;
  json states = json::array();
  json diagnostics = json::array();
  json timings = json::array();
  for (const auto& d : art.diagnostics) {
    states.push_back(d.p.to_string());
    diagnostics.push_back({{"state", d.p.to_string()},
                           {"level", d.level},
                           {"contact_fraction", d.contact_fraction},
                           {"residual_max", d.residual_max},
                           {"residual_mean", d.residual_mean}});
    timings.push_back({{"state", d.p.to_string()}, {"level", d.level}, {"seconds", d.seconds}});
  }
  m["states"] = states;
  m["diagnostics"] = diagnostics;
  if (with_timings) m["timings"] = timings;
  return m.dump(2) + "\n";
}

void write_solve_output(const fs::path& dir, const Scenario& s, const SolveArtifacts& art,
                        const SolveOutputOptions& options) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "manifest.json", manifest_json(s, art, options, true));
  const auto ks = written_slices(art.grid.time_steps(), options.slice_stride);
  for (const auto& d : art.diagnostics) {
    const ValueField& w = art.field(d.p);
    for (int k : ks) {
      write_file(dir / field_file_name(d.p, k), field_csv(w, k));
      if (options.svg && art.grid.dim() == 2) {
        const std::string name = "W_" + d.p.to_string() + "_k" + std::to_string(k) + ".svg";
        write_file(dir / name, slice_svg(art.grid, w.slice(k),
                                         "W_" + d.p.to_string() + " at t=" +
                                             format_double(art.grid.time(k))));
      }
    }
  }
}

SolveArtifacts load_solve_output(const fs::path& dir, const Scenario& s) {
  json m;
  try {
    m = json::parse(read_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw IoError("malformed manifest in " + dir.string() + ": " + e.what());
  }
  try {
    if (m.at("scenario_digest").get<std::string>() != scenario_digest(s)) {
      throw IoError("scenario digest mismatch: fields in " + dir.string() +
                    " were solved for a different scenario");
    }
    const json& gj = m.at("grid");
    SpaceTimeGrid grid(gj.at("lo").get<Point>(), gj.at("hi").get<Point>(),
                       gj.at("nodes").get<std::vector<int>>(), gj.at("time_steps").get<int>(),
                       gj.at("horizon").get<double>());
    const auto ks = m.at("slices").get<std::vector<int>>();
    if (static_cast<int>(ks.size()) != grid.time_steps() + 1) {
      throw IoError("fields in " + dir.string() + " hold a subset of time slices; re-run solve with --slice-stride 1");
    }
    SolveArtifacts art(grid, s.num_targets());
    for (const auto& name : m.at("states")) {
      const MemoryState p = MemoryState::parse(name.get<std::string>());
      if (p.n != s.num_targets()) throw IoError("state size mismatch in manifest");
      ValueField w(p, grid);
      for (int k = 0; k <= grid.time_steps(); ++k) read_field_csv(dir / field_file_name(p, k), w, k);
      art.fields[p.bits] = std::move(w);
      LevelDiagnostics d;
      d.p = p;
      d.level = p.zeros();
      art.diagnostics.push_back(d);
    }
    for (std::uint32_t mask = 0; mask < art.fields.size(); ++mask) {
      if (!art.fields[mask]) throw IoError("manifest is missing state " + MemoryState{mask, art.n}.to_string());
    }
    return art;
  } catch (const json::exception& e) {
    throw IoError("malformed manifest in " + dir.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError("malformed manifest in " + dir.string() + ": " + e.what());
  }
}

void write_trajectory_csv(std::ostream& out, const Trajectory& tr, int dim) {
  out << "time";
  for (int i = 0; i < dim; ++i) out << ",x_" << (i + 1);
  out << ",memory,event,running_cost_so_far,total_discounted_cost\n";
  for (const auto& row : tr.rows) {
    out << format_double(row.t);
    for (double c : row.y) out << ',' << format_double(c);
    out << ',' << row.memory.to_string() << ',' << row.event << ',' << format_double(row.running)
        << ',' << format_double(row.total) << '\n';
  }
}

std::string slice_svg(const SpaceTimeGrid& grid, std::span<const double> slice,
                      const std::string& title) {
  const int nx = grid.nodes_per_dim()[0];
  const int ny = grid.nodes_per_dim()[1];
  const double lo = *std::min_element(slice.begin(), slice.end());
  const double hi = *std::max_element(slice.begin(), slice.end());
  const int cell = std::max(2, 480 / std::max(nx, ny));
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << nx * cell << "\" height=\""
      << ny * cell + 20 << "\">\n";
  svg << "<title>" << title << "</title>\n";
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double v = slice[static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) +
                             static_cast<std::size_t>(i)];
      const double u = hi > lo ? (v - lo) / (hi - lo) : 0.0;
      // dark blue -> yellow
      const int r = static_cast<int>(std::lround(40 + 215 * u));
      const int gg = static_cast<int>(std::lround(30 + 200 * u));
      const int b = static_cast<int>(std::lround(120 - 100 * u));
      svg << "<rect x=\"" << i * cell << "\" y=\"" << (ny - 1 - j) * cell << "\" width=\"" << cell
          << "\" height=\"" << cell << "\" fill=\"rgb(" << r << ',' << gg << ',' << b << ")\"/>\n";
    }
  }
  svg << "<text x=\"4\" y=\"" << ny * cell + 15 << "\" font-size=\"12\">" << title << " ["
      << format_double(lo) << ", " << format_double(hi) << "]</text>\n</svg>\n";
  return svg.str();
}

}  // namespace ovp
