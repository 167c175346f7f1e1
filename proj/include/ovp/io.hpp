#pragma once

#include <filesystem>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ovp/scenario.hpp"
#include "ovp/simulate.hpp"
#include "ovp/solver.hpp"

namespace ovp {

inline constexpr const char* kToolVersion = "1.0.0";

/// Missing, unreadable or malformed files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

/// Shortest round-trip decimal rendering.
std::string format_double(double v);

/// "fnv1a64:<16 hex digits>" over the canonical scenario document.
std::string scenario_digest(const Scenario& s);

std::string field_file_name(MemoryState p, int k);

struct SolveOutputOptions {
  int slice_stride = 1;  // the terminal slice is always written
  bool svg = false;
  int threads = 1;
};

/// Writes manifest.json first, then one CSV per (state, selected slice).
void write_solve_output(const std::filesystem::path& dir, const Scenario& s,
                        const SolveArtifacts& art, const SolveOutputOptions& options);

/// Manifest contents without the wall-clock timings (those vary per run).
std::string manifest_json(const Scenario& s, const SolveArtifacts& art,
                          const SolveOutputOptions& options, bool with_timings);

/// Reloads every field written by write_solve_output. Throws IoError if the
/// manifest digest does not match `s` or any slice is missing or malformed.
SolveArtifacts load_solve_output(const std::filesystem::path& dir, const Scenario& s);

void write_trajectory_csv(std::ostream& out, const Trajectory& tr, int dim);

/// d = 2 heatmap of one slice.
std::string slice_svg(const SpaceTimeGrid& grid, std::span<const double> slice,
                      const std::string& title);

}  // namespace ovp
